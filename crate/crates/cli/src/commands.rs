use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pseudoherm::evolution::{
    krein_norm_series, linspace, mashhoon_papini, transition_probability, EvolutionRequest,
    MashhoonPapiniParams,
};
use pseudoherm::krein::{classify, congruence_to_involutory, pseudounitary_symmetries_exist};
use pseudoherm::linalg::{is_positive_definite, CMatrix, Tolerance};
use pseudoherm::operators::{
    build_charge, build_ctp, build_parity, build_positive_metric, build_quaternionic_t,
    build_reflecting, build_time_reversal, build_tp, canonical_sign_sequence, AntilinearOp,
    SignSequence, SymmetryOperator,
};
use pseudoherm::spectral::{
    analyze_with, check_biorthonormal, synthesize, AnalyzeOptions, GroupKind,
    SpectralDecomposition, SpectralError,
};
use serde_json::{json, Value};

use crate::documents::{
    parse_hamiltonian, read_json, read_text, to_canonical, write_output, DecompositionDocument,
    HamiltonianSource, MatrixDocument, SignsDocument, SynthesisSpecDocument, VectorDocument,
};
use crate::error::CliError;

pub const TOLERANCE_ENV: &str = "PSEUDOHERM_TOL";

#[derive(Debug, Parser)]
#[command(
    name = "pseudoherm",
    version,
    about = "Spectral structure, generalized symmetries and Krein-space evolution of pseudo-Hermitian matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Jordan structure and biorthonormal chains of a matrix.
    Analyze(AnalyzeArgs),
    /// Build symmetry operators (P, C, T, TP, CTP, Pplus, R, Tfrak).
    Construct(ConstructArgs),
    /// Place an operator in the fourfold classification of a metric.
    Classify(ClassifyArgs),
    /// Run the invariant battery and print a pass/fail table.
    Check(CheckArgs),
    /// Transition probabilities or Krein-norm series on a time grid.
    Evolve(EvolveArgs),
    /// Built-in model Hamiltonians.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Build a matrix with prescribed Jordan structure.
    Synthesize(SynthesizeArgs),
}

#[derive(Debug, Args)]
pub struct TolArg {
    /// Uniform absolute and relative tolerance (overrides PSEUDOHERM_TOL).
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub tol: TolArg,
    /// Single-linkage radius for eigenvalue clustering.
    #[arg(long)]
    pub cluster_radius: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OpName {
    #[value(name = "P")]
    P,
    #[value(name = "C")]
    C,
    #[value(name = "T")]
    T,
    #[value(name = "TP")]
    Tp,
    #[value(name = "CTP")]
    Ctp,
    #[value(name = "Pplus")]
    Pplus,
    #[value(name = "R")]
    R,
    #[value(name = "Tfrak")]
    Tfrak,
}

impl OpName {
    fn label(&self) -> &'static str {
        match self {
            OpName::P => "P",
            OpName::C => "C",
            OpName::T => "T",
            OpName::Tp => "TP",
            OpName::Ctp => "CTP",
            OpName::Pplus => "Pplus",
            OpName::R => "R",
            OpName::Tfrak => "Tfrak",
        }
    }
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// Matrix document, decomposition document or analyze report.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub ops: Vec<OpName>,
    /// `canonical`, `plus` or a signs document.
    #[arg(long, default_value = "canonical")]
    pub sigma: String,
    #[command(flatten)]
    pub tol: TolArg,
    #[arg(long)]
    pub cluster_radius: Option<f64>,
    /// Combined report file (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory receiving one matrix document per operator.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub metric: PathBuf,
    #[arg(long)]
    pub op: PathBuf,
    #[command(flatten)]
    pub tol: TolArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "canonical")]
    pub sigma: String,
    #[command(flatten)]
    pub tol: TolArg,
    #[arg(long)]
    pub cluster_radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `pplus`, `parity` (canonical signs) or a matrix document.
    #[arg(long, default_value = "pplus")]
    pub metric: String,
    #[arg(long)]
    pub initial: PathBuf,
    /// Target state; switches to probability mode.
    #[arg(long = "final")]
    pub final_state: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub t1: f64,
    /// Number of grid points including both ends.
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
    #[command(flatten)]
    pub tol: TolArg,
    #[arg(long)]
    pub cluster_radius: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// H = [[E, ir], [−is, E]] in its conventional basis.
    Mashhoon(MashhoonArgs),
}

#[derive(Debug, Args)]
pub struct MashhoonArgs {
    #[arg(long = "E", allow_hyphen_values = true)]
    pub e: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub r: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub s: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Companion decomposition document.
    #[arg(long)]
    pub decomposition: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub tol: TolArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub decomposition: Option<PathBuf>,
}

/// Explicit value, else the environment variable, else the library default.
pub fn resolve_tolerance(arg: &TolArg) -> Result<Tolerance, CliError> {
    let value =
        match arg.tol {
            Some(v) => Some(v),
            None => match std::env::var(TOLERANCE_ENV) {
                Ok(s) => Some(s.trim().parse::<f64>().map_err(|_| {
                    CliError::Usage(format!("{TOLERANCE_ENV}={s:?} is not a number"))
                })?),
                Err(_) => None,
            },
        };
    match value {
        Some(v) => Ok(Tolerance::uniform(v)?),
        None => Ok(Tolerance::default()),
    }
}

fn tol_json(tol: Tolerance) -> Value {
    json!({ "abs": tol.abs, "rel": tol.rel })
}

fn analyze_options(radius: Option<f64>) -> Result<AnalyzeOptions, CliError> {
    if let Some(r) = radius {
        if !(r.is_finite() && r > 0.0) {
            return Err(CliError::Usage(format!(
                "cluster radius {r} must be positive"
            )));
        }
    }
    Ok(AnalyzeOptions {
        cluster_radius: radius,
        ..AnalyzeOptions::default()
    })
}

/// Hamiltonian and decomposition from a matrix (analyzed) or decomposition
/// document (taken as given).
fn load_system(
    path: &Path,
    tol: Tolerance,
    radius: Option<f64>,
) -> Result<(CMatrix, SpectralDecomposition), CliError> {
    let (h, dec) = load_system_lenient(path, tol, radius)?;
    Ok((h, dec?))
}

/// As `load_system`, but analysis failures are returned alongside the matrix.
fn load_system_lenient(
    path: &Path,
    tol: Tolerance,
    radius: Option<f64>,
) -> Result<(CMatrix, Result<SpectralDecomposition, SpectralError>), CliError> {
    match parse_hamiltonian(&read_text(path)?)? {
        HamiltonianSource::Matrix(doc) => {
            if doc.antilinear {
                return Err(CliError::Usage(
                    "the Hamiltonian must be a linear operator".into(),
                ));
            }
            let h = doc.to_matrix()?;
            let dec = analyze_with(&h, tol, &analyze_options(radius)?);
            Ok((h, dec))
        }
        HamiltonianSource::Decomposition(doc) => {
            let dec = doc.to_decomposition()?;
            Ok((dec.reconstruct(), Ok(dec)))
        }
    }
}

fn resolve_sigma(spec: &str, dec: &SpectralDecomposition) -> Result<SignSequence, CliError> {
    match spec {
        "canonical" => Ok(canonical_sign_sequence(dec)),
        "plus" => Ok(SignSequence::all_plus(dec)),
        path => {
            let doc: SignsDocument = read_json(Path::new(path))?;
            Ok(SignSequence::new(dec, doc.signs)?)
        }
    }
}

fn load_matrix(path: &Path) -> Result<MatrixDocument, CliError> {
    read_json(path)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Construct(a) => cmd_construct(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Check(a) => cmd_check(a),
        Command::Evolve(a) => cmd_evolve(a),
        Command::Model(ModelCommand::Mashhoon(a)) => cmd_mashhoon(a),
        Command::Synthesize(a) => cmd_synthesize(a),
    }
}

fn biorthonormality_threshold(dec: &SpectralDecomposition, tol: Tolerance) -> f64 {
    let scale = dec.psi_matrix().norm_fro() * dec.phi_matrix().norm_fro();
    tol.threshold(dec.n() as f64) * scale.max(1.0)
}

fn residual_json(value: f64, threshold: f64) -> Value {
    json!({ "value": value, "threshold": threshold, "pass": value <= threshold })
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let tol = resolve_tolerance(&args.tol)?;
    let doc: MatrixDocument = load_matrix(&args.input)?;
    let h = doc.to_matrix()?;
    let dec = analyze_with(&h, tol, &analyze_options(args.cluster_radius)?)?;
    let bio = check_biorthonormal(&dec);
    let bio_thr = biorthonormality_threshold(&dec, tol);
    let recon = dec.reconstruct().distance(&h) / h.norm_fro().max(1.0);
    let recon_thr = tol.threshold(dec.n() as f64);
    let mut warnings = Vec::new();
    if recon > recon_thr {
        warnings.push(format!(
            "reconstruction residual {recon:.3e} exceeds {recon_thr:.3e}"
        ));
    }
    if bio.max() > bio_thr {
        warnings.push(format!(
            "biorthonormality residual {:.3e} exceeds {bio_thr:.3e}",
            bio.max()
        ));
    }
    let report = json!({
        "command": "analyze",
        "tolerance": tol_json(tol),
        "cluster_radius": args.cluster_radius,
        "decomposition": DecompositionDocument::from_decomposition(&dec, doc.label.clone()),
        "summary": {
            "n": dec.n(),
            "real_spectrum": dec.is_real_spectrum(),
            "diagonalizable": dec.is_diagonalizable(),
            "eigenvector_count": dec.eigenvector_count(),
            "groups": dec.groups().iter().map(|g| json!({
                "eigenvalue": [g.eigenvalue.re, g.eigenvalue.im],
                "real": g.kind == GroupKind::Real,
                "block_dims": g.block_dims(),
            })).collect::<Vec<_>>(),
        },
        "residuals": {
            "gram": residual_json(bio.gram_residual, bio_thr),
            "completeness": residual_json(bio.completeness_residual, bio_thr),
            "reconstruction": residual_json(recon, recon_thr),
        },
        "warnings": warnings,
    });
    write_output(args.out.as_deref(), &to_canonical(&report)?)
}

fn build_operator(
    op: OpName,
    dec: &SpectralDecomposition,
    sigma: &SignSequence,
) -> Result<Vec<(String, SymmetryOperator)>, CliError> {
    let lin = |m: CMatrix| SymmetryOperator::Linear(m);
    let anti = |a: AntilinearOp| SymmetryOperator::Antilinear(a);
    Ok(match op {
        OpName::P => vec![("P".into(), lin(build_parity(dec, sigma)?))],
        OpName::C => vec![("C".into(), lin(build_charge(dec, sigma)?))],
        OpName::T => vec![("T".into(), anti(build_time_reversal(dec)?))],
        OpName::Tp => vec![("TP".into(), anti(build_tp(dec, sigma)?))],
        OpName::Ctp => vec![("CTP".into(), anti(build_ctp(dec, sigma, sigma)?))],
        OpName::Pplus => vec![("Pplus".into(), lin(build_positive_metric(dec)?))],
        OpName::R => {
            let rp = build_reflecting(dec)?;
            vec![
                ("R".into(), lin(rp.r)),
                ("Ppaired".into(), lin(rp.p_paired)),
            ]
        }
        OpName::Tfrak => vec![("Tfrak".into(), anti(build_quaternionic_t(dec)?))],
    })
}

fn operator_document(name: &str, op: &SymmetryOperator) -> MatrixDocument {
    MatrixDocument::from_matrix(op.matrix(), op.is_antilinear(), Some(name.to_string()))
}

fn cmd_construct(args: ConstructArgs) -> Result<(), CliError> {
    let tol = resolve_tolerance(&args.tol)?;
    let (_, dec) = load_system(&args.input, tol, args.cluster_radius)?;
    let sigma = resolve_sigma(&args.sigma, &dec)?;
    let mut built = Vec::new();
    for &op in &args.ops {
        for item in build_operator(op, &dec, &sigma)? {
            if !built
                .iter()
                .any(|(n, _): &(String, SymmetryOperator)| n == &item.0)
            {
                built.push(item);
            }
        }
    }
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        for (name, op) in &built {
            let path = dir.join(format!("{name}.json"));
            write_output(Some(&path), &to_canonical(&operator_document(name, op))?)?;
        }
    }
    let operators: serde_json::Map<String, Value> = built
        .iter()
        .map(|(name, op)| {
            Ok((
                name.clone(),
                serde_json::to_value(operator_document(name, op))?,
            ))
        })
        .collect::<Result<_, CliError>>()?;
    let report = json!({
        "command": "construct",
        "tolerance": tol_json(tol),
        "requested": args.ops.iter().map(|o| o.label()).collect::<Vec<_>>(),
        "sigma": sigma.signs(),
        "operators": operators,
    });
    if args.out.is_some() || args.out_dir.is_none() {
        write_output(args.out.as_deref(), &to_canonical(&report)?)?;
    }
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), CliError> {
    let tol = resolve_tolerance(&args.tol)?;
    let metric_doc = load_matrix(&args.metric)?;
    if metric_doc.antilinear {
        return Err(CliError::Usage(
            "the metric must be a linear operator".into(),
        ));
    }
    let metric = metric_doc.to_matrix()?;
    let op_doc = load_matrix(&args.op)?;
    let m = op_doc.to_matrix()?;
    let op = if op_doc.antilinear {
        SymmetryOperator::Antilinear(AntilinearOp::new(m))
    } else {
        SymmetryOperator::Linear(m)
    };
    let result = classify(&op, &metric, tol)?;
    let residuals: serde_json::Map<String, Value> = result
        .residuals
        .iter()
        .map(|(class, r)| (class.name().to_string(), json!(r)))
        .collect();
    let report = json!({
        "command": "classify",
        "tolerance": tol_json(tol),
        "class": result.class.name(),
        "antilinear": op.is_antilinear(),
        "residuals": residuals,
        "threshold": result.threshold,
    });
    write_output(args.out.as_deref(), &to_canonical(&report)?)
}

struct CheckRow {
    name: String,
    residual: f64,
    threshold: f64,
}

fn rel(num: f64, den: f64) -> f64 {
    num / den.max(f64::MIN_POSITIVE)
}

fn anti_commutator(h: &CMatrix, a: &AntilinearOp) -> f64 {
    rel(
        (&(h * &a.m) - &(&a.m * &h.conj())).norm_fro(),
        h.norm_fro() * a.m.norm_fro(),
    )
}

fn square_defect(op: &SymmetryOperator, target: f64) -> f64 {
    let n = op.n();
    rel(
        (&op.square() - &CMatrix::identity(n).scale_re(target)).norm_fro(),
        op.matrix().norm_fro().powi(2),
    )
}

/// Relative residuals of the defining relations, plus informational notes.
fn invariant_battery(
    h: &CMatrix,
    dec: &SpectralDecomposition,
    sigma: &SignSequence,
    tol: Tolerance,
) -> Result<(Vec<CheckRow>, Vec<String>), CliError> {
    let n = dec.n();
    let thr = tol.threshold(n as f64);
    let mut rows = Vec::new();
    let mut push = |name: &str, residual: f64, threshold: f64| {
        rows.push(CheckRow {
            name: name.to_string(),
            residual,
            threshold,
        })
    };
    let mut notes = Vec::new();
    let bio = check_biorthonormal(dec);
    let bio_thr = biorthonormality_threshold(dec, tol);
    push("biorthonormality", bio.gram_residual, bio_thr);
    push("completeness", bio.completeness_residual, bio_thr);
    push(
        "reconstruction",
        rel(dec.reconstruct().distance(h), h.norm_fro().max(1.0)),
        thr,
    );
    let p = build_parity(dec, sigma)?;
    let c = build_charge(dec, sigma)?;
    let t = build_time_reversal(dec)?;
    let tp = build_tp(dec, sigma)?;
    let ctp = build_ctp(dec, sigma, sigma)?;
    let hn = h.norm_fro();
    push(
        "P = P†",
        rel((&p - &p.adjoint()).norm_fro(), p.norm_fro()),
        thr,
    );
    push(
        "P H = H† P",
        rel(
            (&(&p * h) - &(&h.adjoint() * &p)).norm_fro(),
            p.norm_fro() * hn,
        ),
        thr,
    );
    push(
        "C² = I",
        square_defect(&SymmetryOperator::Linear(c.clone()), 1.0),
        thr,
    );
    push(
        "[H, C] = 0",
        rel(h.commutator(&c).norm_fro(), hn * c.norm_fro()),
        thr,
    );
    push(
        "T H† T⁻¹ = H",
        rel(
            (&(h * &t.m) - &(&t.m * &h.transpose())).norm_fro(),
            hn * t.m.norm_fro(),
        ),
        thr,
    );
    push(
        "T matrix symmetric",
        rel((&t.m - &t.m.transpose()).norm_fro(), t.m.norm_fro()),
        thr,
    );
    push(
        "(TP)² = I",
        square_defect(&SymmetryOperator::Antilinear(tp.clone()), 1.0),
        thr,
    );
    push("[H, TP] = 0", anti_commutator(h, &tp), thr);
    push(
        "(CTP)² = I",
        square_defect(&SymmetryOperator::Antilinear(ctp.clone()), 1.0),
        thr,
    );
    push("[H, CTP] = 0", anti_commutator(h, &ctp), thr);
    push(
        "[C, TP] = 0",
        rel(
            (&(&c * &tp.m) - &(&tp.m * &c.conj())).norm_fro(),
            c.norm_fro() * tp.m.norm_fro(),
        ),
        thr,
    );
    let canon = canonical_sign_sequence(dec);
    let cong = congruence_to_involutory(dec, &canon, None, tol)?;
    push("congruent metric involutory", cong.max_residual(), thr);
    let tr = cong.trace();
    push("canonical trace integral", (tr - tr.round()).abs(), thr);
    notes.push(format!(
        "canonical involutory metric trace: {:.0}",
        tr.round()
    ));
    match build_positive_metric(dec) {
        Ok(pp) => {
            let pd = is_positive_definite(&pp, tol);
            push("Pplus positive definite", if pd { 0.0 } else { 1.0 }, 0.0);
            push(
                "Pplus H = H† Pplus",
                rel(
                    (&(&pp * h) - &(&h.adjoint() * &pp)).norm_fro(),
                    pp.norm_fro() * hn,
                ),
                thr,
            );
            notes.push("positive metric Pplus: available (Theorem 1)".into());
        }
        Err(e) => notes.push(format!("positive metric Pplus: {e}")),
    }
    let decision = pseudounitary_symmetries_exist(dec)?;
    if let Some(w) = &decision.witness {
        let r = SymmetryOperator::Linear(w.reflecting.r.clone());
        let pp = &w.reflecting.p_paired;
        let rpr = &(&w.reflecting.r.adjoint() * pp) * &w.reflecting.r;
        push("R² = I", square_defect(&r, 1.0), thr);
        push(
            "[H, R] = 0",
            rel(
                h.commutator(&w.reflecting.r).norm_fro(),
                hn * w.reflecting.r.norm_fro(),
            ),
            thr,
        );
        push(
            "R† P R = −P",
            rel(
                (&rpr + pp).norm_fro(),
                pp.norm_fro() * w.reflecting.r.norm_fro().powi(2),
            ),
            thr,
        );
        push(
            "Tfrak² = −I",
            square_defect(
                &SymmetryOperator::Antilinear(w.quaternionic_t.clone()),
                -1.0,
            ),
            thr,
        );
        push("[H, Tfrak] = 0", anti_commutator(h, &w.quaternionic_t), thr);
        notes.push("pseudounitary symmetries R, Tfrak: exist (Proposition 4, Theorem 2)".into());
    } else {
        let detail: Vec<String> = decision
            .violations
            .iter()
            .map(|v| format!("E = {} dims {:?}", v.eigenvalue, v.block_dims))
            .collect();
        notes.push(format!(
            "pseudounitary symmetries R, Tfrak: absent (Proposition 4, Theorem 2); unpaired real blocks: {}",
            detail.join("; ")
        ));
    }
    Ok((rows, notes))
}

fn cmd_check(args: CheckArgs) -> Result<(), CliError> {
    let tol = resolve_tolerance(&args.tol)?;
    let (h, dec) = load_system_lenient(&args.input, tol, args.cluster_radius)?;
    let (rows, notes) = match dec {
        Ok(dec) => {
            let sigma = resolve_sigma(&args.sigma, &dec)?;
            invariant_battery(&h, &dec, &sigma, tol)?
        }
        Err(SpectralError::NotPaired(z)) => (
            vec![CheckRow {
                name: "spectrum closed under conjugation".into(),
                residual: 1.0,
                threshold: 0.0,
            }],
            vec![format!(
                "NotPaired: eigenvalue {z} has no conjugate partner; the matrix is not pseudo-Hermitian"
            )],
        ),
        Err(e) => return Err(e.into()),
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<30} {:>12} {:>12}  result",
        "relation", "residual", "threshold"
    );
    let mut failed = 0;
    for row in &rows {
        let pass = row.residual <= row.threshold;
        if !pass {
            failed += 1;
        }
        let _ = writeln!(
            out,
            "{:<30} {:>12.3e} {:>12.3e}  {}",
            row.name,
            row.residual,
            row.threshold,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    for note in &notes {
        let _ = writeln!(out, "note: {note}");
    }
    write_output(None, &out)?;
    if failed > 0 {
        Err(CliError::ChecksFailed(failed))
    } else {
        Ok(())
    }
}

fn cmd_evolve(args: EvolveArgs) -> Result<(), CliError> {
    let tol = resolve_tolerance(&args.tol)?;
    let (h, dec) = load_system(&args.input, tol, args.cluster_radius)?;
    let metric = match args.metric.as_str() {
        "pplus" => build_positive_metric(&dec)?,
        "parity" => build_parity(&dec, &canonical_sign_sequence(&dec))?,
        path => {
            let doc = load_matrix(Path::new(path))?;
            if doc.antilinear {
                return Err(CliError::Usage(
                    "the metric must be a linear operator".into(),
                ));
            }
            doc.to_matrix()?
        }
    };
    let initial: VectorDocument = read_json(&args.initial)?;
    if args.steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    let grid = linspace(args.t0, args.t1, args.steps);
    let req = EvolutionRequest::new(h, metric, initial.to_vector()?, grid.clone())?;
    let (header, values) = match &args.final_state {
        Some(path) => {
            let target: VectorDocument = read_json(path)?;
            (
                "probability",
                transition_probability(&req, &target.to_vector()?, tol)?,
            )
        }
        None => ("krein_norm", krein_norm_series(&req, tol)?),
    };
    let mut csv = format!("t,{header}\n");
    for (t, v) in grid.iter().zip(&values) {
        let _ = writeln!(csv, "{t:.14e},{v:.14e}");
    }
    write_output(args.out.as_deref(), &csv)
}

fn cmd_mashhoon(args: MashhoonArgs) -> Result<(), CliError> {
    let params = MashhoonPapiniParams {
        e: args.e,
        r: args.r,
        s: args.s,
    };
    let model = mashhoon_papini(params)?;
    let label = format!(
        "mashhoon-papini E={} r={} s={} regime={}",
        args.e,
        args.r,
        args.s,
        model.regime.name()
    );
    if let Some(path) = &args.decomposition {
        let doc =
            DecompositionDocument::from_decomposition(&model.decomposition, Some(label.clone()));
        write_output(Some(path), &to_canonical(&doc)?)?;
    }
    let doc = MatrixDocument::from_matrix(&model.h, false, Some(label));
    write_output(args.out.as_deref(), &to_canonical(&doc)?)
}

fn cmd_synthesize(args: SynthesizeArgs) -> Result<(), CliError> {
    let tol = resolve_tolerance(&args.tol)?;
    let spec_doc: SynthesisSpecDocument = read_json(&args.spec)?;
    let (spec, seed) = spec_doc.to_spec(args.seed)?;
    let (h, dec) = synthesize(&spec, tol)?;
    let label = match seed {
        Some(s) => format!("synthesized seed={s}"),
        None => "synthesized explicit-basis".to_string(),
    };
    if let Some(s) = seed {
        eprintln!("seed: {s}");
    }
    if let Some(path) = &args.decomposition {
        let doc = DecompositionDocument::from_decomposition(&dec, Some(label.clone()));
        write_output(Some(path), &to_canonical(&doc)?)?;
    }
    let doc = MatrixDocument::from_matrix(&h, false, Some(label));
    write_output(args.out.as_deref(), &to_canonical(&doc)?)
}
