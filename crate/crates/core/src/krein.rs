//! Indefinite inner products, congruence to an involutory metric, and the
//! fourfold classification of symmetries in a Krein space.

use thiserror::Error;

use crate::linalg::{
    hermitian_eigen, hermitian_residual, inner, outer, CMatrix, LinalgError, Lu, Tolerance, C64,
};
use crate::operators::{
    antilinear_compose, build_charge, build_ctp, build_parity, build_quaternionic_t,
    build_reflecting, build_time_reversal, build_tp, canonical_sign_sequence, real_block_pairing,
    AntilinearOp, BlockViolation, OperatorError, ReflectingPair, SignSequence, SymmetryOperator,
};
use crate::spectral::{GroupKind, SpectralDecomposition};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KreinError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("metric is singular at tolerance")]
    SingularMetric,
    #[error("metric is not Hermitian (residual {0:.3e})")]
    NonHermitianMetric(f64),
    #[error("operator is singular at tolerance")]
    SingularOperator,
    #[error("operator is not antiunitary with respect to the metric (class {0:?})")]
    NotAntiunitary(SymmetryClass),
    #[error("leading Toeplitz coefficient of group {group}, block {block} is zero")]
    ZeroLeadingCoefficient { group: usize, block: usize },
    #[error("invalid commutant parameters: {0}")]
    InvalidParams(String),
    #[error("basis is not orthonormal (residual {0:.3e})")]
    NotOrthonormal(f64),
}

/// `⟨ψ|η|φ⟩`, conjugate-linear in `ψ`.
pub fn krein_inner(psi: &[C64], phi: &[C64], metric: &CMatrix) -> Result<C64, KreinError> {
    let n = metric.n();
    if psi.len() != n || phi.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: if psi.len() != n { psi.len() } else { phi.len() },
        }
        .into());
    }
    Ok(inner(psi, &metric.matvec(phi)))
}

/// Hermitian invertible metric with the orthogonal projectors onto its
/// positive and negative eigenspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct KreinSpace {
    pub metric: CMatrix,
    pub plus_projector: CMatrix,
    pub minus_projector: CMatrix,
    pub signature: (usize, usize),
}

fn check_metric(metric: &CMatrix, tol: Tolerance) -> Result<(), KreinError> {
    let herm = hermitian_residual(metric);
    if herm > tol.scaled(metric) {
        return Err(KreinError::NonHermitianMetric(herm));
    }
    Ok(())
}

pub fn build_krein_space(metric: &CMatrix, tol: Tolerance) -> Result<KreinSpace, KreinError> {
    check_metric(metric, tol)?;
    let (values, vectors) = hermitian_eigen(metric)?;
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let cut = tol.threshold(scale);
    if values.iter().any(|v| v.abs() <= cut) {
        return Err(KreinError::SingularMetric);
    }
    let n = metric.n();
    let mut plus = CMatrix::zeros(n);
    let mut minus = CMatrix::zeros(n);
    let mut signature = (0, 0);
    for (k, &v) in values.iter().enumerate() {
        let col = vectors.col(k);
        if v > 0.0 {
            plus = &plus + &outer(&col, &col);
            signature.0 += 1;
        } else {
            minus = &minus + &outer(&col, &col);
            signature.1 += 1;
        }
    }
    Ok(KreinSpace {
        metric: metric.clone(),
        plus_projector: plus,
        minus_projector: minus,
        signature,
    })
}

/// Result of moving to the basis `S = Σ|ψ⟩⟨u|`, in which the parity becomes
/// an involutory Hermitian metric.
#[derive(Debug, Clone, PartialEq)]
pub struct CongruenceResult {
    pub s: CMatrix,
    pub h_tilde: CMatrix,
    pub p_tilde: CMatrix,
    pub c_tilde: CMatrix,
    pub t_tilde: AntilinearOp,
    pub plus_projector: CMatrix,
    pub minus_projector: CMatrix,
}

impl CongruenceResult {
    pub fn trace(&self) -> f64 {
        self.p_tilde.trace().re
    }

    /// Largest of the residuals of `P̃² = I`, `P̃ = P̃†` and the three mutual
    /// commutation relations among `P̃`, `C̃`, `T̃`.
    pub fn max_residual(&self) -> f64 {
        let n = self.p_tilde.n();
        let ident = CMatrix::identity(n);
        let p = &self.p_tilde;
        let c = &self.c_tilde;
        let m = &self.t_tilde.m;
        [
            (&(p * p) - &ident).norm_fro(),
            hermitian_residual(p),
            p.commutator(c).norm_fro(),
            (&(p * m) - &(m * &p.conj())).norm_fro(),
            (&(c * m) - &(m * &c.conj())).norm_fro(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `S`, `H̃ = S⁻¹HS`, `P̃ = S†P_σS`, `C̃ = S⁻¹C_σS` and `T̃ = S⁻¹T(S†)⁻¹`.
/// `basis_f` holds the orthonormal vectors `u` as columns (identity when
/// omitted).
pub fn congruence_to_involutory(
    dec: &SpectralDecomposition,
    sigma: &SignSequence,
    basis_f: Option<&CMatrix>,
    tol: Tolerance,
) -> Result<CongruenceResult, KreinError> {
    let n = dec.n();
    let ident = CMatrix::identity(n);
    let u = match basis_f {
        Some(u) => {
            let res = (&(&u.adjoint() * u) - &ident).norm_fro();
            if u.n() != n || res > tol.threshold(n as f64) {
                return Err(KreinError::NotOrthonormal(res));
            }
            u.clone()
        }
        None => ident.clone(),
    };
    let s = &dec.psi_matrix() * &u.adjoint();
    let s_inv = &u * &dec.phi_matrix().adjoint();
    let h = dec.reconstruct();
    let p = build_parity(dec, sigma)?;
    let c = build_charge(dec, sigma)?;
    let t = build_time_reversal(dec)?;
    let p_tilde = &(&s.adjoint() * &p) * &s;
    let half = |sign: f64| (&ident + &p_tilde.scale_re(sign)).scale_re(0.5);
    Ok(CongruenceResult {
        h_tilde: &(&s_inv * &h) * &s,
        c_tilde: &(&s_inv * &c) * &s,
        t_tilde: AntilinearOp::new(&(&s_inv * &t.m) * &s_inv.transpose()),
        plus_projector: half(1.0),
        minus_projector: half(-1.0),
        p_tilde,
        s,
    })
}

/// `Tr P̃_σ = Σ σ` over the odd-dimensional blocks of real eigenvalues.
pub fn involutory_trace(dec: &SpectralDecomposition, sigma: &SignSequence) -> i64 {
    let mut tr = 0;
    for (g, group) in dec.groups().iter().enumerate() {
        if group.kind != GroupKind::Real {
            continue;
        }
        for (a, chain) in group.chains.iter().enumerate() {
            if chain.len() % 2 == 1 {
                tr += sigma.get(g, a) as i64;
            }
        }
    }
    tr
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymmetryClass {
    PUnitary,
    PAntiunitary,
    PPseudounitary,
    PPseudoantiunitary,
    None,
}

impl SymmetryClass {
    pub fn name(&self) -> &'static str {
        match self {
            SymmetryClass::PUnitary => "PUnitary",
            SymmetryClass::PAntiunitary => "PAntiunitary",
            SymmetryClass::PPseudounitary => "PPseudounitary",
            SymmetryClass::PPseudoantiunitary => "PPseudoantiunitary",
            SymmetryClass::None => "None",
        }
    }
}

/// Classification outcome with the relative residual of every applicable
/// defining condition (`None` for conditions of the other linearity).
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: SymmetryClass,
    pub residuals: [(SymmetryClass, Option<f64>); 4],
    pub threshold: f64,
}

/// Matrix-level tests of the four defining conditions. For a linear `U`:
/// `U†PU = ±P`; for an antilinear `M∘K`: `M†PM = ±Pᵀ`. Residuals are
/// `‖X†PX ∓ Q‖_F / (‖X†PX‖_F + ‖Q‖_F)`, compared to `tol.abs + tol.rel·n`;
/// a class is assigned only when the runner-up is at least ten times that.
pub fn classify(
    op: &SymmetryOperator,
    metric: &CMatrix,
    tol: Tolerance,
) -> Result<Classification, KreinError> {
    let n = metric.n();
    if op.n() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: op.n(),
        }
        .into());
    }
    check_metric(metric, tol)?;
    Lu::factor(metric, tol).map_err(|_| KreinError::SingularMetric)?;
    let x = op.matrix();
    Lu::factor(x, tol).map_err(|_| KreinError::SingularOperator)?;
    let xpx = &(&x.adjoint() * metric) * x;
    let target = if op.is_antilinear() {
        metric.transpose()
    } else {
        metric.clone()
    };
    let denom = (xpx.norm_fro() + target.norm_fro()).max(f64::MIN_POSITIVE);
    let same = (&xpx - &target).norm_fro() / denom;
    let flipped = (&xpx + &target).norm_fro() / denom;
    let (keep, flip) = if op.is_antilinear() {
        (
            SymmetryClass::PAntiunitary,
            SymmetryClass::PPseudoantiunitary,
        )
    } else {
        (SymmetryClass::PUnitary, SymmetryClass::PPseudounitary)
    };
    let threshold = tol.threshold(n as f64);
    let (best, best_res, runner) = if same <= flipped {
        (keep, same, flipped)
    } else {
        (flip, flipped, same)
    };
    let class = if best_res <= threshold && runner >= 10.0 * threshold {
        best
    } else {
        SymmetryClass::None
    };
    let lookup = |c: SymmetryClass| {
        if c == keep {
            Some(same)
        } else if c == flip {
            Some(flipped)
        } else {
            None
        }
    };
    Ok(Classification {
        class,
        residuals: [
            (SymmetryClass::PUnitary, lookup(SymmetryClass::PUnitary)),
            (
                SymmetryClass::PAntiunitary,
                lookup(SymmetryClass::PAntiunitary),
            ),
            (
                SymmetryClass::PPseudounitary,
                lookup(SymmetryClass::PPseudounitary),
            ),
            (
                SymmetryClass::PPseudoantiunitary,
                lookup(SymmetryClass::PPseudoantiunitary),
            ),
        ],
        threshold,
    })
}

/// Splits a metric-antiunitary `V` as `V = (CTP)∘U = (TP)∘U′` with both `U`,
/// `U′` linear and metric-unitary; `C`, `TP` use the same signs `σ`.
pub fn factor_antiunitary(
    v: &AntilinearOp,
    dec: &SpectralDecomposition,
    sigma: &SignSequence,
    metric: &CMatrix,
    tol: Tolerance,
) -> Result<(CMatrix, CMatrix), KreinError> {
    let v_op = SymmetryOperator::Antilinear(v.clone());
    let class = classify(&v_op, metric, tol)?.class;
    if class != SymmetryClass::PAntiunitary {
        return Err(KreinError::NotAntiunitary(class));
    }
    let ctp = SymmetryOperator::Antilinear(build_ctp(dec, sigma, sigma)?);
    let tp = SymmetryOperator::Antilinear(build_tp(dec, sigma)?);
    let u = antilinear_compose(&ctp, &v_op)?;
    let u_prime = antilinear_compose(&tp, &v_op)?;
    Ok((u.matrix().clone(), u_prime.matrix().clone()))
}

/// Per-group, per-block upper-triangular Toeplitz coefficients `c_0, c_1, …`
/// describing `X|ψ_i⟩ = Σ_k c_k |ψ_{i−k}⟩` on each Jordan chain.
pub type CommutantParams = Vec<Vec<Vec<C64>>>;

/// Block-diagonal element of the commutant of `H`,
/// `X = Σ_chains Σ_i Σ_k c_k |ψ_{i−k}⟩⟨φ_i|`.
pub fn commutant_element(
    dec: &SpectralDecomposition,
    params: &CommutantParams,
) -> Result<CMatrix, KreinError> {
    let groups = dec.groups();
    if params.len() != groups.len() {
        return Err(KreinError::InvalidParams(format!(
            "{} groups, {} parameter lists",
            groups.len(),
            params.len()
        )));
    }
    let mut x = CMatrix::zeros(dec.n());
    for (g, (group, blocks)) in groups.iter().zip(params).enumerate() {
        if blocks.len() != group.chains.len() {
            return Err(KreinError::InvalidParams(format!(
                "group {g} has {} blocks, {} coefficient lists",
                group.chains.len(),
                blocks.len()
            )));
        }
        for (a, (chain, coeffs)) in group.chains.iter().zip(blocks).enumerate() {
            if coeffs.is_empty() || coeffs.len() > chain.len() {
                return Err(KreinError::InvalidParams(format!(
                    "group {g}, block {a}: need 1..={} coefficients, got {}",
                    chain.len(),
                    coeffs.len()
                )));
            }
            if coeffs[0].norm() == 0.0 {
                return Err(KreinError::ZeroLeadingCoefficient { group: g, block: a });
            }
            for i in 0..chain.len() {
                for (k, &ck) in coeffs.iter().enumerate().take(i + 1) {
                    if ck.norm() != 0.0 {
                        x = &x + &outer(&chain.psi[i - k], &chain.phi[i]).scale(ck);
                    }
                }
            }
        }
    }
    Ok(x)
}

/// Truncated series product of two coefficient lists.
fn series_mul(a: &[C64], b: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); len];
    for (i, x) in a.iter().enumerate().take(len) {
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients of `exp(i·g(x))` modulo `x^len` for real `g`.
pub fn exp_i_series(g: &[f64], len: usize) -> Vec<C64> {
    let ig: Vec<C64> = g.iter().map(|&v| C64::new(0.0, v)).collect();
    let head = ig.first().copied().unwrap_or_default();
    // exp(a_0 + rest) = e^{a_0}·Σ rest^k/k!, rest nilpotent mod x^len
    let mut rest = ig.clone();
    if !rest.is_empty() {
        rest[0] = C64::new(0.0, 0.0);
    }
    let mut out = vec![C64::new(0.0, 0.0); len];
    let mut term = vec![C64::new(0.0, 0.0); len];
    if len > 0 {
        term[0] = C64::new(1.0, 0.0);
    }
    for k in 0..len {
        for (o, t) in out.iter_mut().zip(&term) {
            *o += t;
        }
        term = series_mul(&term, &rest, len)
            .into_iter()
            .map(|z| z / (k as f64 + 1.0))
            .collect();
    }
    out.iter().map(|z| z * head.exp()).collect()
}

/// Coefficients of `1/conj(f)(x)` modulo `x^len`, where `conj` conjugates the
/// coefficients of `f`.
pub fn conj_reciprocal_series(f: &[C64], len: usize) -> Vec<C64> {
    let fc: Vec<C64> = f.iter().map(|z| z.conj()).collect();
    let mut out = vec![C64::new(0.0, 0.0); len];
    if len == 0 || fc.is_empty() {
        return out;
    }
    out[0] = C64::new(1.0, 0.0) / fc[0];
    for k in 1..len {
        let mut acc = C64::new(0.0, 0.0);
        for j in 1..=k.min(fc.len() - 1) {
            acc += fc[j] * out[k - j];
        }
        out[k] = -acc / fc[0];
    }
    out
}

/// Commutant parameters of a P_σ-unitary operator: every real chain gets
/// `exp(i·g(x))` with real `g`, every conjugate pair gets `f` on the `+`
/// member and `1/conj(f)` on the `−` member.
pub fn p_unitary_params(
    dec: &SpectralDecomposition,
    real_phases: impl Fn(usize, usize, usize) -> Vec<f64>,
    pair_series: impl Fn(usize, usize, usize) -> Vec<C64>,
) -> CommutantParams {
    let groups = dec.groups();
    let mut params: CommutantParams = groups
        .iter()
        .map(|g| vec![Vec::new(); g.chains.len()])
        .collect();
    for (g, group) in groups.iter().enumerate() {
        for (a, chain) in group.chains.iter().enumerate() {
            let len = chain.len();
            match group.kind {
                GroupKind::Real | GroupKind::Unpaired => {
                    params[g][a] = exp_i_series(&real_phases(g, a, len), len);
                }
                GroupKind::Plus(_) => {
                    let m = dec.partner(g).expect("validated pairing");
                    let f = pair_series(g, a, len);
                    params[m][a] = conj_reciprocal_series(&f, len);
                    params[g][a] = f;
                }
                GroupKind::Minus(_) => {}
            }
        }
    }
    params
}

/// Outcome of the existence test for metric-pseudounitary symmetries.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudounitaryDecision {
    pub exists: bool,
    pub violations: Vec<BlockViolation>,
    pub canonical_sigma: SignSequence,
    pub canonical_trace: i64,
    pub witness: Option<PseudounitaryWitness>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudounitaryWitness {
    pub reflecting: ReflectingPair,
    pub quaternionic_t: AntilinearOp,
}

/// Pseudounitary symmetries exist iff every real eigenvalue's Jordan blocks
/// occur in identical pairs and the canonical involutory metric is
/// traceless; witnesses `R`, `𝔗` are attached when they do.
pub fn pseudounitary_symmetries_exist(
    dec: &SpectralDecomposition,
) -> Result<PseudounitaryDecision, KreinError> {
    if dec.has_unpaired() {
        return Err(OperatorError::NotPaired.into());
    }
    let canonical_sigma = canonical_sign_sequence(dec);
    let canonical_trace = involutory_trace(dec, &canonical_sigma);
    let violations = real_block_pairing(dec).err().unwrap_or_default();
    let exists = violations.is_empty() && canonical_trace == 0;
    let witness = if exists {
        Some(PseudounitaryWitness {
            reflecting: build_reflecting(dec)?,
            quaternionic_t: build_quaternionic_t(dec)?,
        })
    } else {
        None
    };
    Ok(PseudounitaryDecision {
        exists,
        violations,
        canonical_sigma,
        canonical_trace,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm;
    use crate::spectral::{synthesize, BasisChoice, JordanBlockSpec, SynthesisSpec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn synth(groups: Vec<JordanBlockSpec>, seed: u64) -> (CMatrix, SpectralDecomposition) {
        let spec = SynthesisSpec {
            groups,
            basis: BasisChoice::Seeded {
                seed,
                condition: 20.0,
            },
            pseudo_hermitian: true,
        };
        synthesize(&spec, Tolerance::default()).unwrap()
    }

    #[test]
    fn krein_space_of_diagonal_metric() {
        let k = build_krein_space(
            &CMatrix::diag(&[c(1.0, 0.0), c(-1.0, 0.0)]),
            Tolerance::default(),
        )
        .unwrap();
        assert_eq!(k.signature, (1, 1));
        assert!(
            k.plus_projector
                .distance(&CMatrix::diag(&[c(1.0, 0.0), c(0.0, 0.0)]))
                < 1e-14
        );
        assert!(
            k.minus_projector
                .distance(&CMatrix::diag(&[c(0.0, 0.0), c(1.0, 0.0)]))
                < 1e-14
        );
        assert!(matches!(
            build_krein_space(
                &CMatrix::diag(&[c(1.0, 0.0), c(0.0, 0.0)]),
                Tolerance::default()
            ),
            Err(KreinError::SingularMetric)
        ));
    }

    #[test]
    fn krein_inner_with_identity_is_ordinary() {
        let a = [c(1.0, 2.0), c(0.5, -1.0)];
        let b = [c(-0.3, 0.0), c(2.0, 1.0)];
        let k = krein_inner(&a, &b, &CMatrix::identity(2)).unwrap();
        assert!((k - inner(&a, &b)).norm() < 1e-15);
        assert!(krein_inner(&a, &b, &CMatrix::identity(3)).is_err());
    }

    #[test]
    fn congruence_on_odd_dimension_has_unit_trace() {
        let (_, dec) = synth(
            vec![
                JordanBlockSpec::new(c(0.0, 0.0), vec![3]),
                JordanBlockSpec::new(c(1.0, 0.5), vec![1]),
                JordanBlockSpec::new(c(1.0, -0.5), vec![1]),
            ],
            8,
        );
        let sigma = canonical_sign_sequence(&dec);
        let cr = congruence_to_involutory(&dec, &sigma, None, Tolerance::default()).unwrap();
        assert!((cr.trace() - 1.0).abs() < 1e-9);
        assert_eq!(involutory_trace(&dec, &sigma), 1);
        assert!(cr.max_residual() < 1e-9);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i + j == 2 { 1.0 } else { 0.0 };
                assert!((cr.t_tilde.m[(i, j)] - c(want, 0.0)).norm() < 1e-9);
            }
        }
        let sum = &cr.plus_projector + &cr.minus_projector;
        assert!(sum.distance(&CMatrix::identity(5)) < 1e-12);
    }

    #[test]
    fn identity_is_unitary_for_any_metric() {
        let metric = CMatrix::diag(&[c(2.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0)]);
        let r = classify(
            &SymmetryOperator::Linear(CMatrix::identity(3)),
            &metric,
            Tolerance::default(),
        )
        .unwrap();
        assert_eq!(r.class, SymmetryClass::PUnitary);
    }

    #[test]
    fn evolution_is_unitary_for_positive_metric() {
        let (h, dec) = synth(
            vec![
                JordanBlockSpec::new(c(-0.5, 0.0), vec![1]),
                JordanBlockSpec::new(c(1.0, 0.0), vec![1, 1]),
            ],
            3,
        );
        let p_plus = crate::operators::build_positive_metric(&dec).unwrap();
        for t in [0.0, 0.7, 3.0] {
            let u = expm(&h.scale(c(0.0, -t))).unwrap();
            let cls =
                classify(&SymmetryOperator::Linear(u), &p_plus, Tolerance::default()).unwrap();
            assert_eq!(cls.class, SymmetryClass::PUnitary, "t = {t}");
        }
    }

    #[test]
    fn sesquilinear_definitions_match_matrix_conditions() {
        let (h, dec) = synth(
            vec![
                JordanBlockSpec::new(c(0.0, 0.0), vec![2, 2]),
                JordanBlockSpec::new(c(1.0, 1.0), vec![1]),
                JordanBlockSpec::new(c(1.0, -1.0), vec![1]),
            ],
            21,
        );
        let _ = h;
        let sigma = canonical_sign_sequence(&dec);
        let p = build_parity(&dec, &sigma).unwrap();
        let rp = build_reflecting(&dec).unwrap();
        let pp = &rp.p_paired;
        let psi = [
            c(0.2, 1.0),
            c(-1.0, 0.3),
            c(0.5, 0.5),
            c(0.0, -0.7),
            c(1.1, 0.0),
            c(-0.4, -0.2),
        ];
        let phi = [
            c(1.0, 0.0),
            c(0.3, -0.3),
            c(-0.6, 0.2),
            c(0.9, 0.1),
            c(0.0, 1.0),
            c(0.2, 0.8),
        ];
        let tol = Tolerance::default();
        let check = |op: SymmetryOperator, metric: &CMatrix, expect: SymmetryClass| {
            assert_eq!(classify(&op, metric, tol).unwrap().class, expect);
            let lhs = krein_inner(&op.apply(&psi), &op.apply(&phi), metric).unwrap();
            let base = krein_inner(&psi, &phi, metric).unwrap();
            let want = match expect {
                SymmetryClass::PUnitary => base,
                SymmetryClass::PPseudounitary => -base,
                SymmetryClass::PAntiunitary => base.conj(),
                SymmetryClass::PPseudoantiunitary => -base.conj(),
                SymmetryClass::None => unreachable!(),
            };
            assert!(
                (lhs - want).norm() < 1e-8 * (1.0 + base.norm()),
                "{expect:?}"
            );
        };
        check(
            SymmetryOperator::Linear(build_charge(&dec, &sigma).unwrap()),
            &p,
            SymmetryClass::PUnitary,
        );
        check(
            SymmetryOperator::Antilinear(build_tp(&dec, &sigma).unwrap()),
            &p,
            SymmetryClass::PAntiunitary,
        );
        check(
            SymmetryOperator::Linear(rp.r.clone()),
            pp,
            SymmetryClass::PPseudounitary,
        );
        check(
            SymmetryOperator::Antilinear(build_quaternionic_t(&dec).unwrap()),
            pp,
            SymmetryClass::PPseudoantiunitary,
        );
    }

    #[test]
    fn factorization_round_trip() {
        let (h, dec) = synth(
            vec![
                JordanBlockSpec::new(c(0.0, 0.0), vec![2]),
                JordanBlockSpec::new(c(1.0, 0.0), vec![1]),
                JordanBlockSpec::new(c(-1.0, 0.5), vec![1]),
                JordanBlockSpec::new(c(-1.0, -0.5), vec![1]),
            ],
            17,
        );
        let sigma = canonical_sign_sequence(&dec);
        let p = build_parity(&dec, &sigma).unwrap();
        let params = p_unitary_params(
            &dec,
            |g, a, len| (0..len).map(|k| 0.3 + 0.1 * (g + a + k) as f64).collect(),
            |_, _, len| (0..len).map(|k| c(1.5, 0.2 * k as f64)).collect(),
        );
        let u0 = commutant_element(&dec, &params).unwrap();
        assert!(h.commutator(&u0).norm_fro() < 1e-9 * h.norm_fro() * u0.norm_fro());
        let tol = Tolerance::default();
        assert_eq!(
            classify(&SymmetryOperator::Linear(u0.clone()), &p, tol)
                .unwrap()
                .class,
            SymmetryClass::PUnitary
        );
        let tp = build_tp(&dec, &sigma).unwrap();
        let v = AntilinearOp::new(&tp.m * &u0.conj());
        let (u, u_prime) = factor_antiunitary(&v, &dec, &sigma, &p, tol).unwrap();
        assert!(u_prime.distance(&u0) < 1e-8 * u0.norm_fro());
        let ctp = build_ctp(&dec, &sigma, &sigma).unwrap();
        assert!((&ctp.m * &u.conj()).distance(&v.m) < 1e-8 * v.m.norm_fro());
        assert!(matches!(
            factor_antiunitary(
                &AntilinearOp::new(tp.m.scale_re(2.0)),
                &dec,
                &sigma,
                &p,
                tol
            ),
            Err(KreinError::NotAntiunitary(_))
        ));
    }

    #[test]
    fn commutant_all_ones_is_identity() {
        let (_, dec) = synth(vec![JordanBlockSpec::new(c(0.0, 0.0), vec![2, 1])], 5);
        let params = vec![vec![vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]]];
        assert!(
            commutant_element(&dec, &params)
                .unwrap()
                .distance(&CMatrix::identity(3))
                < 1e-12
        );
        let zero = vec![vec![vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]]];
        assert!(matches!(
            commutant_element(&dec, &zero),
            Err(KreinError::ZeroLeadingCoefficient { group: 0, block: 0 })
        ));
    }

    #[test]
    fn series_helpers() {
        let f = exp_i_series(&[0.4, -1.0, 0.25], 3);
        let g = exp_i_series(&[-0.4, 1.0, -0.25], 3);
        let prod = series_mul(&f, &g, 3);
        assert!((prod[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(prod[1].norm() < 1e-14 && prod[2].norm() < 1e-14);
        let h = [c(2.0, 1.0), c(0.5, -0.5), c(0.0, 3.0)];
        let r = conj_reciprocal_series(&h, 3);
        let hc: Vec<C64> = h.iter().map(|z| z.conj()).collect();
        let one = series_mul(&hc, &r, 3);
        assert!(
            (one[0] - c(1.0, 0.0)).norm() < 1e-14 && one[1].norm() < 1e-14 && one[2].norm() < 1e-14
        );
    }

    #[test]
    fn pseudounitary_decision_on_pairs() {
        let (_, yes) = synth(vec![JordanBlockSpec::new(c(0.0, 0.0), vec![2, 2])], 1);
        let d = pseudounitary_symmetries_exist(&yes).unwrap();
        assert!(d.exists && d.witness.is_some() && d.canonical_trace == 0);
        let (_, no) = synth(vec![JordanBlockSpec::new(c(0.0, 0.0), vec![2, 1])], 1);
        let d = pseudounitary_symmetries_exist(&no).unwrap();
        assert!(!d.exists && d.witness.is_none());
        assert_eq!(d.violations.len(), 1);
    }
}
