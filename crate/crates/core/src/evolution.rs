//! Time evolution `e^{−iHt}`, metric-norm series, transition probabilities and
//! the two-level spin-rotation Hamiltonian `[[E, ir], [−is, E]]`.

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{expm, inner, is_positive_definite, CMatrix, LinalgError, Tolerance, C64};
use crate::spectral::{
    pseudo_hermitian_residual, GroupKind, JordanBlockSpec, SpectralDecomposition, SpectralError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolutionError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid evolution request: {0}")]
    InvalidRequest(String),
    #[error("metric is not positive definite; transition probabilities are undefined")]
    IndefiniteMetric,
    #[error("Hamiltonian is not pseudo-Hermitian with respect to the metric (residual {0:.3e})")]
    NotPseudoHermitian(f64),
    #[error("state has zero metric norm")]
    NullState,
}

/// `U(t) = e^{−iHt}`.
pub fn propagator(h: &CMatrix, t: f64) -> Result<CMatrix, LinalgError> {
    expm(&h.scale(C64::new(0.0, -t)))
}

/// `steps` equally spaced points from `t0` to `t1` inclusive.
pub fn linspace(t0: f64, t1: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![t0],
        _ => (0..steps)
            .map(|k| t0 + (t1 - t0) * k as f64 / (steps - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRequest {
    pub h: CMatrix,
    pub metric: CMatrix,
    pub initial: Vec<C64>,
    pub t_grid: Vec<f64>,
}

impl EvolutionRequest {
    pub fn new(
        h: CMatrix,
        metric: CMatrix,
        initial: Vec<C64>,
        t_grid: Vec<f64>,
    ) -> Result<Self, EvolutionError> {
        let req = EvolutionRequest {
            h,
            metric,
            initial,
            t_grid,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        let n = self.h.n();
        let bad = |m: String| Err(EvolutionError::InvalidRequest(m));
        if self.metric.n() != n || self.initial.len() != n {
            return bad(format!(
                "sizes disagree: H {n}, metric {}, state {}",
                self.metric.n(),
                self.initial.len()
            ));
        }
        if !self.h.is_finite() || !self.metric.is_finite() {
            return bad("non-finite matrix entries".into());
        }
        if self.initial.iter().all(|z| z.norm() == 0.0) {
            return bad("initial state is zero".into());
        }
        if self.t_grid.iter().any(|t| !t.is_finite()) {
            return bad("non-finite time".into());
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("time grid is not strictly increasing".into());
        }
        Ok(())
    }

    fn evolve_all(&self) -> Result<Vec<Vec<C64>>, EvolutionError> {
        self.t_grid
            .par_iter()
            .map(|&t| Ok(propagator(&self.h, t)?.matvec(&self.initial)))
            .collect()
    }
}

fn metric_normalized(v: &[C64], metric: &CMatrix) -> Result<Vec<C64>, EvolutionError> {
    let q = inner(v, &metric.matvec(v)).re;
    if q <= 0.0 {
        return Err(EvolutionError::NullState);
    }
    let s = q.sqrt();
    Ok(v.iter().map(|z| z / s).collect())
}

/// `|⟨⟨f, U(t)ψ₀⟩⟩_η|²` on the grid, with both states normalized in the
/// positive definite metric `η`.
pub fn transition_probability(
    req: &EvolutionRequest,
    final_state: &[C64],
    tol: Tolerance,
) -> Result<Vec<f64>, EvolutionError> {
    req.validate()?;
    if final_state.len() != req.h.n() {
        return Err(EvolutionError::InvalidRequest(format!(
            "final state has length {}, expected {}",
            final_state.len(),
            req.h.n()
        )));
    }
    if !is_positive_definite(&req.metric, tol) {
        return Err(EvolutionError::IndefiniteMetric);
    }
    let start = metric_normalized(&req.initial, &req.metric)?;
    let target = metric_normalized(final_state, &req.metric)?;
    let bra = req.metric.matvec(&target);
    req.t_grid
        .par_iter()
        .map(|&t| {
            let psi = propagator(&req.h, t)?.matvec(&start);
            Ok(inner(&bra, &psi).norm_sqr())
        })
        .collect()
}

/// `⟨⟨ψ(t), ψ(t)⟩⟩_η` on the grid; requires `H` to be `η`-pseudo-Hermitian.
pub fn krein_norm_series(
    req: &EvolutionRequest,
    tol: Tolerance,
) -> Result<Vec<f64>, EvolutionError> {
    req.validate()?;
    let res = pseudo_hermitian_residual(&req.h, &req.metric, tol)?;
    if res > tol.scaled(&req.h) * req.metric.norm_fro().max(1.0) {
        return Err(EvolutionError::NotPseudoHermitian(res));
    }
    Ok(req
        .evolve_all()?
        .iter()
        .map(|psi| inner(psi, &req.metric.matvec(psi)).re)
        .collect())
}

/// Squared Euclidean norm `‖ψ(t)‖²` on the grid; the metric is ignored.
pub fn euclidean_norm_series(req: &EvolutionRequest) -> Result<Vec<f64>, EvolutionError> {
    req.validate()?;
    Ok(req
        .evolve_all()?
        .iter()
        .map(|psi| psi.iter().map(|z| z.norm_sqr()).sum())
        .collect())
}

/// Parameters of `H = [[E, ir], [−is, E]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MashhoonPapiniParams {
    pub e: f64,
    pub r: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `rs > 0`: eigenvalues `E ± √(rs)`.
    RealNondegenerate,
    /// `rs < 0`: eigenvalues `E ± i√|rs|`.
    ComplexPair,
    /// Exactly one of `r`, `s` vanishes: a single 2×2 Jordan block.
    JordanBlock,
    /// `r = s = 0`: `H = E·I`.
    Scalar,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::RealNondegenerate => "RealNondegenerate",
            Regime::ComplexPair => "ComplexPair",
            Regime::JordanBlock => "JordanBlock",
            Regime::Scalar => "Scalar",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MashhoonModel {
    pub h: CMatrix,
    pub regime: Regime,
    pub decomposition: SpectralDecomposition,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Builds the Hamiltonian and a decomposition in the conventional basis:
///
/// * `rs > 0`, `χ = r/s`: `ψ₁,₂ = (±iχ^{1/2}, 1)/√2`.
/// * `rs < 0`, `a = |χ|^{1/2}`: `ψ± = (∓a, 1)/√2`, the first one tagged `+`.
/// * `s = 0`: chain `ψ₁ = (1, 0)`, `ψ₂ = (i/r)(1, −1)`.
/// * `r = 0`: chain `ψ₁ = (0, 1)`, `ψ₂ = (i/s)(1, −1)`.
/// * `r = s = 0`: standard basis, one doubly degenerate eigenvalue.
pub fn mashhoon_papini(params: MashhoonPapiniParams) -> Result<MashhoonModel, EvolutionError> {
    let MashhoonPapiniParams { e, r, s } = params;
    if !(e.is_finite() && r.is_finite() && s.is_finite()) {
        return Err(EvolutionError::InvalidRequest(
            "non-finite parameters".into(),
        ));
    }
    let h = CMatrix::from_rows(vec![
        vec![c(e, 0.0), c(0.0, r)],
        vec![c(0.0, -s), c(e, 0.0)],
    ])?;
    let h2 = std::f64::consts::FRAC_1_SQRT_2;
    let rs = r * s;
    let (regime, layout, cols) = if rs > 0.0 {
        let k = (r / s).sqrt();
        let lam = s * k;
        (
            Regime::RealNondegenerate,
            vec![
                (
                    JordanBlockSpec::new(c(e + lam, 0.0), vec![1]),
                    GroupKind::Real,
                ),
                (
                    JordanBlockSpec::new(c(e - lam, 0.0), vec![1]),
                    GroupKind::Real,
                ),
            ],
            vec![
                vec![c(0.0, k * h2), c(h2, 0.0)],
                vec![c(0.0, -k * h2), c(h2, 0.0)],
            ],
        )
    } else if rs < 0.0 {
        let a = (r / s).abs().sqrt();
        let mu = s * a;
        (
            Regime::ComplexPair,
            vec![
                (JordanBlockSpec::new(c(e, mu), vec![1]), GroupKind::Plus(0)),
                (
                    JordanBlockSpec::new(c(e, -mu), vec![1]),
                    GroupKind::Minus(0),
                ),
            ],
            vec![
                vec![c(-a * h2, 0.0), c(h2, 0.0)],
                vec![c(a * h2, 0.0), c(h2, 0.0)],
            ],
        )
    } else if r != 0.0 || s != 0.0 {
        let top = if s == 0.0 {
            vec![c(1.0, 0.0), c(0.0, 0.0)]
        } else {
            vec![c(0.0, 0.0), c(1.0, 0.0)]
        };
        let w = 1.0 / if s == 0.0 { r } else { s };
        (
            Regime::JordanBlock,
            vec![(JordanBlockSpec::new(c(e, 0.0), vec![2]), GroupKind::Real)],
            vec![top, vec![c(0.0, w), c(0.0, -w)]],
        )
    } else {
        (
            Regime::Scalar,
            vec![(JordanBlockSpec::new(c(e, 0.0), vec![1, 1]), GroupKind::Real)],
            vec![
                vec![c(1.0, 0.0), c(0.0, 0.0)],
                vec![c(0.0, 0.0), c(1.0, 0.0)],
            ],
        )
    };
    let basis = CMatrix::from_columns(&cols)?;
    let decomposition =
        SpectralDecomposition::from_basis(&layout, &basis, Tolerance::new(0.0, 1e-14)?)?;
    Ok(MashhoonModel {
        h,
        regime,
        decomposition,
    })
}
