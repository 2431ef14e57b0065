//! Generalized parity, charge-conjugation and time-reversal operators built
//! from a biorthonormal chain basis, plus the algebra of antilinear maps.
//!
//! Antilinear operators are realized in the computational basis as
//! `v ↦ M·conj(v)`. With that convention the antilinear dyad `|a⟩K⟨b|` has
//! matrix part `a·bᵀ`, the adjoint is the transpose, and the square is
//! `M·conj(M)`.

use thiserror::Error;

use crate::linalg::{outer, outer_transpose, rank, CMatrix, LinalgError, Tolerance, C64};
use crate::spectral::{GroupKind, SpectralDecomposition};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("decomposition has a complex eigenvalue without a conjugate partner")]
    NotPaired,
    #[error("invalid sign sequence: {0}")]
    InvalidSigns(String),
    #[error("no positive definite metric exists: the spectrum is {0} (Theorem 1)")]
    NotDiagonalizableReal(&'static str),
    #[error("real-eigenvalue Jordan blocks do not occur in identical pairs (Proposition 4, Theorem 2): {}", describe_violations(.0))]
    UnpairedRealBlocks(Vec<BlockViolation>),
    #[error("operator is not involutory (residual {0:.3e})")]
    NotInvolutory(f64),
}

/// A real eigenvalue whose Jordan blocks cannot be split into identical pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockViolation {
    pub group: usize,
    pub eigenvalue: f64,
    pub block_dims: Vec<usize>,
    /// Block dimensions that occur an odd number of times.
    pub unpaired_dims: Vec<usize>,
}

fn describe_violations(v: &[BlockViolation]) -> String {
    v.iter()
        .map(|b| format!("E = {} with blocks {:?}", b.eigenvalue, b.block_dims))
        .collect::<Vec<_>>()
        .join("; ")
}

/// `v ↦ M·conj(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AntilinearOp {
    pub m: CMatrix,
}

impl AntilinearOp {
    pub fn new(m: CMatrix) -> Self {
        AntilinearOp { m }
    }

    /// Plain complex conjugation `K`.
    pub fn conjugation(n: usize) -> Self {
        AntilinearOp::new(CMatrix::identity(n))
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let c: Vec<C64> = v.iter().map(|z| z.conj()).collect();
        self.m.matvec(&c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymmetryOperator {
    Linear(CMatrix),
    Antilinear(AntilinearOp),
}

impl SymmetryOperator {
    pub fn n(&self) -> usize {
        self.matrix().n()
    }

    pub fn matrix(&self) -> &CMatrix {
        match self {
            SymmetryOperator::Linear(m) => m,
            SymmetryOperator::Antilinear(a) => &a.m,
        }
    }

    pub fn is_antilinear(&self) -> bool {
        matches!(self, SymmetryOperator::Antilinear(_))
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        match self {
            SymmetryOperator::Linear(m) => m.matvec(v),
            SymmetryOperator::Antilinear(a) => a.apply(v),
        }
    }

    /// `A∘A`, always linear.
    pub fn square(&self) -> CMatrix {
        match self {
            SymmetryOperator::Linear(m) => m * m,
            SymmetryOperator::Antilinear(a) => &a.m * &a.m.conj(),
        }
    }

    /// `‖HA − AH‖_F` in the sense appropriate to the operator's linearity.
    pub fn commutator_residual(&self, h: &CMatrix) -> f64 {
        match self {
            SymmetryOperator::Linear(m) => h.commutator(m).norm_fro(),
            SymmetryOperator::Antilinear(a) => (&(h * &a.m) - &(&a.m * &h.conj())).norm_fro(),
        }
    }
}

impl From<AntilinearOp> for SymmetryOperator {
    fn from(a: AntilinearOp) -> Self {
        SymmetryOperator::Antilinear(a)
    }
}

impl From<CMatrix> for SymmetryOperator {
    fn from(m: CMatrix) -> Self {
        SymmetryOperator::Linear(m)
    }
}

/// `A∘B`.
pub fn antilinear_compose(
    a: &SymmetryOperator,
    b: &SymmetryOperator,
) -> Result<SymmetryOperator, OperatorError> {
    use SymmetryOperator::{Antilinear, Linear};
    if a.n() != b.n() {
        return Err(OperatorError::DimensionMismatch(a.n(), b.n()));
    }
    Ok(match (a, b) {
        (Linear(l), Linear(r)) => Linear(l * r),
        (Linear(l), Antilinear(r)) => Antilinear(AntilinearOp::new(l * &r.m)),
        (Antilinear(l), Linear(r)) => Antilinear(AntilinearOp::new(&l.m * &r.conj())),
        (Antilinear(l), Antilinear(r)) => Linear(&l.m * &r.m.conj()),
    })
}

/// The adjoint `A†` with `⟨ψ|Aφ⟩ = ⟨φ|A†ψ⟩`.
pub fn antilinear_adjoint(a: &AntilinearOp) -> AntilinearOp {
    AntilinearOp::new(a.m.transpose())
}

/// Signs `σ_n^a` indexed by group and Jordan block. The two members of a
/// conjugate pair always carry the same sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignSequence {
    signs: Vec<Vec<i8>>,
}

impl SignSequence {
    /// Validates the shape against `dec` and the pair constraint.
    pub fn new(dec: &SpectralDecomposition, signs: Vec<Vec<i8>>) -> Result<Self, OperatorError> {
        let invalid = |m: String| Err(OperatorError::InvalidSigns(m));
        let groups = dec.groups();
        if signs.len() != groups.len() {
            return invalid(format!(
                "{} groups, {} sign lists",
                groups.len(),
                signs.len()
            ));
        }
        for (g, (group, s)) in groups.iter().zip(&signs).enumerate() {
            if s.len() != group.chains.len() {
                return invalid(format!(
                    "group {g} has {} blocks but {} signs",
                    group.chains.len(),
                    s.len()
                ));
            }
            if s.iter().any(|&x| x != 1 && x != -1) {
                return invalid(format!("group {g} has a sign outside {{+1, -1}}"));
            }
        }
        for (p, m) in dec.pairs() {
            if signs[p] != signs[m] {
                return invalid(format!(
                    "conjugate groups {p} and {m} carry different signs"
                ));
            }
        }
        Ok(SignSequence { signs })
    }

    pub fn all_plus(dec: &SpectralDecomposition) -> Self {
        SignSequence {
            signs: dec
                .groups()
                .iter()
                .map(|g| vec![1; g.chains.len()])
                .collect(),
        }
    }

    pub fn canonical(dec: &SpectralDecomposition) -> Self {
        canonical_sign_sequence(dec)
    }

    pub fn negated(&self) -> Self {
        SignSequence {
            signs: self
                .signs
                .iter()
                .map(|s| s.iter().map(|x| -x).collect())
                .collect(),
        }
    }

    pub fn get(&self, group: usize, block: usize) -> f64 {
        f64::from(self.signs[group][block])
    }

    pub fn signs(&self) -> &[Vec<i8>] {
        &self.signs
    }

    /// Signs flattened in group/block order.
    pub fn flat(&self) -> Vec<i8> {
        self.signs.iter().flatten().copied().collect()
    }

    fn check(&self, dec: &SpectralDecomposition) -> Result<(), OperatorError> {
        SignSequence::new(dec, self.signs.clone()).map(|_| ())
    }
}

/// Alternates `+, −` over the odd-dimensional blocks of real eigenvalues (in
/// group then block order); every other block gets `+`. The congruent
/// involutory metric then has trace 0 or 1.
pub fn canonical_sign_sequence(dec: &SpectralDecomposition) -> SignSequence {
    let mut next: i8 = 1;
    let signs = dec
        .groups()
        .iter()
        .map(|g| {
            g.chains
                .iter()
                .map(|c| {
                    if g.kind == GroupKind::Real && c.len() % 2 == 1 {
                        let s = next;
                        next = -next;
                        s
                    } else {
                        1
                    }
                })
                .collect()
        })
        .collect();
    SignSequence { signs }
}

fn require_paired(dec: &SpectralDecomposition) -> Result<(), OperatorError> {
    if dec.has_unpaired() {
        Err(OperatorError::NotPaired)
    } else {
        Ok(())
    }
}

fn prepare(dec: &SpectralDecomposition, sigma: &SignSequence) -> Result<(), OperatorError> {
    require_paired(dec)?;
    sigma.check(dec)
}

/// `P_σ`: φ-dyads with intra-chain index reversal; conjugate pairs are
/// coupled crosswise.
pub fn build_parity(
    dec: &SpectralDecomposition,
    sigma: &SignSequence,
) -> Result<CMatrix, OperatorError> {
    prepare(dec, sigma)?;
    let mut p = CMatrix::zeros(dec.n());
    for (g, group) in dec.groups().iter().enumerate() {
        match group.kind {
            GroupKind::Real => {
                for (a, chain) in group.chains.iter().enumerate() {
                    let s = sigma.get(g, a);
                    let len = chain.len();
                    for i in 0..len {
                        p = &p + &outer(&chain.phi[len - 1 - i], &chain.phi[i]).scale_re(s);
                    }
                }
            }
            GroupKind::Plus(_) => {
                let m = dec.partner(g).expect("validated pairing");
                let minus = &dec.groups()[m];
                for (a, (cp, cm)) in group.chains.iter().zip(&minus.chains).enumerate() {
                    let s = sigma.get(g, a);
                    let len = cp.len();
                    for i in 0..len {
                        p = &p + &outer(&cp.phi[len - 1 - i], &cm.phi[i]).scale_re(s);
                        p = &p + &outer(&cm.phi[len - 1 - i], &cp.phi[i]).scale_re(s);
                    }
                }
            }
            GroupKind::Minus(_) | GroupKind::Unpaired => {}
        }
    }
    Ok(p)
}

/// `C_σ = Σ σ|ψ⟩⟨φ|`; both members of a pair share the sign.
pub fn build_charge(
    dec: &SpectralDecomposition,
    sigma: &SignSequence,
) -> Result<CMatrix, OperatorError> {
    prepare(dec, sigma)?;
    let mut c = CMatrix::zeros(dec.n());
    for (g, group) in dec.groups().iter().enumerate() {
        for (a, chain) in group.chains.iter().enumerate() {
            let s = sigma.get(g, a);
            for i in 0..chain.len() {
                c = &c + &outer(&chain.psi[i], &chain.phi[i]).scale_re(s);
            }
        }
    }
    Ok(c)
}

/// `T = Σ |ψ_i⟩K⟨ψ_{p+1−i}|` over every chain.
pub fn build_time_reversal(dec: &SpectralDecomposition) -> Result<AntilinearOp, OperatorError> {
    require_paired(dec)?;
    let mut m = CMatrix::zeros(dec.n());
    for group in dec.groups() {
        for chain in &group.chains {
            let len = chain.len();
            for i in 0..len {
                m = &m + &outer_transpose(&chain.psi[i], &chain.psi[len - 1 - i]);
            }
        }
    }
    Ok(AntilinearOp::new(m))
}

/// `Σ w·|ψ⟩K⟨φ|` on real chains, crosswise on pairs, with block weight
/// `w = weight(g, a)`.
fn antilinear_dyads(dec: &SpectralDecomposition, weight: impl Fn(usize, usize) -> f64) -> CMatrix {
    let mut m = CMatrix::zeros(dec.n());
    for (g, group) in dec.groups().iter().enumerate() {
        match group.kind {
            GroupKind::Real => {
                for (a, chain) in group.chains.iter().enumerate() {
                    let w = weight(g, a);
                    for i in 0..chain.len() {
                        m = &m + &outer_transpose(&chain.psi[i], &chain.phi[i]).scale_re(w);
                    }
                }
            }
            GroupKind::Plus(_) => {
                let minus = &dec.groups()[dec.partner(g).expect("validated pairing")];
                for (a, (cp, cm)) in group.chains.iter().zip(&minus.chains).enumerate() {
                    let w = weight(g, a);
                    for i in 0..cp.len() {
                        m = &m + &outer_transpose(&cp.psi[i], &cm.phi[i]).scale_re(w);
                        m = &m + &outer_transpose(&cm.psi[i], &cp.phi[i]).scale_re(w);
                    }
                }
            }
            GroupKind::Minus(_) | GroupKind::Unpaired => {}
        }
    }
    m
}

/// `TP_σ`, equal to `T∘P_σ`.
pub fn build_tp(
    dec: &SpectralDecomposition,
    sigma: &SignSequence,
) -> Result<AntilinearOp, OperatorError> {
    prepare(dec, sigma)?;
    Ok(AntilinearOp::new(antilinear_dyads(dec, |g, a| {
        sigma.get(g, a)
    })))
}

/// `C_σ TP_σ′`, carrying the product signs `σσ′`.
pub fn build_ctp(
    dec: &SpectralDecomposition,
    sigma: &SignSequence,
    sigma_prime: &SignSequence,
) -> Result<AntilinearOp, OperatorError> {
    prepare(dec, sigma)?;
    sigma_prime.check(dec)?;
    Ok(AntilinearOp::new(antilinear_dyads(dec, |g, a| {
        sigma.get(g, a) * sigma_prime.get(g, a)
    })))
}

/// `P₊ = Σ |φ⟩⟨φ|`, defined only for diagonalizable operators with real
/// spectrum.
pub fn build_positive_metric(dec: &SpectralDecomposition) -> Result<CMatrix, OperatorError> {
    if !dec.is_real_spectrum() {
        return Err(OperatorError::NotDiagonalizableReal("not real"));
    }
    if !dec.is_diagonalizable() {
        return Err(OperatorError::NotDiagonalizableReal("not diagonalizable"));
    }
    let mut p = CMatrix::zeros(dec.n());
    for group in dec.groups() {
        for chain in &group.chains {
            p = &p + &outer(&chain.phi[0], &chain.phi[0]);
        }
    }
    Ok(p)
}

/// Block index pairs `(a, a′)` of one real group.
pub type GroupPairing = (usize, Vec<(usize, usize)>);

/// For every real group, the `(a, a′)` block pairs obtained by sorting blocks
/// by dimension and pairing neighbours; violations when a dimension occurs an
/// odd number of times.
pub fn real_block_pairing(
    dec: &SpectralDecomposition,
) -> Result<Vec<GroupPairing>, Vec<BlockViolation>> {
    let mut out = Vec::new();
    let mut violations = Vec::new();
    for (g, group) in dec.groups().iter().enumerate() {
        if group.kind != GroupKind::Real {
            continue;
        }
        let dims = group.block_dims();
        let mut order: Vec<usize> = (0..dims.len()).collect();
        order.sort_by_key(|&a| (dims[a], a));
        let mut pairs = Vec::new();
        let mut unpaired = Vec::new();
        let mut k = 0;
        while k < order.len() {
            if k + 1 < order.len() && dims[order[k]] == dims[order[k + 1]] {
                pairs.push((order[k], order[k + 1]));
                k += 2;
            } else {
                unpaired.push(dims[order[k]]);
                k += 1;
            }
        }
        if unpaired.is_empty() {
            out.push((g, pairs));
        } else {
            violations.push(BlockViolation {
                group: g,
                eigenvalue: group.eigenvalue.re,
                block_dims: dims,
                unpaired_dims: unpaired,
            });
        }
    }
    if violations.is_empty() {
        Ok(out)
    } else {
        Err(violations)
    }
}

/// Sign sequence that is `+` on the first and `−` on the second member of
/// each real block pair, and `+` on conjugate pairs.
fn paired_signs(
    dec: &SpectralDecomposition,
    pairing: &[(usize, Vec<(usize, usize)>)],
) -> SignSequence {
    let mut signs: Vec<Vec<i8>> = dec
        .groups()
        .iter()
        .map(|g| vec![1; g.chains.len()])
        .collect();
    for (g, pairs) in pairing {
        for &(_, second) in pairs {
            signs[*g][second] = -1;
        }
    }
    SignSequence { signs }
}

/// Everything needed to write down the P-reflecting operator and its
/// antilinear companion.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectingPair {
    pub r: CMatrix,
    pub p_paired: CMatrix,
    pub sigma_paired: SignSequence,
}

/// The involutory `R` with `[H, R] = 0` and `R†P R = −P` for the paired
/// parity `P`, returned together with that parity.
pub fn build_reflecting(dec: &SpectralDecomposition) -> Result<ReflectingPair, OperatorError> {
    require_paired(dec)?;
    let pairing = real_block_pairing(dec).map_err(OperatorError::UnpairedRealBlocks)?;
    let n = dec.n();
    let mut r = CMatrix::zeros(n);
    for (g, pairs) in &pairing {
        let group = &dec.groups()[*g];
        for &(a, b) in pairs {
            let (ca, cb) = (&group.chains[a], &group.chains[b]);
            for i in 0..ca.len() {
                r = &r + &outer(&ca.psi[i], &cb.phi[i]);
                r = &r + &outer(&cb.psi[i], &ca.phi[i]);
            }
        }
    }
    for (p, m) in dec.pairs() {
        for (cp, cm) in dec.groups()[p].chains.iter().zip(&dec.groups()[m].chains) {
            for i in 0..cp.len() {
                r = &r + &outer(&cp.psi[i], &cp.phi[i]);
                r = &r - &outer(&cm.psi[i], &cm.phi[i]);
            }
        }
    }
    let sigma_paired = paired_signs(dec, &pairing);
    let p_paired = build_parity(dec, &sigma_paired)?;
    Ok(ReflectingPair {
        r,
        p_paired,
        sigma_paired,
    })
}

/// The antilinear `𝔗 = R∘TP_σ` (σ the paired signs), with `𝔗² = −1`.
pub fn build_quaternionic_t(dec: &SpectralDecomposition) -> Result<AntilinearOp, OperatorError> {
    require_paired(dec)?;
    let pairing = real_block_pairing(dec).map_err(OperatorError::UnpairedRealBlocks)?;
    let n = dec.n();
    let mut m = CMatrix::zeros(n);
    for (g, pairs) in &pairing {
        let group = &dec.groups()[*g];
        for &(a, b) in pairs {
            let (ca, cb) = (&group.chains[a], &group.chains[b]);
            for i in 0..ca.len() {
                m = &m + &outer_transpose(&cb.psi[i], &ca.phi[i]);
                m = &m - &outer_transpose(&ca.psi[i], &cb.phi[i]);
            }
        }
    }
    for (p, q) in dec.pairs() {
        for (cp, cm) in dec.groups()[p].chains.iter().zip(&dec.groups()[q].chains) {
            for i in 0..cp.len() {
                m = &m + &outer_transpose(&cp.psi[i], &cm.phi[i]);
                m = &m - &outer_transpose(&cm.psi[i], &cp.phi[i]);
            }
        }
    }
    Ok(AntilinearOp::new(m))
}

/// At least two independent eigenvectors, so a non-trivial involution
/// commuting with `H` exists.
pub fn involutory_symmetry_exists(dec: &SpectralDecomposition) -> bool {
    dec.eigenvector_count() >= 2
}

/// Multiplicities of the eigenvalues `+1` and `−1` of an involution. Fails
/// unless `C² = I` and `rank(C − I) + rank(C + I) = n`.
pub fn canonical_involution(c: &CMatrix, tol: Tolerance) -> Result<(usize, usize), OperatorError> {
    let n = c.n();
    let ident = CMatrix::identity(n);
    let residual = (&(c * c) - &ident).norm_fro();
    let scale = c.norm_fro().max(1.0);
    if residual > tol.threshold(n as f64 * scale * scale) {
        return Err(OperatorError::NotInvolutory(residual));
    }
    let rank_tol = Tolerance::new(tol.abs, tol.rel.max(1e-9))?;
    let plus = n - rank(&(c - &ident), rank_tol)?;
    let minus = n - rank(&(c + &ident), rank_tol)?;
    if plus + minus != n {
        return Err(OperatorError::NotInvolutory(residual));
    }
    Ok((plus, minus))
}
