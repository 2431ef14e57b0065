//! Jordan structure and biorthonormal chain bases.
//!
//! A [`SpectralDecomposition`] stores, for every eigenvalue group, the Jordan
//! chains `ψ_{a,1..p}` (right chains, `Hψ_i = Eψ_i + ψ_{i−1}`) together with the
//! dual family `φ_{a,1..p}` (left chains) such that `⟨ψ|φ⟩` is the identity and
//! `Σ|ψ⟩⟨φ| = I`. Complex eigenvalues are stored as conjugate pairs tagged
//! [`GroupKind::Plus`] / [`GroupKind::Minus`] with matching block layouts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{
    hermitian_residual, inner, norm, null_space, outer, schur, CMatrix, LinalgError, Lu, Tolerance,
    C64, N_MAX,
};
use crate::random::random_basis;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("eigenvalue clusters near {near} are not separable at tolerance: {detail}")]
    ClusterAmbiguity { near: C64, detail: String },
    #[error("complex eigenvalue {0} has no conjugate partner with identical Jordan structure")]
    NotPaired(C64),
    #[error("basis matrix is singular at tolerance")]
    SingularBasis,
    #[error("metric is singular at tolerance")]
    SingularMetric,
    #[error("metric is not Hermitian (residual {0:.3e})")]
    NonHermitianMetric(f64),
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
    #[error("inconsistent decomposition: {0}")]
    Inconsistent(String),
}

/// Eigenvalue with the dimensions of its Jordan blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanBlockSpec {
    pub eigenvalue: C64,
    pub block_dims: Vec<usize>,
}

impl JordanBlockSpec {
    pub fn new(eigenvalue: C64, block_dims: Vec<usize>) -> Self {
        JordanBlockSpec {
            eigenvalue,
            block_dims,
        }
    }

    /// Algebraic multiplicity.
    pub fn multiplicity(&self) -> usize {
        self.block_dims.iter().sum()
    }

    fn sorted_dims(&self) -> Vec<usize> {
        let mut d = self.block_dims.clone();
        d.sort_unstable_by(|a, b| b.cmp(a));
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    Real,
    Plus(usize),
    Minus(usize),
    /// Complex eigenvalue without a conjugate partner; only produced by
    /// synthesis of non-pseudo-Hermitian specs.
    Unpaired,
}

/// One Jordan chain and its dual.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub psi: Vec<Vec<C64>>,
    pub phi: Vec<Vec<C64>>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenGroup {
    pub eigenvalue: C64,
    pub kind: GroupKind,
    pub chains: Vec<Chain>,
}

impl EigenGroup {
    pub fn block_dims(&self) -> Vec<usize> {
        self.chains.iter().map(Chain::len).collect()
    }

    pub fn spec(&self) -> JordanBlockSpec {
        JordanBlockSpec::new(self.eigenvalue, self.block_dims())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    n: usize,
    groups: Vec<EigenGroup>,
}

impl SpectralDecomposition {
    /// Validates the structural invariants: chain lengths, vector sizes,
    /// total dimension and the conjugate pairing of `Plus`/`Minus` groups.
    /// Biorthonormality is not enforced here; see [`check_biorthonormal`].
    pub fn new(n: usize, groups: Vec<EigenGroup>) -> Result<Self, SpectralError> {
        let bad = |m: String| Err(SpectralError::Inconsistent(m));
        let mut total = 0;
        for (g, group) in groups.iter().enumerate() {
            if group.chains.is_empty() {
                return bad(format!("group {g} has no Jordan blocks"));
            }
            for chain in &group.chains {
                if chain.is_empty() || chain.psi.len() != chain.phi.len() {
                    return bad(format!("group {g} has a malformed chain"));
                }
                if chain.psi.iter().chain(&chain.phi).any(|v| v.len() != n) {
                    return bad(format!("group {g} has vectors of the wrong length"));
                }
                total += chain.len();
            }
            if group.kind == GroupKind::Real && group.eigenvalue.im != 0.0 {
                return bad(format!(
                    "group {g} is tagged real but has a non-zero imaginary part"
                ));
            }
        }
        if total != n {
            return bad(format!("chains span {total} dimensions, expected {n}"));
        }
        let plus: Vec<(usize, usize)> = groups
            .iter()
            .enumerate()
            .filter_map(|(g, x)| match x.kind {
                GroupKind::Plus(id) => Some((id, g)),
                _ => None,
            })
            .collect();
        let minus_count = groups
            .iter()
            .filter(|x| matches!(x.kind, GroupKind::Minus(_)))
            .count();
        if minus_count != plus.len() {
            return bad("unbalanced conjugate pairs".into());
        }
        for &(id, gp) in &plus {
            let partners: Vec<usize> = groups
                .iter()
                .enumerate()
                .filter(|(_, x)| x.kind == GroupKind::Minus(id))
                .map(|(g, _)| g)
                .collect();
            if partners.len() != 1 || plus.iter().filter(|p| p.0 == id).count() != 1 {
                return bad(format!("pair id {id} is not matched exactly once"));
            }
            let (a, b) = (&groups[gp], &groups[partners[0]]);
            if a.block_dims() != b.block_dims() {
                return bad(format!("pair id {id} has different block layouts"));
            }
            let scale = a.eigenvalue.norm().max(1.0);
            if (b.eigenvalue - a.eigenvalue.conj()).norm() > 1e-8 * scale {
                return bad(format!("pair id {id} eigenvalues are not conjugate"));
            }
        }
        Ok(SpectralDecomposition { n, groups })
    }

    /// Decomposition whose ψ-vectors are the columns of `basis`, taken in
    /// group/block/chain order, with φ-vectors the columns of `(S⁻¹)†`.
    pub fn from_basis(
        layout: &[(JordanBlockSpec, GroupKind)],
        basis: &CMatrix,
        tol: Tolerance,
    ) -> Result<Self, SpectralError> {
        let n = basis.n();
        let inv = Lu::factor(basis, tol)
            .map_err(|_| SpectralError::SingularBasis)?
            .solve(&CMatrix::identity(n));
        let dual = inv.adjoint();
        let mut col = 0;
        let mut groups = Vec::with_capacity(layout.len());
        for (spec, kind) in layout {
            let mut chains = Vec::new();
            for &p in &spec.block_dims {
                if col + p > n {
                    return Err(SpectralError::Inconsistent(
                        "layout exceeds basis dimension".into(),
                    ));
                }
                chains.push(Chain {
                    psi: (col..col + p).map(|j| basis.col(j)).collect(),
                    phi: (col..col + p).map(|j| dual.col(j)).collect(),
                });
                col += p;
            }
            groups.push(EigenGroup {
                eigenvalue: spec.eigenvalue,
                kind: *kind,
                chains,
            });
        }
        Self::new(n, groups)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> &[EigenGroup] {
        &self.groups
    }

    pub fn specs(&self) -> Vec<JordanBlockSpec> {
        self.groups.iter().map(EigenGroup::spec).collect()
    }

    /// `ψ_{g,a,i}` with zero-based indices.
    pub fn psi(&self, g: usize, a: usize, i: usize) -> &[C64] {
        &self.groups[g].chains[a].psi[i]
    }

    pub fn phi(&self, g: usize, a: usize, i: usize) -> &[C64] {
        &self.groups[g].chains[a].phi[i]
    }

    /// All ψ-vectors as columns, in group/block/chain order.
    pub fn psi_matrix(&self) -> CMatrix {
        self.stack(|c| &c.psi)
    }

    pub fn phi_matrix(&self) -> CMatrix {
        self.stack(|c| &c.phi)
    }

    fn stack(&self, pick: impl Fn(&Chain) -> &Vec<Vec<C64>>) -> CMatrix {
        let cols: Vec<Vec<C64>> = self
            .groups
            .iter()
            .flat_map(|g| g.chains.iter())
            .flat_map(|c| pick(c).iter().cloned())
            .collect();
        CMatrix::from_columns(&cols).expect("validated dimensions")
    }

    /// `(plus, minus)` group indices for every conjugate pair, ordered by pair id.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize, usize)> = Vec::new();
        for (g, group) in self.groups.iter().enumerate() {
            if let GroupKind::Plus(id) = group.kind {
                let m = self
                    .groups
                    .iter()
                    .position(|x| x.kind == GroupKind::Minus(id))
                    .expect("validated pairing");
                out.push((id, g, m));
            }
        }
        out.sort_unstable();
        out.into_iter().map(|(_, p, m)| (p, m)).collect()
    }

    /// Index of the partner group for paired groups.
    pub fn partner(&self, g: usize) -> Option<usize> {
        let target = match self.groups[g].kind {
            GroupKind::Plus(id) => GroupKind::Minus(id),
            GroupKind::Minus(id) => GroupKind::Plus(id),
            _ => return None,
        };
        self.groups.iter().position(|x| x.kind == target)
    }

    pub fn has_unpaired(&self) -> bool {
        self.groups.iter().any(|g| g.kind == GroupKind::Unpaired)
    }

    pub fn is_real_spectrum(&self) -> bool {
        self.groups.iter().all(|g| g.kind == GroupKind::Real)
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.groups
            .iter()
            .all(|g| g.chains.iter().all(|c| c.len() == 1))
    }

    /// Number of linearly independent eigenvectors, `Σ d_n`.
    pub fn eigenvector_count(&self) -> usize {
        self.groups.iter().map(|g| g.chains.len()).sum()
    }

    /// `Σ (E|ψ_i⟩⟨φ_i| + |ψ_i⟩⟨φ_{i+1}|)` over all chains.
    pub fn reconstruct(&self) -> CMatrix {
        let mut h = CMatrix::zeros(self.n);
        for group in &self.groups {
            for chain in &group.chains {
                for i in 0..chain.len() {
                    h = &h + &outer(&chain.psi[i], &chain.phi[i]).scale(group.eigenvalue);
                    if i + 1 < chain.len() {
                        h = &h + &outer(&chain.psi[i], &chain.phi[i + 1]);
                    }
                }
            }
        }
        h
    }
}

/// Deviations of the Gram matrix `⟨ψ_k|φ_l⟩` and of `Σ|ψ⟩⟨φ|` from the identity
/// (maximum absolute entry).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiorthonormalityReport {
    pub gram_residual: f64,
    pub completeness_residual: f64,
}

impl BiorthonormalityReport {
    pub fn max(&self) -> f64 {
        self.gram_residual.max(self.completeness_residual)
    }
}

pub fn check_biorthonormal(dec: &SpectralDecomposition) -> BiorthonormalityReport {
    let psi = dec.psi_matrix();
    let phi = dec.phi_matrix();
    let ident = CMatrix::identity(dec.n());
    let gram = &psi.adjoint() * &phi;
    let completeness = &psi * &phi.adjoint();
    BiorthonormalityReport {
        gram_residual: (&gram - &ident).max_abs(),
        completeness_residual: (&completeness - &ident).max_abs(),
    }
}

/// `‖ηH − H†η‖_F ≤ tol` scaled by `n·‖H‖_F·‖η‖_F`, which is the relation
/// `ηHη⁻¹ = H†` without forming the inverse.
pub fn is_pseudo_hermitian(
    h: &CMatrix,
    eta: &CMatrix,
    tol: Tolerance,
) -> Result<bool, SpectralError> {
    Ok(pseudo_hermitian_residual(h, eta, tol)? <= tol.scaled(h) * eta.norm_fro().max(1.0))
}

/// Unscaled residual `‖ηH − H†η‖_F` after validating the metric.
pub fn pseudo_hermitian_residual(
    h: &CMatrix,
    eta: &CMatrix,
    tol: Tolerance,
) -> Result<f64, SpectralError> {
    if h.n() != eta.n() {
        return Err(LinalgError::DimensionMismatch {
            expected: h.n(),
            found: eta.n(),
        }
        .into());
    }
    let herm = hermitian_residual(eta);
    if herm > tol.scaled(eta) {
        return Err(SpectralError::NonHermitianMetric(herm));
    }
    Lu::factor(eta, tol).map_err(|_| SpectralError::SingularMetric)?;
    Ok((&(eta * h) - &(&h.adjoint() * eta)).norm_fro())
}

#[derive(Debug, Clone, PartialEq)]
pub enum BasisChoice {
    /// Random basis with the given 2-norm condition number.
    Seeded {
        seed: u64,
        condition: f64,
    },
    Explicit(CMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisSpec {
    pub groups: Vec<JordanBlockSpec>,
    pub basis: BasisChoice,
    /// Require conjugate pairing of complex eigenvalues.
    pub pseudo_hermitian: bool,
}

impl SynthesisSpec {
    pub fn dimension(&self) -> usize {
        self.groups.iter().map(JordanBlockSpec::multiplicity).sum()
    }

    /// Assigns `Real`/`Plus`/`Minus`/`Unpaired` tags in spec order.
    fn layout(&self) -> Result<Vec<(JordanBlockSpec, GroupKind)>, SpectralError> {
        let invalid = |m: String| Err(SpectralError::InvalidSpec(m));
        if self.groups.is_empty() {
            return invalid("no eigenvalue groups".into());
        }
        let n = self.dimension();
        if n > N_MAX {
            return invalid(format!("dimension {n} exceeds {N_MAX}"));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.block_dims.is_empty() || g.block_dims.contains(&0) {
                return invalid(format!("group {i} needs non-empty positive block dims"));
            }
            if !g.eigenvalue.re.is_finite() || !g.eigenvalue.im.is_finite() {
                return invalid(format!("group {i} has a non-finite eigenvalue"));
            }
            for h in &self.groups[..i] {
                if h.eigenvalue == g.eigenvalue {
                    return invalid(format!("eigenvalue {} appears twice", g.eigenvalue));
                }
            }
        }
        let is_real = |z: C64| z.im.abs() <= 1e-12 * z.norm().max(1.0);
        let mut kinds: Vec<Option<GroupKind>> = vec![None; self.groups.len()];
        let mut next_pair = 0;
        for i in 0..self.groups.len() {
            let gi = &self.groups[i];
            if kinds[i].is_some() {
                continue;
            }
            if is_real(gi.eigenvalue) {
                kinds[i] = Some(GroupKind::Real);
                continue;
            }
            let target = gi.eigenvalue.conj();
            let partner = (0..self.groups.len()).find(|&j| {
                j != i
                    && kinds[j].is_none()
                    && (self.groups[j].eigenvalue - target).norm() <= 1e-12 * target.norm().max(1.0)
                    && self.groups[j].sorted_dims() == gi.sorted_dims()
            });
            match partner {
                Some(j) => {
                    let (p, m) = if gi.eigenvalue.im > 0.0 {
                        (i, j)
                    } else {
                        (j, i)
                    };
                    kinds[p] = Some(GroupKind::Plus(next_pair));
                    kinds[m] = Some(GroupKind::Minus(next_pair));
                    next_pair += 1;
                }
                None if self.pseudo_hermitian => {
                    return Err(SpectralError::NotPaired(gi.eigenvalue));
                }
                None => kinds[i] = Some(GroupKind::Unpaired),
            }
        }
        Ok(self
            .groups
            .iter()
            .zip(kinds)
            .map(|(g, k)| {
                let kind = k.expect("all groups tagged");
                let mut spec = g.clone();
                if kind == GroupKind::Real {
                    spec.eigenvalue = C64::new(spec.eigenvalue.re, 0.0);
                }
                if matches!(kind, GroupKind::Plus(_) | GroupKind::Minus(_)) {
                    // partners must list blocks in the same order
                    spec.block_dims = spec.sorted_dims();
                }
                (spec, kind)
            })
            .collect())
    }
}

/// Builds `H = S·J·S⁻¹` from the Jordan layout of `spec`; the decomposition
/// has ψ = columns of `S` and φ = columns of `(S⁻¹)†`.
pub fn synthesize(
    spec: &SynthesisSpec,
    tol: Tolerance,
) -> Result<(CMatrix, SpectralDecomposition), SpectralError> {
    let layout = spec.layout()?;
    let n = spec.dimension();
    let basis = match &spec.basis {
        BasisChoice::Seeded { seed, condition } => {
            if !(condition.is_finite() && *condition >= 1.0) {
                return Err(SpectralError::InvalidSpec(format!(
                    "condition number {condition} must be finite and at least 1"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            random_basis(n, *condition, &mut rng)
        }
        BasisChoice::Explicit(s) => {
            if s.n() != n {
                return Err(SpectralError::InvalidSpec(format!(
                    "basis is {}x{}, spec needs {n}",
                    s.n(),
                    s.n()
                )));
            }
            s.clone()
        }
    };
    let dec = SpectralDecomposition::from_basis(&layout, &basis, tol)?;
    let jordan = jordan_matrix(&layout);
    let inv = dec.phi_matrix().adjoint();
    let h = &(&basis * &jordan) * &inv;
    Ok((h, dec))
}

pub fn synthesize_matrix(spec: &SynthesisSpec, tol: Tolerance) -> Result<CMatrix, SpectralError> {
    synthesize(spec, tol).map(|(h, _)| h)
}

fn jordan_matrix(layout: &[(JordanBlockSpec, GroupKind)]) -> CMatrix {
    let n: usize = layout.iter().map(|(s, _)| s.multiplicity()).sum();
    let mut j = CMatrix::zeros(n);
    let mut at = 0;
    for (spec, _) in layout {
        for &p in &spec.block_dims {
            for i in 0..p {
                j[(at + i, at + i)] = spec.eigenvalue;
                if i + 1 < p {
                    j[(at + i, at + i + 1)] = C64::new(1.0, 0.0);
                }
            }
            at += p;
        }
    }
    j
}

/// Knobs for [`analyze_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    /// Single-linkage radius for grouping computed eigenvalues. `None` means
    /// `1e-2·max(1, spectral radius)`.
    pub cluster_radius: Option<f64>,
    /// Singular values of the staircase matrices at or below
    /// `rank_rel·max(1, ‖H‖_F)` count as zero.
    pub rank_rel: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            cluster_radius: None,
            rank_rel: 1e-9,
        }
    }
}

pub fn analyze(h: &CMatrix, tol: Tolerance) -> Result<SpectralDecomposition, SpectralError> {
    analyze_with(h, tol, &AnalyzeOptions::default())
}

struct Cluster {
    center: C64,
    radius: f64,
    size: usize,
}

fn cluster_eigenvalues(values: &[C64], link: f64) -> Vec<Cluster> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= link {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut members: Vec<Vec<C64>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let r = root(&mut label, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => members[k].push(v),
            None => {
                roots.push(r);
                members.push(vec![v]);
            }
        }
    }
    members
        .into_iter()
        .map(|m| {
            let center = m.iter().sum::<C64>() / m.len() as f64;
            let radius = m.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);
            Cluster {
                center,
                radius,
                size: m.len(),
            }
        })
        .collect()
}

/// Recovers eigenvalue groups, Jordan block dimensions and a biorthonormal
/// chain basis from a raw matrix.
///
/// Eigenvalues come from the complex Schur form and are grouped by single
/// linkage; each group's Jordan structure is read off the Weyr staircase of
/// nested kernels of `H − λI`. Chains are then built top-down and gauged so
/// that each eigenvector `ψ_{a,1}` has unit norm with its first significant
/// entry real and positive.
pub fn analyze_with(
    h: &CMatrix,
    tol: Tolerance,
    opts: &AnalyzeOptions,
) -> Result<SpectralDecomposition, SpectralError> {
    let n = h.n();
    if n == 0 {
        return Err(LinalgError::Empty.into());
    }
    if n > N_MAX {
        return Err(LinalgError::TooLarge(n).into());
    }
    if !h.is_finite() {
        return Err(SpectralError::Inconsistent(
            "matrix has non-finite entries".into(),
        ));
    }
    let s = schur(h)?;
    let scale = n as f64 * h.norm_fro();
    if s.residual(h) > tol.threshold(scale).max(1e3 * f64::EPSILON * scale) {
        return Err(LinalgError::NonConvergence(30 * n).into());
    }
    let values = s.eigenvalues();
    let spectral_radius = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let link = opts
        .cluster_radius
        .unwrap_or(1e-2 * spectral_radius.max(1.0));
    let mut clusters = cluster_eigenvalues(&values, link);

    for i in 0..clusters.len() {
        for j in i + 1..clusters.len() {
            let gap = (clusters[i].center - clusters[j].center).norm();
            let radius = clusters[i].radius.max(clusters[j].radius);
            if gap <= 10.0 * radius {
                return Err(SpectralError::ClusterAmbiguity {
                    near: clusters[i].center,
                    detail: format!(
                        "centers {} and {} are {gap:.3e} apart with cluster radius {radius:.3e}",
                        clusters[i].center, clusters[j].center
                    ),
                });
            }
        }
    }

    // realness decision and conjugate matching
    let real_cut = tol.threshold(scale);
    clusters.sort_by(|a, b| {
        a.center
            .re
            .total_cmp(&b.center.re)
            .then(a.center.im.total_cmp(&b.center.im))
    });
    let mut kinds: Vec<Option<GroupKind>> = vec![None; clusters.len()];
    let mut snapped: Vec<C64> = clusters.iter().map(|c| c.center).collect();
    for (i, c) in clusters.iter().enumerate() {
        if c.center.im.abs() <= real_cut {
            kinds[i] = Some(GroupKind::Real);
            snapped[i] = C64::new(c.center.re, 0.0);
        }
    }
    let mut next_pair = 0;
    for i in 0..clusters.len() {
        if kinds[i].is_some() || clusters[i].center.im < 0.0 {
            continue;
        }
        let target = clusters[i].center.conj();
        let partner = (0..clusters.len())
            .filter(|&j| kinds[j].is_none() && clusters[j].center.im < 0.0)
            .min_by(|&a, &b| {
                (clusters[a].center - target)
                    .norm()
                    .total_cmp(&(clusters[b].center - target).norm())
            });
        let j = match partner {
            Some(j) if (clusters[j].center - target).norm() <= link => j,
            _ => return Err(SpectralError::NotPaired(clusters[i].center)),
        };
        if clusters[j].size != clusters[i].size {
            return Err(SpectralError::NotPaired(clusters[i].center));
        }
        let plus = (clusters[i].center + clusters[j].center.conj()) * 0.5;
        snapped[i] = plus;
        snapped[j] = plus.conj();
        kinds[i] = Some(GroupKind::Plus(next_pair));
        kinds[j] = Some(GroupKind::Minus(next_pair));
        next_pair += 1;
    }
    if let Some(i) = kinds.iter().position(Option::is_none) {
        return Err(SpectralError::NotPaired(clusters[i].center));
    }

    let zero_cut = opts.rank_rel * h.norm_fro().max(1.0);
    let mut groups = Vec::with_capacity(clusters.len());
    for (i, c) in clusters.iter().enumerate() {
        let tops = jordan_chains(h, snapped[i], c.size, zero_cut)?;
        groups.push((snapped[i], kinds[i].unwrap(), tops));
    }
    for &(lam, kind, ref chains) in &groups {
        if let GroupKind::Plus(id) = kind {
            let (_, _, other) = groups
                .iter()
                .find(|g| g.1 == GroupKind::Minus(id))
                .expect("paired above");
            let dims = |cs: &Vec<Vec<Vec<C64>>>| cs.iter().map(Vec::len).collect::<Vec<_>>();
            if dims(chains) != dims(other) {
                return Err(SpectralError::NotPaired(lam));
            }
        }
    }

    let layout: Vec<(JordanBlockSpec, GroupKind)> = groups
        .iter()
        .map(|(lam, kind, chains)| {
            (
                JordanBlockSpec::new(*lam, chains.iter().map(Vec::len).collect()),
                *kind,
            )
        })
        .collect();
    let cols: Vec<Vec<C64>> = groups
        .into_iter()
        .flat_map(|(_, _, chains)| chains.into_iter().flatten())
        .collect();
    let basis = CMatrix::from_columns(&cols)?;
    SpectralDecomposition::from_basis(&layout, &basis, Tolerance::new(0.0, 1e-14)?)
}

fn orthonormalize_against(v: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for q in basis {
            let proj = inner(q, v);
            for (x, b) in v.iter_mut().zip(q) {
                *x -= proj * b;
            }
        }
    }
}

/// Greedily picks up to `count` orthonormal directions from `candidates`
/// after removing their components along `existing`, largest residual first.
fn pivoted_extension(
    candidates: &[Vec<C64>],
    existing: &[Vec<C64>],
    count: usize,
) -> Vec<Vec<C64>> {
    let mut chosen: Vec<Vec<C64>> = Vec::new();
    let mut basis: Vec<Vec<C64>> = existing.to_vec();
    while chosen.len() < count {
        let best = candidates
            .iter()
            .map(|c| {
                let mut v = c.clone();
                orthonormalize_against(&mut v, &basis);
                let r = norm(&v);
                (r, v)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some((r, v)) if r > 1e-8 => {
                let v: Vec<C64> = v.iter().map(|z| z / r).collect();
                basis.push(v.clone());
                chosen.push(v);
            }
            _ => break,
        }
    }
    chosen
}

/// Jordan chains of `H` at `lambda`, each listed as `[ψ_1, …, ψ_p]`, longest
/// first.
fn jordan_chains(
    h: &CMatrix,
    lambda: C64,
    multiplicity: usize,
    zero_cut: f64,
) -> Result<Vec<Vec<Vec<C64>>>, SpectralError> {
    let n = h.n();
    let a = h.shifted(lambda);
    let cut = Tolerance::new(zero_cut, 0.0)?;
    let ambiguous = |found: usize| SpectralError::ClusterAmbiguity {
        near: lambda,
        detail: format!(
            "generalized eigenspace has numerical dimension {found}, expected {multiplicity}"
        ),
    };

    // levels[k] spans ker A^{k+1} ⊖ ker A^k
    let mut kernel: Vec<Vec<C64>> = Vec::new();
    let mut levels: Vec<Vec<Vec<C64>>> = Vec::new();
    while kernel.len() < multiplicity {
        // ker A^k = ker((I − ZZ†)A) with Z spanning ker A^{k−1}
        let mut b = a.clone();
        for q in &kernel {
            let qa: Vec<C64> = (0..n)
                .map(|j| (0..n).map(|r| q[r].conj() * a[(r, j)]).sum())
                .collect();
            for r in 0..n {
                for j in 0..n {
                    let d = q[r] * qa[j];
                    b[(r, j)] -= d;
                }
            }
        }
        let null = null_space(&b, cut)?;
        if null.len() > multiplicity {
            return Err(ambiguous(null.len()));
        }
        let new = pivoted_extension(&null, &kernel, null.len().saturating_sub(kernel.len()));
        if new.is_empty() {
            return Err(ambiguous(kernel.len()));
        }
        kernel.extend(new.iter().cloned());
        levels.push(new);
    }
    if kernel.len() != multiplicity {
        return Err(ambiguous(kernel.len()));
    }

    // tops of chains, built from the highest level down
    let depth = levels.len();
    let mut chains: Vec<Vec<Vec<C64>>> = Vec::new();
    for k in (0..depth).rev() {
        let wanted = levels[k].len() - levels.get(k + 1).map_or(0, Vec::len);
        if wanted == 0 {
            continue;
        }
        // level-k vectors of existing chains, projected onto the level subspace
        let existing: Vec<Vec<C64>> = chains
            .iter()
            .map(|c| {
                let v = &c[k];
                let mut proj = vec![C64::new(0.0, 0.0); n];
                for l in &levels[k] {
                    let coef = inner(l, v);
                    for (x, y) in proj.iter_mut().zip(l) {
                        *x += coef * y;
                    }
                }
                proj
            })
            .collect();
        let ortho = pivoted_extension(&existing, &[], existing.len());
        let tops = pivoted_extension(&levels[k], &ortho, wanted);
        if tops.len() != wanted {
            return Err(ambiguous(kernel.len()));
        }
        for t in tops {
            // chain[i] holds ψ_{i+1}; ψ_{i} = Aψ_{i+1}
            let mut chain = vec![t];
            for _ in 0..k {
                let next = a.matvec(chain.last().unwrap());
                chain.push(next);
            }
            chain.reverse();
            chains.push(chain);
        }
    }
    for chain in &mut chains {
        let head = &chain[0];
        let nrm = norm(head);
        if nrm == 0.0 {
            return Err(ambiguous(kernel.len()));
        }
        let lead = head
            .iter()
            .find(|z| z.norm() > 1e-8 * nrm)
            .copied()
            .unwrap_or(C64::new(1.0, 0.0));
        let gauge = lead.conj() / (lead.norm() * nrm);
        for v in chain.iter_mut() {
            for z in v.iter_mut() {
                *z *= gauge;
            }
        }
    }
    chains.sort_by_key(|c| std::cmp::Reverse(c.len()));
    if chains.iter().map(Vec::len).sum::<usize>() != multiplicity {
        return Err(ambiguous(kernel.len()));
    }
    Ok(chains)
}
