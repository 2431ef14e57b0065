//! JSON document types and the canonical writer.
//!
//! Complex numbers are `[re, im]` pairs. Canonical text has sorted keys, no
//! insignificant whitespace and every float printed with 17 significant
//! digits, so parsing and re-writing a canonical document is the identity.

use std::io::{self, Write};
use std::path::Path;

use pseudoherm::linalg::{CMatrix, C64};
use pseudoherm::spectral::{
    BasisChoice, GroupKind, JordanBlockSpec, SpectralDecomposition, SynthesisSpec,
};
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::CliError;

pub type Pair = [f64; 2];

fn pair(z: C64) -> Pair {
    [z.re, z.im]
}

fn complex(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

fn vec_pairs(v: &[C64]) -> Vec<Pair> {
    v.iter().copied().map(pair).collect()
}

fn check_finite(values: &[Pair], what: &str) -> Result<(), CliError> {
    if values.iter().flatten().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Parse(format!("{what} has non-finite entries")))
    }
}

/// Dense square matrix; `antilinear` marks `M∘K` semantics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDocument {
    pub n: usize,
    pub data: Vec<Vec<Pair>>,
    #[serde(default)]
    pub antilinear: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl MatrixDocument {
    pub fn from_matrix(m: &CMatrix, antilinear: bool, label: Option<String>) -> Self {
        MatrixDocument {
            n: m.n(),
            data: m.rows().iter().map(|r| vec_pairs(r)).collect(),
            antilinear,
            label,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix, CliError> {
        if self.data.len() != self.n || self.data.iter().any(|r| r.len() != self.n) {
            return Err(CliError::Parse(format!(
                "matrix declares n = {} but data is not {0}×{0}",
                self.n
            )));
        }
        for row in &self.data {
            check_finite(row, "matrix")?;
        }
        let rows = self
            .data
            .iter()
            .map(|r| r.iter().map(complex).collect())
            .collect();
        Ok(CMatrix::from_rows(rows)?)
    }
}

/// State vector; a bare array of pairs is accepted as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorDocument {
    Full {
        n: usize,
        data: Vec<Pair>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Bare(Vec<Pair>),
}

impl VectorDocument {
    pub fn to_vector(&self) -> Result<Vec<C64>, CliError> {
        let data = match self {
            VectorDocument::Full { n, data, .. } => {
                if data.len() != *n {
                    return Err(CliError::Parse(format!(
                        "vector declares n = {n} but has {} entries",
                        data.len()
                    )));
                }
                data
            }
            VectorDocument::Bare(data) => data,
        };
        check_finite(data, "vector")?;
        Ok(data.iter().map(complex).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindTag {
    Real,
    Plus,
    Minus,
    Unpaired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDocument {
    pub psi: Vec<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phi: Vec<Vec<Pair>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDocument {
    pub eigenvalue: Pair,
    pub kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<usize>,
    pub block_dims: Vec<usize>,
    pub chains: Vec<ChainDocument>,
}

/// Jordan chains `ψ` (and optionally their duals `φ`) grouped by eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionDocument {
    pub n: usize,
    pub groups: Vec<GroupDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl DecompositionDocument {
    pub fn from_decomposition(dec: &SpectralDecomposition, label: Option<String>) -> Self {
        let groups = dec
            .groups()
            .iter()
            .map(|g| {
                let (kind, pair_id) = match g.kind {
                    GroupKind::Real => (KindTag::Real, None),
                    GroupKind::Plus(id) => (KindTag::Plus, Some(id)),
                    GroupKind::Minus(id) => (KindTag::Minus, Some(id)),
                    GroupKind::Unpaired => (KindTag::Unpaired, None),
                };
                GroupDocument {
                    eigenvalue: pair(g.eigenvalue),
                    kind,
                    pair: pair_id,
                    block_dims: g.block_dims(),
                    chains: g
                        .chains
                        .iter()
                        .map(|c| ChainDocument {
                            psi: c.psi.iter().map(|v| vec_pairs(v)).collect(),
                            phi: c.phi.iter().map(|v| vec_pairs(v)).collect(),
                        })
                        .collect(),
                }
            })
            .collect();
        DecompositionDocument {
            n: dec.n(),
            groups,
            label,
        }
    }

    /// Rebuilds the decomposition from the `ψ` chains; supplied `φ` chains
    /// must agree with the dual basis.
    pub fn to_decomposition(&self) -> Result<SpectralDecomposition, CliError> {
        let bad = |m: String| Err(CliError::Parse(m));
        let mut layout = Vec::with_capacity(self.groups.len());
        let mut columns: Vec<Vec<C64>> = Vec::with_capacity(self.n);
        let mut given_phi: Vec<Option<Vec<C64>>> = Vec::with_capacity(self.n);
        for (g, group) in self.groups.iter().enumerate() {
            let kind = match (group.kind, group.pair) {
                (KindTag::Real, None) => GroupKind::Real,
                (KindTag::Unpaired, None) => GroupKind::Unpaired,
                (KindTag::Plus, Some(id)) => GroupKind::Plus(id),
                (KindTag::Minus, Some(id)) => GroupKind::Minus(id),
                _ => {
                    return bad(format!(
                        "group {g}: pair id required exactly for plus/minus groups"
                    ))
                }
            };
            let dims: Vec<usize> = group.chains.iter().map(|c| c.psi.len()).collect();
            if dims != group.block_dims {
                return bad(format!("group {g}: block_dims disagree with chain lengths"));
            }
            for (a, chain) in group.chains.iter().enumerate() {
                if !chain.phi.is_empty() && chain.phi.len() != chain.psi.len() {
                    return bad(format!("group {g}, chain {a}: psi and phi lengths differ"));
                }
                for (i, v) in chain.psi.iter().enumerate() {
                    if v.len() != self.n {
                        return bad(format!(
                            "group {g}, chain {a}: vector length {} != n",
                            v.len()
                        ));
                    }
                    check_finite(v, "chain vector")?;
                    columns.push(v.iter().map(complex).collect());
                    given_phi.push(chain.phi.get(i).map(|p| p.iter().map(complex).collect()));
                }
            }
            layout.push((JordanBlockSpec::new(complex(&group.eigenvalue), dims), kind));
        }
        if columns.len() != self.n {
            return bad(format!(
                "chains span {} vectors, expected {}",
                columns.len(),
                self.n
            ));
        }
        let basis = CMatrix::from_columns(&columns)?;
        let tol = pseudoherm::linalg::Tolerance::new(0.0, 1e-14)?;
        let dec = SpectralDecomposition::from_basis(&layout, &basis, tol)?;
        let dual = dec.phi_matrix();
        for (k, phi) in given_phi.iter().enumerate() {
            if let Some(phi) = phi {
                let col = dual.col(k);
                let scale = col.iter().map(|z| z.norm()).fold(1.0, f64::max);
                let dev = col
                    .iter()
                    .zip(phi)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                if dev > 1e-8 * scale {
                    return bad(format!(
                        "phi vector {k} is not dual to the psi chains (deviation {dev:.3e})"
                    ));
                }
            }
        }
        Ok(dec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignsDocument {
    pub signs: Vec<Vec<i8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpecDocument {
    pub eigenvalue: Pair,
    pub block_dims: Vec<usize>,
}

fn default_true() -> bool {
    true
}

/// Input of `synthesize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSpecDocument {
    pub groups: Vec<GroupSpecDocument>,
    #[serde(default = "default_true")]
    pub pseudo_hermitian: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<MatrixDocument>,
}

pub const DEFAULT_CONDITION: f64 = 10.0;

impl SynthesisSpecDocument {
    /// The library spec and the seed actually used (`None` for an explicit
    /// basis).
    pub fn to_spec(
        &self,
        seed_override: Option<u64>,
    ) -> Result<(SynthesisSpec, Option<u64>), CliError> {
        let groups = self
            .groups
            .iter()
            .map(|g| {
                check_finite(&[g.eigenvalue], "eigenvalue")?;
                Ok(JordanBlockSpec::new(
                    complex(&g.eigenvalue),
                    g.block_dims.clone(),
                ))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let (basis, seed) = match &self.basis {
            Some(doc) => {
                if seed_override.is_some() || self.seed.is_some() {
                    return Err(CliError::Usage(
                        "a seed cannot be combined with an explicit basis".into(),
                    ));
                }
                (BasisChoice::Explicit(doc.to_matrix()?), None)
            }
            None => {
                let seed = seed_override.or(self.seed).unwrap_or(0);
                let condition = self.condition.unwrap_or(DEFAULT_CONDITION);
                if !(condition.is_finite() && condition >= 1.0) {
                    return Err(CliError::Parse(format!(
                        "condition {condition} must be >= 1"
                    )));
                }
                (BasisChoice::Seeded { seed, condition }, Some(seed))
            }
        };
        Ok((
            SynthesisSpec {
                groups,
                basis,
                pseudo_hermitian: self.pseudo_hermitian,
            },
            seed,
        ))
    }
}

/// Any document that carries a Hamiltonian.
pub enum HamiltonianSource {
    Matrix(MatrixDocument),
    Decomposition(DecompositionDocument),
}

/// Distinguishes matrix documents, decomposition documents and analyze
/// reports (whose `decomposition` member is used).
pub fn parse_hamiltonian(text: &str) -> Result<HamiltonianSource, CliError> {
    let value: Value = serde_json::from_str(text)?;
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::Parse("expected a JSON object".into()))?;
    if obj.contains_key("data") {
        Ok(HamiltonianSource::Matrix(serde_json::from_value(value)?))
    } else if obj.contains_key("groups") {
        Ok(HamiltonianSource::Decomposition(serde_json::from_value(
            value,
        )?))
    } else if let Some(inner) = obj.get("decomposition") {
        Ok(HamiltonianSource::Decomposition(serde_json::from_value(
            inner.clone(),
        )?))
    } else {
        Err(CliError::Parse(
            "expected a matrix document (data) or a decomposition document (groups)".into(),
        ))
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

struct CanonicalFormatter;

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Canonical JSON text (sorted keys, 17 significant digits) with a trailing
/// newline.
pub fn to_canonical<T: Serialize>(doc: &T) -> Result<String, CliError> {
    let value = serde_json::to_value(doc)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
