//! Seeded random generators for bases and test ensembles.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{CMatrix, C64};
use crate::spectral::{BasisChoice, JordanBlockSpec, SynthesisSpec};

pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    (0..n).map(|_| gaussian_complex(rng)).collect()
}

/// Haar-distributed unitary from Gram–Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = gaussian_vector(n, rng);
        for _ in 0..2 {
            for q in &cols {
                let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in v.iter_mut().zip(q) {
                    *x -= proj * a;
                }
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / nrm).collect());
        }
    }
    CMatrix::from_columns(&cols).expect("square by construction")
}

/// `U·diag(σ)·V†` with singular values spread geometrically over
/// `[1, condition]`, so the 2-norm condition number is exactly `condition`.
pub fn random_basis<R: Rng + ?Sized>(n: usize, condition: f64, rng: &mut R) -> CMatrix {
    let u = random_unitary(n, rng);
    let v = random_unitary(n, rng);
    let sigma: Vec<C64> = (0..n)
        .map(|k| {
            let frac = if n > 1 {
                k as f64 / (n - 1) as f64
            } else {
                0.0
            };
            C64::new(condition.powf(frac), 0.0)
        })
        .collect();
    &(&u * &CMatrix::diag(&sigma)) * &v.adjoint()
}

/// Shape constraints for [`random_spec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleShape {
    pub max_n: usize,
    pub max_block: usize,
    pub max_condition: f64,
}

impl Default for EnsembleShape {
    fn default() -> Self {
        EnsembleShape {
            max_n: 8,
            max_block: 3,
            max_condition: 1e3,
        }
    }
}

fn random_dims<R: Rng + ?Sized>(rng: &mut R, budget: usize, max_block: usize) -> Vec<usize> {
    let count = rng.gen_range(1..=budget.clamp(1, 3));
    let mut dims = Vec::new();
    let mut left = budget;
    for _ in 0..count {
        if left == 0 {
            break;
        }
        let p = rng.gen_range(1..=max_block.min(left));
        dims.push(p);
        left -= p;
    }
    dims
}

/// Random pseudo-Hermitian synthesis spec mixing real groups and conjugate
/// pairs. Eigenvalues sit on a grid with spacing 0.5 so that groups stay well
/// separated; the basis condition number is log-uniform in
/// `[1, max_condition]`.
pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, shape: EnsembleShape) -> SynthesisSpec {
    let mut groups: Vec<JordanBlockSpec> = Vec::new();
    let mut used: Vec<C64> = Vec::new();
    let mut n = 0;
    let target = rng.gen_range(1..=shape.max_n);
    let mut attempts = 0;
    while n < target && attempts < 50 {
        attempts += 1;
        let left = target - n;
        let pair = left >= 2 && rng.gen_bool(0.4);
        let value = if pair {
            C64::new(
                rng.gen_range(-4..=4) as f64 * 0.5,
                rng.gen_range(1..=3) as f64 * 0.5,
            )
        } else {
            C64::new(rng.gen_range(-4..=4) as f64 * 0.5, 0.0)
        };
        if used.contains(&value) {
            continue;
        }
        let budget = if pair { left / 2 } else { left };
        let dims = random_dims(rng, budget, shape.max_block);
        let size: usize = dims.iter().sum();
        used.push(value);
        if pair {
            used.push(value.conj());
            groups.push(JordanBlockSpec::new(value, dims.clone()));
            groups.push(JordanBlockSpec::new(value.conj(), dims));
            n += 2 * size;
        } else {
            groups.push(JordanBlockSpec::new(value, dims));
            n += size;
        }
    }
    let condition = shape.max_condition.max(1.0).powf(rng.gen::<f64>());
    SynthesisSpec {
        groups,
        basis: BasisChoice::Seeded {
            seed: rng.gen(),
            condition,
        },
        pseudo_hermitian: true,
    }
}
