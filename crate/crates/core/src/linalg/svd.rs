use super::{CMatrix, LinalgError, Tolerance, C64};

/// `A = U·diag(s)·V†`, singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD. Columns of a working copy of `A` are
/// rotated pairwise until mutually orthogonal; the accumulated rotations form
/// `V`. Accurate small singular values make this the rank-revealing step.
pub fn svd(a: &CMatrix) -> Result<Svd, LinalgError> {
    let n = a.n();
    let mut g = a.clone();
    let mut v = CMatrix::identity(n);
    let eps = f64::EPSILON;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = C64::new(0.0, 0.0);
                for r in 0..n {
                    let gi = g[(r, i)];
                    let gj = g[(r, j)];
                    alpha += gi.norm_sqr();
                    beta += gj.norm_sqr();
                    gamma += gi.conj() * gj;
                }
                let gabs = gamma.norm();
                if gabs == 0.0 || gabs <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Phase-rotate column j so the coupling is real, then apply a
                // real Jacobi rotation.
                let phase = gamma.conj() / gabs;
                let zeta = (beta - alpha) / (2.0 * gabs);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut g, &mut v] {
                    for r in 0..n {
                        let xi = m[(r, i)];
                        let xj = m[(r, j)] * phase;
                        m[(r, i)] = xi * c - xj * s;
                        m[(r, j)] = xi * s + xj * c;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NonConvergence(MAX_SWEEPS));
    }

    let norms: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|r| g[(r, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let mut u = CMatrix::zeros(n);
    let mut vs = CMatrix::zeros(n);
    let mut s = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        vs.set_col(dst, &v.col(src));
        if sigma > 0.0 {
            let col: Vec<C64> = (0..n).map(|r| g[(r, src)] / sigma).collect();
            u.set_col(dst, &col);
        }
    }
    complete_orthonormal(&mut u, s.iter().filter(|&&x| x > 0.0).count());
    Ok(Svd { u, s, v: vs })
}

/// Fills columns `k..n` of `m` with an orthonormal completion of the first `k`.
fn complete_orthonormal(m: &mut CMatrix, k: usize) {
    let n = m.n();
    let mut filled = k;
    for e in 0..n {
        if filled == n {
            break;
        }
        let mut cand: Vec<C64> = (0..n)
            .map(|r| {
                if r == e {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        for _ in 0..2 {
            for j in 0..filled {
                let col = m.col(j);
                let proj: C64 = col.iter().zip(&cand).map(|(a, b)| a.conj() * b).sum();
                for (c, a) in cand.iter_mut().zip(&col) {
                    *c -= proj * a;
                }
            }
        }
        let nrm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-8 {
            let col: Vec<C64> = cand.iter().map(|z| z / nrm).collect();
            m.set_col(filled, &col);
            filled += 1;
        }
    }
}

fn rank_threshold(s: &[f64], tol: Tolerance) -> f64 {
    tol.threshold(s.first().copied().unwrap_or(0.0))
}

/// Number of singular values above `tol.abs + tol.rel·σ_max`.
pub fn rank(a: &CMatrix, tol: Tolerance) -> Result<usize, LinalgError> {
    let d = svd(a)?;
    let thr = rank_threshold(&d.s, tol);
    Ok(d.s.iter().filter(|&&x| x > thr).count())
}

pub fn nullity(a: &CMatrix, tol: Tolerance) -> Result<usize, LinalgError> {
    Ok(a.n() - rank(a, tol)?)
}

/// Orthonormal basis of the numerical kernel, one vector per entry.
pub fn null_space(a: &CMatrix, tol: Tolerance) -> Result<Vec<Vec<C64>>, LinalgError> {
    let d = svd(a)?;
    let thr = rank_threshold(&d.s, tol);
    Ok((0..a.n())
        .filter(|&j| d.s[j] <= thr)
        .map(|j| d.v.col(j))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn reconstructs_input() {
        for (n, seed) in [(1, 3), (3, 4), (7, 5), (20, 6)] {
            let a = random(n, seed);
            let d = svd(&a).unwrap();
            let sig = CMatrix::diag(&d.s.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
            let back = &(&d.u * &sig) * &d.v.adjoint();
            assert!(back.distance(&a) < 1e-12 * a.norm_fro().max(1.0));
            assert!((&d.v.adjoint() * &d.v).distance(&CMatrix::identity(n)) < 1e-12);
            assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        assert_eq!(rank(&CMatrix::zeros(3), Tolerance::default()).unwrap(), 0);
    }

    #[test]
    fn nilpotent_block_has_rank_one() {
        let a = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert_eq!(rank(&a, Tolerance::default()).unwrap(), 1);
        let ker = null_space(&a, Tolerance::default()).unwrap();
        assert_eq!(ker.len(), 1);
        assert!(a.matvec(&ker[0]).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn jordan_shifted_mashhoon_has_rank_one() {
        // H_eff − E·I with s = 0 is [[0, ir], [0, 0]].
        let a = CMatrix::from_rows(vec![
            vec![C64::new(0.0, 0.0), C64::new(0.0, 1.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        ])
        .unwrap();
        assert_eq!(rank(&a, Tolerance::default()).unwrap(), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn rank_plus_nullity_is_dimension(seed in any::<u64>(), n in 1usize..7, k in 0usize..7) {
            // product of n×k and k×n factors has rank min(n, k) generically
            let k = k.min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut left = CMatrix::zeros(n);
            let mut right = CMatrix::zeros(n);
            for i in 0..n {
                for j in 0..k {
                    left[(i, j)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    right[(j, i)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            let a = &left * &right;
            let tol = Tolerance::new(1e-10, 1e-9).unwrap();
            let r = rank(&a, tol).unwrap();
            let ker = null_space(&a, tol).unwrap();
            prop_assert_eq!(r + ker.len(), n);
            prop_assert_eq!(r, k);
            for v in &ker {
                let av = a.matvec(v);
                prop_assert!(av.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() < 1e-9 * a.norm_fro().max(1.0));
            }
        }
    }
}
