use super::{CMatrix, LinalgError, Tolerance, C64};

/// Complex Schur form `A = Q·T·Q†` with `Q` unitary and `T` upper triangular.
#[derive(Debug, Clone)]
pub struct Schur {
    pub q: CMatrix,
    pub t: CMatrix,
}

impl Schur {
    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.n()).map(|i| self.t[(i, i)]).collect()
    }

    /// `‖A − Q·T·Q†‖_F`.
    pub fn residual(&self, a: &CMatrix) -> f64 {
        a.distance(&(&(&self.q * &self.t) * &self.q.adjoint()))
    }
}

fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Reduces `a` to upper Hessenberg form, returning `(H, Q)` with `A = Q·H·Q†`.
fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.n();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x[0] / x[0].norm()
        };
        let mut v = x.clone();
        v[0] += phase * xnorm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H ← (I − 2vv†)·H on rows k+1..n
        for j in 0..n {
            let s: C64 = v
                .iter()
                .enumerate()
                .map(|(r, vr)| vr.conj() * h[(k + 1 + r, j)])
                .sum();
            for (r, vr) in v.iter().enumerate() {
                h[(k + 1 + r, j)] -= vr * s * 2.0;
            }
        }
        // H ← H·(I − 2vv†) and Q ← Q·(I − 2vv†) on columns k+1..n
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let s: C64 = v
                    .iter()
                    .enumerate()
                    .map(|(c, vc)| m[(i, k + 1 + c)] * vc)
                    .sum();
                for (c, vc) in v.iter().enumerate() {
                    m[(i, k + 1 + c)] -= s * vc.conj() * 2.0;
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
    (h, q)
}

/// Givens pair `(c, s)` with `[c s; −s̄ c]·[x; y] = [r; 0]`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let nx = x.norm();
    let ny = y.norm();
    if ny == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if nx == 0.0 {
        return (0.0, y.conj() / ny);
    }
    let nrm = nx.hypot(ny);
    (nx / nrm, (x / nx) * y.conj() / nrm)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let l1 = mid + disc;
    let l2 = mid - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Schur decomposition by Hessenberg reduction and Wilkinson-shifted
/// QR sweeps. Fails after `30·n` sweeps without full deflation.
pub fn schur(a: &CMatrix) -> Result<Schur, LinalgError> {
    let n = a.n();
    let (mut h, mut q) = hessenberg(a);
    if n <= 1 {
        return Ok(Schur { q, t: h });
    }
    let eps = f64::EPSILON;
    let hnorm = h.norm_fro().max(f64::MIN_POSITIVE);
    let cap = 30 * n;
    let mut sweeps = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let mut s = abs1(h[(lo - 1, lo - 1)]) + abs1(h[(lo, lo)]);
            if s == 0.0 {
                s = hnorm;
            }
            if abs1(h[(lo, lo - 1)]) <= eps * s {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        sweeps += 1;
        since_deflation += 1;
        if sweeps > cap {
            return Err(LinalgError::NonConvergence(cap));
        }
        let shift = if since_deflation.is_multiple_of(10) {
            // exceptional shift breaks cycles
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].re.abs(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            if k > lo {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let first_col = if k > lo { k - 1 } else { lo };
            for j in first_col..n {
                let a0 = h[(k, j)];
                let b0 = h[(k + 1, j)];
                h[(k, j)] = a0 * c + s * b0;
                h[(k + 1, j)] = -s.conj() * a0 + b0 * c;
            }
            if k > lo {
                h[(k + 1, k - 1)] = C64::new(0.0, 0.0);
            }
            let last_row = (k + 2).min(hi);
            for i in 0..=last_row {
                let a0 = h[(i, k)];
                let b0 = h[(i, k + 1)];
                h[(i, k)] = a0 * c + b0 * s.conj();
                h[(i, k + 1)] = -a0 * s + b0 * c;
            }
            for i in 0..n {
                let a0 = q[(i, k)];
                let b0 = q[(i, k + 1)];
                q[(i, k)] = a0 * c + b0 * s.conj();
                q[(i, k + 1)] = -a0 * s + b0 * c;
            }
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok(Schur { q, t: h })
}

/// Eigenvalues with multiplicity, in Schur-diagonal order.
///
/// The Schur residual is checked against `tol` scaled by `n·‖A‖_F`; a
/// factorization that misses it is treated as non-convergence.
pub fn eigenvalues(a: &CMatrix, tol: Tolerance) -> Result<Vec<C64>, LinalgError> {
    let s = schur(a)?;
    let scale = a.n() as f64 * a.norm_fro();
    if s.residual(a) > tol.threshold(scale).max(1e3 * f64::EPSILON * scale) {
        return Err(LinalgError::NonConvergence(30 * a.n()));
    }
    Ok(s.eigenvalues())
}

/// Eigen-decomposition of the Hermitian part of `a`: ascending eigenvalues
/// and the matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix), LinalgError> {
    let herm = (a + &a.adjoint()).scale_re(0.5);
    let s = schur(&herm)?;
    let n = a.n();
    let mut order: Vec<usize> = (0..n).collect();
    let values: Vec<f64> = (0..n).map(|i| s.t[(i, i)].re).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut vecs = CMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_col(dst, &s.q.col(src));
    }
    Ok((order.iter().map(|&i| values[i]).collect(), vecs))
}
