use super::{CMatrix, LinalgError, Tolerance, C64};

/// `P·A = L·U` with unit-lower `L` and `U` packed into one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    packed: CMatrix,
    perm: Vec<usize>,
}

impl Lu {
    /// Partial-pivoted factorization. A pivot with magnitude at or below
    /// `tol.abs + tol.rel·n·max|a_ij|` is reported as singular.
    pub fn factor(a: &CMatrix, tol: Tolerance) -> Result<Self, LinalgError> {
        let n = a.n();
        let threshold = tol.threshold(n as f64 * a.max_abs());
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot_mag) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].norm()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot_mag <= threshold {
                return Err(LinalgError::Singular {
                    pivot: pivot_mag,
                    threshold,
                });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                if l.re == 0.0 && l.im == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= l * u;
                }
            }
        }
        Ok(Lu { packed: lu, perm })
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let n = self.packed.n();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.packed[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.packed[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.packed[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        let n = b.n();
        let mut out = CMatrix::zeros(n);
        for j in 0..n {
            out.set_col(j, &self.solve_vec(&b.col(j)));
        }
        out
    }

    pub fn determinant(&self) -> C64 {
        let n = self.packed.n();
        let mut det: C64 = (0..n).map(|i| self.packed[(i, i)]).product();
        // sign of the permutation
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.perm[i];
                len += 1;
            }
            if len % 2 == 0 {
                det = -det;
            }
        }
        det
    }
}

/// Solves `A·X = B`.
pub fn solve(a: &CMatrix, b: &CMatrix, tol: Tolerance) -> Result<CMatrix, LinalgError> {
    if a.n() != b.n() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    Ok(Lu::factor(a, tol)?.solve(b))
}

pub fn inverse(a: &CMatrix, tol: Tolerance) -> Result<CMatrix, LinalgError> {
    solve(a, &CMatrix::identity(a.n()), tol)
}
