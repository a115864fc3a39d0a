use super::Matrix;
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, `P·A = L·U`, packed in one buffer.
pub(crate) struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub(crate) fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                op: "lu",
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);

        for k in 0..n {
            let (piv, piv_abs) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_abs <= scale * 1e-14 * n as f64 {
                return Err(Error::Singular);
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let pivot = lu[k * n + k];
            let (upper, lower) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n + k + 1..k * n + n];
            for row in lower.chunks_exact_mut(n) {
                let l = row[k] / pivot;
                row[k] = l;
                if l != 0.0 {
                    for (x, &u) in row[k + 1..].iter_mut().zip(pivot_row) {
                        *x -= l * u;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    /// Solves `A·X = B` for every column of `B`.
    pub(crate) fn solve(&self, b: &Matrix) -> Matrix {
        let n = self.n;
        assert_eq!(b.rows(), n, "lu solve: rhs has {} rows, expected {n}", b.rows());
        let m = b.cols();
        let mut x = Matrix::from_fn(n, m, |i, j| b[(self.perm[i], j)]);
        let xs = x.as_mut_slice();
        // forward substitution with unit lower factor
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[i * n + k];
                if l != 0.0 {
                    for j in 0..m {
                        xs[i * m + j] -= l * xs[k * m + j];
                    }
                }
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = self.lu[i * n + k];
                if u != 0.0 {
                    for j in 0..m {
                        xs[i * m + j] -= u * xs[k * m + j];
                    }
                }
            }
            let d = self.lu[i * n + i];
            for j in 0..m {
                xs[i * m + j] /= d;
            }
        }
        x
    }

    pub(crate) fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Matrix::from_fn(self.n, 1, |i, _| b[i]);
        self.solve(&rhs).into_vec()
    }
}
