use super::Matrix;
use crate::error::{Error, Result};

/// Eigenvalues at or below this are treated as loss of definiteness.
pub const EPS_SPD: f64 = 1e-14;

/// Relative symmetry tolerance for inputs declared symmetric.
pub const SYM_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 64;

/// Symmetric eigendecomposition `A = U·diag(λ)·Uᵀ` by cyclic Jacobi rotations.
///
/// Returns the eigenvalues (unsorted) and `U` with eigenvectors as columns.
/// The strictly upper triangle is read; symmetry is the caller's concern.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    assert!(a.is_square(), "symmetric_eigen: non-square input");
    let n = a.rows();
    let mut m = a.sym_part().into_vec();
    let mut u = Matrix::identity(n).into_vec();
    let total = m.iter().map(|v| v * v).sum::<f64>().sqrt();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-18 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // columns p, q
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                // rows p, q
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let ukp = u[k * n + p];
                    let ukq = u[k * n + q];
                    u[k * n + p] = c * ukp - s * ukq;
                    u[k * n + q] = s * ukp + c * ukq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[i * n + i]).collect();
    (values, Matrix::new(n, n, u).expect("finite eigenvectors"))
}

/// `S^{−1/2}` for symmetric positive definite `S`, via eigendecomposition.
pub fn spd_inv_sqrt(s: &Matrix) -> Result<Matrix> {
    if !s.is_square() {
        return Err(Error::NotSquare {
            op: "spd_inv_sqrt",
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    let asym = s.asymmetry();
    if asym > SYM_TOL * s.frobenius_norm().max(1.0) {
        return Err(Error::NotSymmetric {
            op: "spd_inv_sqrt",
            asymmetry: asym,
        });
    }
    let (values, u) = symmetric_eigen(s);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > EPS_SPD) {
        return Err(Error::NotPositiveDefinite { eigenvalue: min });
    }
    let n = s.rows();
    let inv_sqrt: Vec<f64> = values.iter().map(|l| 1.0 / l.sqrt()).collect();
    // U·diag(λ^{−1/2})·Uᵀ, assembled symmetric.
    let mut r = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..n).map(|k| u[(i, k)] * inv_sqrt[k] * u[(j, k)]).sum();
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    Ok(r)
}
