use super::Matrix;
use crate::error::{Error, Result};

/// Relative threshold on `|Rⱼⱼ| / ‖A‖_F` below which a column counts as
/// linearly dependent.
pub const RANK_TOL: f64 = 1e-12;

/// Q-factor of the thin Householder QR decomposition of a tall matrix.
///
/// The sign of each column is chosen so that the diagonal of R is
/// nonnegative, which makes the factor unique for full-rank input.
pub fn thin_qr_q_factor(a: &Matrix) -> Result<Matrix> {
    let (p, n) = a.shape();
    if p < n {
        return Err(Error::ShapeMismatch {
            op: "thin_qr_q_factor",
            expected: "rows >= cols".into(),
            got: format!("{p}x{n}"),
        });
    }
    let norm = a.frobenius_norm();
    // Work column-major: each column is one contiguous slice.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut r_diag = vec![0.0; n];

    for k in 0..n {
        let x = &cols[k][k..];
        let alpha = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if alpha <= RANK_TOL * norm || norm == 0.0 {
            return Err(Error::RankDeficient { column: k });
        }
        // v = x + sign(x₀)·‖x‖·e₀ avoids cancellation; Hx = −sign(x₀)‖x‖ e₀.
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = x.to_vec();
        v[0] += sign * alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        r_diag[k] = -sign * alpha;
        for col in cols.iter_mut().skip(k + 1) {
            apply_reflector(&v, vnorm2, &mut col[k..]);
        }
        reflectors.push(v);
    }

    // Q = H₀ H₁ … H_{n−1} applied to the first n columns of the identity.
    let mut q_cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            e
        })
        .collect();
    for (k, v) in reflectors.iter().enumerate().rev() {
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        for col in q_cols.iter_mut() {
            apply_reflector(v, vnorm2, &mut col[k..]);
        }
    }
    for (j, col) in q_cols.iter_mut().enumerate() {
        if r_diag[j] < 0.0 {
            col.iter_mut().for_each(|t| *t = -*t);
        }
    }
    Ok(Matrix::from_fn(p, n, |i, j| q_cols[j][i]))
}

fn apply_reflector(v: &[f64], vnorm2: f64, x: &mut [f64]) {
    let dot: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vnorm2;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= f * vi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defect(q: &Matrix) -> f64 {
        (&q.tr_matmul(q) - &Matrix::identity(q.cols())).frobenius_norm()
    }

    #[test]
    fn orthonormal_input_is_a_fixed_point() {
        let a = Matrix::eye(5, 3);
        let q = thin_qr_q_factor(&a).unwrap();
        assert!((&q - &a).max_abs() < 1e-15);
    }

    #[test]
    fn column_scaling_is_removed() {
        let a = Matrix::from_rows(&[[2.0, 0.0], [0.0, 3.0], [0.0, 0.0]]);
        let q = thin_qr_q_factor(&a).unwrap();
        assert_eq!(q, Matrix::eye(3, 2));
    }

    #[test]
    fn negative_diagonal_is_flipped() {
        let a = Matrix::from_rows(&[[-2.0, 1.0], [0.0, -3.0], [0.0, 0.0]]);
        let q = thin_qr_q_factor(&a).unwrap();
        // R = Qᵀ A must have a nonnegative diagonal.
        let r = q.tr_matmul(&a);
        assert!(r[(0, 0)] > 0.0 && r[(1, 1)] > 0.0);
        assert!(defect(&q) < 1e-15);
    }

    #[test]
    fn rank_deficiency_names_the_column() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 0.0], [1.0, 2.0, 1.0], [0.0, 0.0, 1.0], [1.0, 2.0, 5.0]]);
        assert!(matches!(
            thin_qr_q_factor(&a),
            Err(Error::RankDeficient { column: 1 })
        ));
        assert!(matches!(
            thin_qr_q_factor(&Matrix::zeros(3, 2)),
            Err(Error::RankDeficient { column: 0 })
        ));
    }

    #[test]
    fn wide_input_is_rejected() {
        assert!(thin_qr_q_factor(&Matrix::zeros(2, 3)).is_err());
    }
}
