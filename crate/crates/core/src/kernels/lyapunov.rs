use super::eigen::SYM_TOL;
use super::lu::Lu;
use super::Matrix;
use crate::error::{Error, Result};

/// Solves `M·S + S·Mᵀ = B` for symmetric `S`, given symmetric `B`.
///
/// `M + Mᵀ` must be positive definite. That puts every eigenvalue of `M` in
/// the open right half-plane, so `λᵢ + λ̄ⱼ ≠ 0` and the solution is unique
/// (and symmetric, because the transposed equation has the same solution).
///
/// The solve is a dense direct one over the `n(n+1)/2` independent entries
/// of `S`, i.e. the Kronecker system `(I⊗M + M⊗I)·vec(S) = vec(B)` restricted
/// to symmetric `S`. Cost is `O(n⁶)`; this is the expensive step of the polar
/// lifting.
pub fn solve_lyapunov_sym(m: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = m.rows();
    if !m.is_square() {
        return Err(Error::NotSquare {
            op: "solve_lyapunov_sym",
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if b.shape() != (n, n) {
        return Err(Error::ShapeMismatch {
            op: "solve_lyapunov_sym",
            expected: format!("{n}x{n}"),
            got: format!("{}x{}", b.rows(), b.cols()),
        });
    }
    let asym = b.asymmetry();
    if asym > SYM_TOL * b.frobenius_norm().max(1.0) {
        return Err(Error::NotSymmetric {
            op: "solve_lyapunov_sym",
            asymmetry: asym,
        });
    }
    let msym = m.sym_part().scale(2.0);
    if let Some(reason) = cholesky_failure(&msym) {
        return Err(Error::ArgumentsTooFarApart {
            reason: format!("M + Mᵀ is not positive definite ({reason})"),
        });
    }

    let index = |i: usize, j: usize| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        // row-major packed upper triangle
        a * n - a * (a + 1) / 2 + b
    };
    let dim = n * (n + 1) / 2;
    let mut system = Matrix::zeros(dim, dim);
    let mut rhs = vec![0.0; dim];
    for a in 0..n {
        for c in a..n {
            let row = index(a, c);
            rhs[row] = 0.5 * (b[(a, c)] + b[(c, a)]);
            // (M·S)_{ac} = Σₖ M_{ak} S_{kc};  (S·Mᵀ)_{ac} = Σₖ S_{ak} M_{ck}
            for k in 0..n {
                system[(row, index(k, c))] += m[(a, k)];
                system[(row, index(a, k))] += m[(c, k)];
            }
        }
    }
    let lu = Lu::factor(&system).map_err(|_| Error::ArgumentsTooFarApart {
        reason: "Lyapunov operator is singular".into(),
    })?;
    let packed = lu.solve_vec(&rhs);
    Ok(Matrix::from_fn(n, n, |i, j| packed[index(i, j)]))
}

/// `None` when the symmetric matrix admits a Cholesky factor, otherwise a
/// short description of where it broke down.
fn cholesky_failure(a: &Matrix) -> Option<String> {
    let n = a.rows();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Some(format!("pivot {j} is {d:.3e}"));
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_case() {
        let s = solve_lyapunov_sym(&Matrix::identity(3), &Matrix::identity(3).scale(2.0)).unwrap();
        assert!((&s - &Matrix::identity(3)).max_abs() < 1e-15);
    }

    #[test]
    fn scalar_case() {
        for &c in &[0.3, 1.0, 4.5] {
            let s = solve_lyapunov_sym(&Matrix::from_rows(&[[c]]), &Matrix::from_rows(&[[2.0]])).unwrap();
            assert!((s[(0, 0)] - 1.0 / c).abs() < 1e-15);
        }
    }

    #[test]
    fn residual_is_small_for_nonsymmetric_m() {
        let m = Matrix::from_rows(&[[1.0, 0.4, -0.2], [-0.3, 0.9, 0.1], [0.25, 0.0, 1.2]]);
        let b = Matrix::from_rows(&[[2.0, 0.1, 0.0], [0.1, 1.0, -0.5], [0.0, -0.5, 3.0]]);
        let s = solve_lyapunov_sym(&m, &b).unwrap();
        let residual = &(&m.matmul(&s) + &s.matmul_tr(&m)) - &b;
        assert!(residual.frobenius_norm() < 1e-13 * b.frobenius_norm());
        assert!(s.asymmetry() < 1e-15);
    }

    #[test]
    fn non_positive_m_is_rejected() {
        let m = Matrix::from_rows(&[[-1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(
            solve_lyapunov_sym(&m, &Matrix::identity(2)),
            Err(Error::ArgumentsTooFarApart { .. })
        ));
    }

    #[test]
    fn asymmetric_rhs_is_rejected() {
        let b = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]);
        assert!(matches!(
            solve_lyapunov_sym(&Matrix::identity(2), &b),
            Err(Error::NotSymmetric { .. })
        ));
    }
}
