use super::eigen::SYM_TOL;
use super::expm::SKEW_TOL;
use super::Matrix;
use crate::error::{Error, Result};

pub const MAX_INNER_ITERS: usize = 100;
pub const INNER_TOL: f64 = 1e-12;

/// Symmetric `S` solving `2S + S² + G + S·Ω − Ω·S = 0`.
///
/// This is the normal-space correction of the orthographic retraction:
/// with `Q = X + V + X·S`, `Ω = XᵀV` (skew) and `G = VᵀV`, the condition
/// `QᵀQ = I` expands to exactly this equation.
///
/// Solved by the iteration `S ← −½(S² + G + S·Ω − Ω·S)` from `S = 0`. The
/// residual at the current iterate is `2‖S − S_next‖_F`, so the returned
/// iterate carries a certified residual below [`INNER_TOL`].
pub fn solve_ortho_retraction_eq(omega: &Matrix, g: &Matrix) -> Result<Matrix> {
    let n = omega.rows();
    if !omega.is_square() || g.shape() != (n, n) {
        return Err(Error::ShapeMismatch {
            op: "solve_ortho_retraction_eq",
            expected: format!("{n}x{n} skew and {n}x{n} symmetric"),
            got: format!(
                "{}x{} and {}x{}",
                omega.rows(),
                omega.cols(),
                g.rows(),
                g.cols()
            ),
        });
    }
    let skew = omega.skew_defect();
    if skew > SKEW_TOL * omega.frobenius_norm().max(1.0) {
        return Err(Error::NotSkew {
            op: "solve_ortho_retraction_eq",
            defect: skew,
        });
    }
    let asym = g.asymmetry();
    if asym > SYM_TOL * g.frobenius_norm().max(1.0) {
        return Err(Error::NotSymmetric {
            op: "solve_ortho_retraction_eq",
            asymmetry: asym,
        });
    }

    let mut s = Matrix::zeros(n, n);
    let mut last_residual = f64::INFINITY;
    for _ in 0..MAX_INNER_ITERS {
        let next = ortho_update(&s, omega, g);
        let residual = 2.0 * (&s - &next).frobenius_norm();
        if residual < INNER_TOL {
            return Ok(s);
        }
        if !residual.is_finite() || residual > 1e6 {
            last_residual = residual;
            break;
        }
        last_residual = residual;
        s = next;
    }
    Err(Error::TangentTooLarge {
        iterations: MAX_INNER_ITERS,
        residual: last_residual,
    })
}

/// `2S + S² + G + S·Ω − Ω·S`.
pub fn ortho_residual(s: &Matrix, omega: &Matrix, g: &Matrix) -> Matrix {
    let mut r = &s.matmul(s) + g;
    r.add_assign(&(&s.matmul(omega) - &omega.matmul(s)));
    r.axpy(2.0, s);
    r
}

fn ortho_update(s: &Matrix, omega: &Matrix, g: &Matrix) -> Matrix {
    let mut t = &s.matmul(s) + g;
    t.add_assign(&(&s.matmul(omega) - &omega.matmul(s)));
    // The update is symmetric in exact arithmetic; keep it so in floating point.
    let mut t = t.sym_part();
    t.scale_mut(-0.5);
    t
}
