use super::lu::Lu;
use super::Matrix;
use crate::error::{Error, Result};

/// Relative skew-symmetry tolerance accepted by [`skew_expm`].
pub const SKEW_TOL: f64 = 1e-10;

const PADE_DEGREE: usize = 6;

/// `exp(scale·Ω)` for skew-symmetric `Ω`.
///
/// Scaling and squaring around a diagonal (6,6) Padé approximant: the
/// argument is halved `s = max(0, ⌈log₂‖scale·Ω‖_F⌉)` times so its norm is at
/// most one, the approximant is evaluated, and the result is squared back.
/// For skew arguments the diagonal approximant is itself orthogonal.
pub fn skew_expm(omega: &Matrix, scale: f64) -> Result<Matrix> {
    if !omega.is_square() {
        return Err(Error::NotSquare {
            op: "skew_expm",
            rows: omega.rows(),
            cols: omega.cols(),
        });
    }
    if !omega.is_finite() || !scale.is_finite() {
        return Err(Error::NonFinite);
    }
    let defect = omega.skew_defect();
    if defect > SKEW_TOL * omega.frobenius_norm().max(1.0) {
        return Err(Error::NotSkew {
            op: "skew_expm",
            defect,
        });
    }
    let n = omega.rows();
    let a = omega.scale(scale);
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let squarings = norm.log2().ceil().max(0.0) as i32;
    let a = a.scale(0.5f64.powi(squarings));

    // N(A) = Σ cₖ Aᵏ, D(A) = N(−A), r = D⁻¹N.
    let mut numer = Matrix::identity(n);
    let mut denom = Matrix::identity(n);
    let mut power = Matrix::identity(n);
    let mut c = 1.0;
    let q = PADE_DEGREE;
    for k in 0..q {
        c *= (q - k) as f64 / (((2 * q - k) * (k + 1)) as f64);
        power = power.matmul(&a);
        numer.axpy(c, &power);
        let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
        denom.axpy(sign * c, &power);
    }
    let mut result = Lu::factor(&denom)?.solve(&numer);
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}
