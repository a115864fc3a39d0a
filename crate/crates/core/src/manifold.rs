//! Points and tangent vectors of the compact Stiefel manifold
//! `St(p,n) = {X ∈ ℝ^{p×n} : XᵀX = Iₙ}`, the tangent projector and the
//! discrepancy `δ(X,Y) = ‖Iₙ − XᵀY‖_F`.

use std::fmt;

use crate::error::{Error, Result};
use crate::kernels::{skew_part, thin_qr_q_factor, Matrix};

/// Orthonormality tolerance for accepting a point.
pub const TOL_ORTH: f64 = 1e-9;
/// Tangency tolerance for accepting a tangent vector.
pub const TOL_TAN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    p: usize,
    n: usize,
}

impl Dims {
    pub fn new(p: usize, n: usize) -> Result<Self> {
        if n == 0 || n > p {
            return Err(Error::InvalidDims { p, n });
        }
        Ok(Self { p, n })
    }

    /// Ambient row count.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Column count.
    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, m: &Matrix, op: &'static str) -> Result<()> {
        if m.shape() != (self.p, self.n) {
            return Err(Error::ShapeMismatch {
                op,
                expected: format!("{}x{}", self.p, self.n),
                got: format!("{}x{}", m.rows(), m.cols()),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "St({},{})", self.p, self.n)
    }
}

/// `‖XᵀX − Iₙ‖_F`.
pub fn orthonormality_defect(x: &Matrix) -> f64 {
    let mut g = x.tr_matmul(x);
    for i in 0..g.rows() {
        g[(i, i)] -= 1.0;
    }
    g.frobenius_norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    dims: Dims,
    x: Matrix,
}

impl StiefelPoint {
    /// Wraps `x` if its orthonormality defect is below [`TOL_ORTH`].
    pub fn new(x: Matrix) -> Result<Self> {
        let dims = Dims::new(x.rows(), x.cols())?;
        validate_point(x, dims)
    }

    /// Re-orthonormalizes an arbitrary full-rank tall matrix via its QR factor.
    pub fn orthonormalize(a: &Matrix) -> Result<Self> {
        let dims = Dims::new(a.rows(), a.cols())?;
        Ok(Self {
            dims,
            x: thin_qr_q_factor(a)?,
        })
    }

    /// The first `n` columns of `I_p`.
    pub fn canonical(dims: Dims) -> Self {
        Self {
            dims,
            x: Matrix::eye(dims.p, dims.n),
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn matrix(&self) -> &Matrix {
        &self.x
    }

    pub fn into_matrix(self) -> Matrix {
        self.x
    }

    pub fn defect(&self) -> f64 {
        orthonormality_defect(&self.x)
    }

    /// `U·X` for a `p×p` orthogonal `U`.
    pub fn rotated(&self, u: &Matrix) -> Result<Self> {
        if u.shape() != (self.dims.p, self.dims.p) {
            return Err(Error::ShapeMismatch {
                op: "StiefelPoint::rotated",
                expected: format!("{0}x{0}", self.dims.p),
                got: format!("{}x{}", u.rows(), u.cols()),
            });
        }
        StiefelPoint::new(u.matmul(&self.x))
    }
}

/// Accepts `x` as a point of `St(p,n)` when `‖XᵀX − Iₙ‖_F < TOL_ORTH`.
pub fn validate_point(x: Matrix, dims: Dims) -> Result<StiefelPoint> {
    dims.check(&x, "validate_point")?;
    let defect = orthonormality_defect(&x);
    if !(defect < TOL_ORTH) {
        return Err(Error::NotOrthonormal { defect });
    }
    Ok(StiefelPoint { dims, x })
}

/// A tangent vector together with the point it is anchored at.
#[derive(Debug, Clone)]
pub struct TangentVector<'a> {
    anchor: &'a StiefelPoint,
    v: Matrix,
}

impl<'a> TangentVector<'a> {
    /// Accepts `v` when `‖XᵀV + VᵀX‖_F < TOL_TAN`.
    pub fn new(anchor: &'a StiefelPoint, v: Matrix) -> Result<Self> {
        anchor.dims.check(&v, "TangentVector::new")?;
        let defect = tangency_defect(anchor, &v);
        if !(defect < TOL_TAN) {
            return Err(Error::NotTangent { defect });
        }
        Ok(Self { anchor, v })
    }

    pub fn zero(anchor: &'a StiefelPoint) -> Self {
        Self {
            anchor,
            v: Matrix::zeros(anchor.dims.p, anchor.dims.n),
        }
    }

    pub(crate) fn new_unchecked(anchor: &'a StiefelPoint, v: Matrix) -> Self {
        Self { anchor, v }
    }

    pub fn anchor(&self) -> &'a StiefelPoint {
        self.anchor
    }

    pub fn matrix(&self) -> &Matrix {
        &self.v
    }

    pub fn into_matrix(self) -> Matrix {
        self.v
    }

    pub fn defect(&self) -> f64 {
        tangency_defect(self.anchor, &self.v)
    }
}

/// `‖XᵀV + VᵀX‖_F`.
pub fn tangency_defect(x: &StiefelPoint, v: &Matrix) -> f64 {
    x.x.tr_matmul(v).skew_defect()
}

/// `π(A) = (I_p − XXᵀ)A − X·sk(XᵀA)`.
pub fn project_to_tangent<'a>(x: &'a StiefelPoint, a: &Matrix) -> Result<TangentVector<'a>> {
    x.dims.check(a, "project_to_tangent")?;
    let xta = x.x.tr_matmul(a);
    // (I − XXᵀ)A − X·sk(XᵀA) = A − X·(XᵀA + sk(XᵀA))
    let mut coeff = skew_part(&xta)?;
    coeff.add_assign(&xta);
    let v = a - &x.x.matmul(&coeff);
    Ok(TangentVector::new_unchecked(x, v))
}

/// `δ(X,Y) = ‖Iₙ − XᵀY‖_F`.
pub fn discrepancy(x: &StiefelPoint, y: &StiefelPoint) -> Result<f64> {
    if x.dims != y.dims {
        return Err(Error::ShapeMismatch {
            op: "discrepancy",
            expected: x.dims.to_string(),
            got: y.dims.to_string(),
        });
    }
    Ok(discrepancy_of_product(&x.x.tr_matmul(&y.x)))
}

/// `‖Iₙ − M‖_F` for a precomputed `M = XᵀY`.
pub(crate) fn discrepancy_of_product(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = if i == j { 1.0 - m[(i, j)] } else { -m[(i, j)] };
            s += d * d;
        }
    }
    s.sqrt()
}
