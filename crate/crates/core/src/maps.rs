//! Retraction and lifting maps on `St(p,n)`.
//!
//! Two associated pairs are built here:
//!
//! * polar: `P_X(V) = (X+V)(Iₙ+VᵀV)^{−1/2}`, whose inverse `P⁻¹_X(Q) = Q·S − X`
//!   needs the symmetric solution of `(XᵀQ)·S + S·(QᵀX) = 2Iₙ` (tangency of
//!   `Q·S − X`, which also makes `Iₙ + VᵀV = S²`);
//! * orthographic: `P̂⁻¹_X(Q) = (I_p − XXᵀ)Q + ½X(XᵀQ − QᵀX)`, the tangent
//!   projection of `Q − X`, whose inverse moves along the normal space,
//!   `P̂_X(V) = X + V + X·S` with `S` symmetric chosen so the result is
//!   orthonormal.
//!
//! The mixed pair uses the closed-form polar retraction with the closed-form
//! orthographic lifting. It is not an exact inverse pair; the deviation
//! `Δ_X(Q) = δ(P_X(P̂⁻¹_X(Q)), Q)` is available both by composing the maps and
//! from a closed form in `M = QᵀX`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels::{solve_lyapunov_sym, solve_ortho_retraction_eq, spd_inv_sqrt, Matrix};
use crate::manifold::{
    discrepancy, discrepancy_of_product, validate_point, StiefelPoint, TangentVector,
};

/// Liftings refuse pairs with `δ(X,Q)` at or above this radius.
pub const DEFAULT_DOMAIN_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Retraction {
    Polar,
    Orthographic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lifting {
    Polar,
    Orthographic,
}

/// The retraction/lifting combinations the averaging iteration supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapPair {
    PolarPolar,
    OrthoOrtho,
    MixedPolarOrtho,
}

impl MapPair {
    pub const ALL: [MapPair; 3] = [MapPair::PolarPolar, MapPair::OrthoOrtho, MapPair::MixedPolarOrtho];

    /// Orthographic retraction with polar lifting is rejected.
    pub fn new(retraction: Retraction, lifting: Lifting) -> Result<Self> {
        match (retraction, lifting) {
            (Retraction::Polar, Lifting::Polar) => Ok(MapPair::PolarPolar),
            (Retraction::Orthographic, Lifting::Orthographic) => Ok(MapPair::OrthoOrtho),
            (Retraction::Polar, Lifting::Orthographic) => Ok(MapPair::MixedPolarOrtho),
            (Retraction::Orthographic, Lifting::Polar) => {
                Err(Error::UnsupportedPair("ortho-polar".into()))
            }
        }
    }

    pub fn retraction(self) -> Retraction {
        match self {
            MapPair::PolarPolar | MapPair::MixedPolarOrtho => Retraction::Polar,
            MapPair::OrthoOrtho => Retraction::Orthographic,
        }
    }

    pub fn lifting(self) -> Lifting {
        match self {
            MapPair::PolarPolar => Lifting::Polar,
            MapPair::OrthoOrtho | MapPair::MixedPolarOrtho => Lifting::Orthographic,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MapPair::PolarPolar => "polar",
            MapPair::OrthoOrtho => "ortho",
            MapPair::MixedPolarOrtho => "mixed",
        }
    }
}

impl fmt::Display for MapPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MapPair {
    type Err = Error;

    /// Accepts `polar`, `ortho`, `mixed`, or `<retraction>-<lifting>` with
    /// each side `polar` or `ortho`.
    fn from_str(s: &str) -> Result<Self> {
        let side = |t: &str| match t {
            "polar" => Some((Retraction::Polar, Lifting::Polar)),
            "ortho" | "orthographic" => Some((Retraction::Orthographic, Lifting::Orthographic)),
            _ => None,
        };
        match s {
            "polar" | "polar-polar" => Ok(MapPair::PolarPolar),
            "ortho" | "ortho-ortho" | "orthographic" => Ok(MapPair::OrthoOrtho),
            "mixed" | "polar-ortho" => Ok(MapPair::MixedPolarOrtho),
            _ => match s.split_once('-').map(|(r, l)| (side(r), side(l))) {
                Some((Some((r, _)), Some((_, l)))) => MapPair::new(r, l),
                _ => Err(Error::UnsupportedPair(s.to_string())),
            },
        }
    }
}

/// `(X+V)(Iₙ+VᵀV)^{−1/2}`.
pub fn polar_retraction(v: &TangentVector<'_>) -> Result<StiefelPoint> {
    let x = v.anchor();
    let q = polar_retract_raw(x.matrix(), v.matrix())?;
    validate_point(q, x.dims())
}

/// `X + V + X·S` with symmetric `S` from the orthographic inner equation.
pub fn orthographic_retraction(v: &TangentVector<'_>) -> Result<StiefelPoint> {
    let x = v.anchor();
    let q = ortho_retract_raw(x.matrix(), v.matrix())?;
    validate_point(q, x.dims())
}

pub fn retract(kind: Retraction, v: &TangentVector<'_>) -> Result<StiefelPoint> {
    match kind {
        Retraction::Polar => polar_retraction(v),
        Retraction::Orthographic => orthographic_retraction(v),
    }
}

/// `Q·S − X` with `S` symmetric solving `(XᵀQ)·S + S·(QᵀX) = 2Iₙ`.
pub fn polar_lifting<'a>(x: &'a StiefelPoint, q: &StiefelPoint) -> Result<TangentVector<'a>> {
    check_dims(x, q, "polar_lifting")?;
    let (v, _) = lift_raw(Lifting::Polar, x.matrix(), q.matrix(), DEFAULT_DOMAIN_RADIUS)?;
    Ok(TangentVector::new_unchecked(x, v))
}

/// `(I_p − XXᵀ)Q + ½X(XᵀQ − QᵀX)`.
pub fn orthographic_lifting<'a>(x: &'a StiefelPoint, q: &StiefelPoint) -> Result<TangentVector<'a>> {
    check_dims(x, q, "orthographic_lifting")?;
    let (v, _) = lift_raw(Lifting::Orthographic, x.matrix(), q.matrix(), DEFAULT_DOMAIN_RADIUS)?;
    Ok(TangentVector::new_unchecked(x, v))
}

pub fn lift<'a>(kind: Lifting, x: &'a StiefelPoint, q: &StiefelPoint) -> Result<TangentVector<'a>> {
    match kind {
        Lifting::Polar => polar_lifting(x, q),
        Lifting::Orthographic => orthographic_lifting(x, q),
    }
}

fn check_dims(x: &StiefelPoint, q: &StiefelPoint, op: &'static str) -> Result<()> {
    if x.dims() != q.dims() {
        return Err(Error::ShapeMismatch {
            op,
            expected: x.dims().to_string(),
            got: q.dims().to_string(),
        });
    }
    Ok(())
}

/// Lifts `q` at `x` and also returns `δ(X,Q)`, which falls out of `XᵀQ`.
pub(crate) fn lift_raw(kind: Lifting, x: &Matrix, q: &Matrix, radius: f64) -> Result<(Matrix, f64)> {
    let xtq = x.tr_matmul(q);
    let delta = discrepancy_of_product(&xtq);
    if !(delta < radius) {
        return Err(Error::ArgumentsTooFarApart {
            reason: format!("δ(X,Q) = {delta:.4} exceeds the domain radius {radius}"),
        });
    }
    let v = match kind {
        Lifting::Polar => {
            let n = xtq.rows();
            let s = solve_lyapunov_sym(&xtq, &Matrix::identity(n).scale(2.0))?;
            &q.matmul(&s) - x
        }
        Lifting::Orthographic => {
            // (I − XXᵀ)Q + ½X(XᵀQ − QᵀX) = Q − X·(XᵀQ − ½(XᵀQ − QᵀX))
            let n = xtq.rows();
            let coeff = Matrix::from_fn(n, n, |i, j| {
                xtq[(i, j)] - 0.5 * (xtq[(i, j)] - xtq[(j, i)])
            });
            q - &x.matmul(&coeff)
        }
    };
    Ok((v, delta))
}

pub(crate) fn polar_retract_raw(x: &Matrix, v: &Matrix) -> Result<Matrix> {
    let mut gram = v.tr_matmul(v);
    for i in 0..gram.rows() {
        gram[(i, i)] += 1.0;
    }
    // Iₙ + VᵀV ⪰ Iₙ, so failure here means non-finite input.
    let r = spd_inv_sqrt(&gram.sym_part())?;
    Ok((x + v).matmul(&r))
}

pub(crate) fn ortho_retract_raw(x: &Matrix, v: &Matrix) -> Result<Matrix> {
    let xtv = x.tr_matmul(v);
    let omega = Matrix::from_fn(xtv.rows(), xtv.cols(), |i, j| 0.5 * (xtv[(i, j)] - xtv[(j, i)]));
    let g = v.tr_matmul(v).sym_part();
    let s = solve_ortho_retraction_eq(&omega, &g)?;
    let mut q = x + v;
    q.add_assign(&x.matmul(&s));
    Ok(q)
}

/// `Δ_X(Q)` together with the `n×n` product `M = QᵀX` it depends on.
#[derive(Debug, Clone)]
pub struct CompositionDiscrepancy {
    pub value: f64,
    pub m: Matrix,
}

/// `δ(P_X(P̂⁻¹_X(Q)), Q)` by applying the two maps.
pub fn composition_discrepancy_direct(x: &StiefelPoint, q: &StiefelPoint) -> Result<CompositionDiscrepancy> {
    let v = orthographic_lifting(x, q)?;
    let back = polar_retraction(&v)?;
    Ok(CompositionDiscrepancy {
        value: discrepancy(&back, q)?,
        m: q.matrix().tr_matmul(x.matrix()),
    })
}

/// `Δ = ‖Iₙ − [Iₙ + M − ½M(M+Mᵀ)]·[2Iₙ − ¼(M−Mᵀ)² − MMᵀ]^{−1/2}‖_F`, `M = QᵀX`.
///
/// The bracketed terms are `Qᵀ(X+V)` and `Iₙ + VᵀV` for the orthographic
/// lift `V`, so this only touches `n×n` matrices.
pub fn composition_discrepancy_closed_form(x: &StiefelPoint, q: &StiefelPoint) -> Result<CompositionDiscrepancy> {
    check_dims(x, q, "composition_discrepancy_closed_form")?;
    let m = q.matrix().tr_matmul(x.matrix());
    let value = composition_discrepancy_from_m(&m)?;
    Ok(CompositionDiscrepancy { value, m })
}

/// The closed form evaluated on a given `M`.
pub fn composition_discrepancy_from_m(m: &Matrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            op: "composition_discrepancy_from_m",
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let mt = m.transpose();
    let eye = Matrix::identity(n);

    let mut front = &eye + m;
    front.axpy(-0.5, &m.matmul(&(m + &mt)));

    let k = m - &mt;
    let mut bracket = eye.scale(2.0);
    bracket.axpy(-0.25, &k.matmul(&k));
    bracket.axpy(-1.0, &m.matmul(&mt));
    debug_assert!(bracket.asymmetry() <= 1e-12 * bracket.frobenius_norm().max(1.0));

    let r = spd_inv_sqrt(&bracket.sym_part()).map_err(|e| match e {
        Error::NotPositiveDefinite { eigenvalue } => Error::ArgumentsTooFarApart {
            reason: format!("closed-form bracket not positive definite (eigenvalue {eigenvalue:.3e})"),
        },
        other => other,
    })?;
    Ok(front.matmul(&r).identity_minus().frobenius_norm())
}
