//! Dense real-matrix primitives shared by the manifold code.
//!
//! Everything here is small-and-dense: a single row-major [`Matrix`] type,
//! Householder thin QR, Jacobi symmetric eigendecomposition, the skew
//! matrix exponential, and two structured matrix-equation solvers used by
//! the non-closed-form retraction and lifting maps.

mod eigen;
mod expm;
pub(crate) mod lu;
mod lyapunov;
mod matrix;
mod ortho_eq;
mod qr;

pub use eigen::{spd_inv_sqrt, symmetric_eigen, EPS_SPD, SYM_TOL};
pub use expm::{skew_expm, SKEW_TOL};
pub use lyapunov::solve_lyapunov_sym;
pub use matrix::{frobenius_norm, skew_part, Matrix};
pub use ortho_eq::{ortho_residual, solve_ortho_retraction_eq, INNER_TOL, MAX_INNER_ITERS};
pub use qr::{thin_qr_q_factor, RANK_TOL};
