//! Kolmogoroff-Nagumo-type empirical means on the compact Stiefel manifold.
//!
//! Samples on `St(p,n)` are lifted to the tangent space at the current
//! estimate, averaged there, and retracted back; the mean is the fixed point
//! of that map. Three retraction/lifting pairs are provided (polar/polar,
//! orthographic/orthographic, and polar retraction with orthographic
//! lifting), together with seeded sample generation and the experiment
//! runners used to compare them.
//!
//! ```
//! use stiefel_mean::{
//!     fixed_point_mean, initial_guess, rng_from_seed, AveragingConfig, Dims, MapPair, SampleSet,
//! };
//!
//! let set = SampleSet::generate(Dims::new(20, 4)?, 0.2, 30, 7)?;
//! let config = AveragingConfig::new(MapPair::MixedPolarOrtho);
//! let start = initial_guess(&set, &config, &mut rng_from_seed(8))?;
//! let report = fixed_point_mean(&set, &config, &start)?;
//! assert!(report.converged);
//! # Ok::<(), stiefel_mean::Error>(())
//! ```

pub mod averaging;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod manifold;
pub mod maps;
pub mod sample_io;
pub mod sampling;
pub mod stats;

pub use averaging::{
    fixed_point_mean, initial_guess, residual_vector_field, weighted_fixed_point_mean, AveragingConfig,
    AveragingReport, Weights,
};
pub use error::{Error, Result};
pub use kernels::Matrix;
pub use manifold::{discrepancy, project_to_tangent, validate_point, Dims, StiefelPoint, TangentVector};
pub use maps::{
    composition_discrepancy_closed_form, composition_discrepancy_direct, orthographic_lifting,
    orthographic_retraction, polar_lifting, polar_retraction, CompositionDiscrepancy, Lifting, MapPair,
    Retraction,
};
pub use sampling::{
    generate_center, generate_samples, perturb_initial_guess, rng_from_seed, SampleRng, SampleSet,
};
