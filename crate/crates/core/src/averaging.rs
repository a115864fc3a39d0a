//! Fixed-point Kolmogoroff-Nagumo-type mean on `St(p,n)`.
//!
//! The mean `X` solves `X = R_X((1/N) Σₖ wₖ·L_X(Xₖ))` for a retraction `R`
//! and lifting `L` chosen by a [`MapPair`]; it is found by iterating
//!
//! ```text
//! X⁽ⁱ⁺¹⁾ = R_{X⁽ⁱ⁾}((1/N) Σₖ wₖ⁽ⁱ⁾·L_{X⁽ⁱ⁾}(Xₖ))
//! ```
//!
//! until `δ(X⁽ⁱ⁺¹⁾, X⁽ⁱ⁾) < conv_tol`. A fixed point is a zero of the lifted
//! field `Σₖ L_X(Xₖ)`. Lifted samples are accumulated in index order with a
//! single accumulator, also when they are evaluated in parallel, so results
//! do not depend on thread count.

use std::fmt;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::Matrix;
use crate::manifold::{discrepancy, project_to_tangent, StiefelPoint};
use crate::maps::{lift_raw, retract, Lifting, MapPair, DEFAULT_DOMAIN_RADIUS};
use crate::sampling::{perturb_initial_guess, SampleSet, DEFAULT_EPSILON_INIT};

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_CONV_TOL: f64 = 1e-10;

/// Per-iteration weight rule: `(iteration, current iterate, samples) -> wₖ`.
pub type WeightFn = dyn Fn(usize, &StiefelPoint, &SampleSet) -> Vec<f64> + Send + Sync;

/// Weights multiplying the lifted samples inside `(1/N) Σ wₖ·L(Xₖ)`.
///
/// Weights are used exactly as given; they are not renormalized to sum to N.
#[derive(Clone)]
pub enum Weights {
    Fixed(Vec<f64>),
    PerIteration(Arc<WeightFn>),
}

impl Weights {
    fn at(&self, iteration: usize, x: &StiefelPoint, samples: &SampleSet) -> Result<Vec<f64>> {
        let w = match self {
            Weights::Fixed(w) => w.clone(),
            Weights::PerIteration(f) => f(iteration, x, samples),
        };
        if w.len() != samples.len() {
            return Err(Error::InvalidConfig(format!(
                "{} weights for {} samples",
                w.len(),
                samples.len()
            )));
        }
        if let Some((k, v)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidConfig(format!("weight {k} is {v}, must be positive")));
        }
        Ok(w)
    }
}

impl fmt::Debug for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weights::Fixed(w) => f.debug_tuple("Fixed").field(w).finish(),
            Weights::PerIteration(_) => f.write_str("PerIteration(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AveragingConfig {
    pub pair: MapPair,
    pub max_iters: usize,
    /// Stop once `δ(X⁽ⁱ⁺¹⁾, X⁽ⁱ⁾)` falls below this.
    pub conv_tol: f64,
    /// Rotation size used by [`initial_guess`].
    pub epsilon_init: f64,
    /// Abort when any sample is at least this far (in `δ`) from the iterate.
    pub domain_radius: f64,
    pub weights: Option<Weights>,
    /// Evaluate the lifts of one iteration on the rayon pool.
    pub parallel: bool,
}

impl AveragingConfig {
    pub fn new(pair: MapPair) -> Self {
        Self {
            pair,
            max_iters: DEFAULT_MAX_ITERS,
            conv_tol: DEFAULT_CONV_TOL,
            epsilon_init: DEFAULT_EPSILON_INIT,
            domain_radius: DEFAULT_DOMAIN_RADIUS,
            weights: None,
            parallel: false,
        }
    }

    pub fn with_weights(mut self, weights: Weights) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.conv_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("conv_tol must be > 0, got {}", self.conv_tol)));
        }
        if !(self.epsilon_init > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon_init must be > 0, got {}",
                self.epsilon_init
            )));
        }
        if !(self.domain_radius > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "domain_radius must be > 0, got {}",
                self.domain_radius
            )));
        }
        if let Some(Weights::Fixed(w)) = &self.weights {
            if let Some(v) = w.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidConfig(format!("weight {v} is not positive")));
            }
        }
        Ok(())
    }
}

impl Default for AveragingConfig {
    fn default() -> Self {
        Self::new(MapPair::MixedPolarOrtho)
    }
}

#[derive(Debug, Clone)]
pub struct AveragingReport {
    pub pair: MapPair,
    /// `δ(X⁽ⁱ⁾, C)` for `i = 0..=iterations_used`, when the center is known.
    pub delta_to_center: Option<Vec<f64>>,
    /// `δ(X⁽ⁱ⁺¹⁾, X⁽ⁱ⁾)` per iteration.
    pub step_sizes: Vec<f64>,
    /// Elapsed time after each iteration, measured from the start of the run.
    pub iteration_times: Vec<Duration>,
    pub final_point: StiefelPoint,
    pub iterations_used: usize,
    pub converged: bool,
    /// Time spent iterating (excludes the final residual evaluation).
    pub wall_time: Duration,
    /// `‖Σₖ wₖ·L_X(Xₖ)‖_F / N` at the final point.
    pub residual_field_norm: f64,
}

impl AveragingReport {
    /// Columns `iter, step_size, delta_to_center, cumulative_time_ns`; row 0
    /// is the initial guess.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iter", "step_size", "delta_to_center", "cumulative_time_ns"])?;
        let delta = |i: usize| {
            self.delta_to_center
                .as_ref()
                .map_or(String::new(), |d| format!("{:e}", d[i]))
        };
        out.write_record(["0".to_string(), String::new(), delta(0), "0".to_string()])?;
        for (i, (step, t)) in self.step_sizes.iter().zip(&self.iteration_times).enumerate() {
            out.write_record([
                (i + 1).to_string(),
                format!("{step:e}"),
                delta(i + 1),
                t.as_nanos().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Starting point `exp(ε·sk(A))·X₁` with `ε = config.epsilon_init`.
pub fn initial_guess<R: Rng + ?Sized>(
    samples: &SampleSet,
    config: &AveragingConfig,
    rng: &mut R,
) -> Result<StiefelPoint> {
    perturb_initial_guess(&samples.samples()[0], config.epsilon_init, rng)
}

/// Runs the fixed-point iteration. Uses `config.weights` when set.
pub fn fixed_point_mean(
    samples: &SampleSet,
    config: &AveragingConfig,
    initial: &StiefelPoint,
) -> Result<AveragingReport> {
    match &config.weights {
        Some(w) => run(samples, config, initial, Some(w)),
        None => run(samples, config, initial, None),
    }
}

/// Runs the weighted iteration; `config.weights` must be set.
pub fn weighted_fixed_point_mean(
    samples: &SampleSet,
    config: &AveragingConfig,
    initial: &StiefelPoint,
) -> Result<AveragingReport> {
    let weights = config
        .weights
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("weighted mean needs weights".into()))?;
    run(samples, config, initial, Some(weights))
}

/// `‖Σₖ L_X(Xₖ)‖_F / N` for the lifting of `pair`.
pub fn residual_vector_field(x: &StiefelPoint, samples: &SampleSet, pair: MapPair) -> Result<f64> {
    check_dims(x, samples)?;
    let ones = vec![1.0; samples.len()];
    let field = combined_tangent(x, samples, pair.lifting(), DEFAULT_DOMAIN_RADIUS, &ones, false)
        .map_err(|(k, e)| e.at(0, Some(k)))?;
    Ok(field.frobenius_norm())
}

fn check_dims(x: &StiefelPoint, samples: &SampleSet) -> Result<()> {
    if x.dims() != samples.dims() {
        return Err(Error::ShapeMismatch {
            op: "averaging",
            expected: samples.dims().to_string(),
            got: x.dims().to_string(),
        });
    }
    Ok(())
}

fn run(
    samples: &SampleSet,
    config: &AveragingConfig,
    initial: &StiefelPoint,
    weights: Option<&Weights>,
) -> Result<AveragingReport> {
    config.validate()?;
    check_dims(initial, samples)?;
    let start = Instant::now();
    let uniform = vec![1.0; samples.len()];
    let weights_at = |i: usize, x: &StiefelPoint| -> Result<Vec<f64>> {
        match weights {
            Some(w) => w.at(i, x, samples),
            None => Ok(uniform.clone()),
        }
    };

    let center = samples.center();
    let mut x = initial.clone();
    let mut delta_to_center = center.map(|c| discrepancy(&x, c)).transpose()?.map(|d| vec![d]);
    let mut step_sizes = Vec::new();
    let mut iteration_times = Vec::new();
    let mut converged = false;
    let mut last_weights = None;

    for i in 0..config.max_iters {
        let w = weights_at(i, &x).map_err(|e| e.at(i, None))?;
        let mean = combined_tangent(&x, samples, config.pair.lifting(), config.domain_radius, &w, config.parallel)
            .map_err(|(k, e)| e.at(i, Some(k)))?;
        // Rounding leaves a normal component that the retraction would
        // otherwise feed back into the next iterate.
        let mean = project_to_tangent(&x, &mean)?;
        let next = retract(config.pair.retraction(), &mean).map_err(|e| e.at(i, None))?;
        let step = discrepancy(&next, &x)?;
        x = next;
        step_sizes.push(step);
        iteration_times.push(start.elapsed());
        if let (Some(d), Some(c)) = (delta_to_center.as_mut(), center) {
            d.push(discrepancy(&x, c)?);
        }
        last_weights = Some(w);
        if step < config.conv_tol {
            converged = true;
            break;
        }
    }
    let wall_time = start.elapsed();
    let iterations_used = step_sizes.len();

    let w = match last_weights {
        Some(w) => w,
        None => weights_at(iterations_used, &x)?,
    };
    let residual_field_norm = combined_tangent(&x, samples, config.pair.lifting(), config.domain_radius, &w, false)
        .map_err(|(k, e)| e.at(iterations_used, Some(k)))?
        .frobenius_norm();

    Ok(AveragingReport {
        pair: config.pair,
        delta_to_center,
        step_sizes,
        iteration_times,
        final_point: x,
        iterations_used,
        converged,
        wall_time,
        residual_field_norm,
    })
}

/// `(1/N) Σₖ wₖ·L_X(Xₖ)` summed in index order. Errors carry the sample index.
fn combined_tangent(
    x: &StiefelPoint,
    samples: &SampleSet,
    lifting: Lifting,
    radius: f64,
    weights: &[f64],
    parallel: bool,
) -> std::result::Result<Matrix, (usize, Error)> {
    let xm = x.matrix();
    let lift_one = |k: usize, q: &StiefelPoint| {
        lift_raw(lifting, xm, q.matrix(), radius)
            .map(|(v, _)| v)
            .map_err(|e| (k, e))
    };
    let dims = x.dims();
    let mut acc = Matrix::zeros(dims.p(), dims.n());
    if parallel {
        let lifted: Vec<_> = samples
            .samples()
            .par_iter()
            .enumerate()
            .map(|(k, q)| lift_one(k, q))
            .collect();
        for (v, w) in lifted.into_iter().zip(weights) {
            acc.axpy(*w, &v?);
        }
    } else {
        for (k, (q, w)) in samples.samples().iter().zip(weights).enumerate() {
            acc.axpy(*w, &lift_one(k, q)?);
        }
    }
    acc.scale_mut(1.0 / samples.len() as f64);
    Ok(acc)
}
