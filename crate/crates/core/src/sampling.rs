//! Seeded generation of sample clouds on the Stiefel manifold.
//!
//! A center `C` is the Q-factor of a Gaussian `p×n` matrix; samples are
//! `Xₖ = exp(σ·sk(Aₖ))·C` with `Aₖ` i.i.d. standard normal `p×p`. All draws
//! come from [`SampleRng`] (ChaCha8 seeded from a `u64`), with normal
//! variates from `rand_distr::StandardNormal`, filling matrices row by row.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::{skew_expm, skew_part, thin_qr_q_factor, Matrix};
use crate::manifold::{validate_point, Dims, StiefelPoint};

pub type SampleRng = ChaCha8Rng;

/// Default size of the random rotation applied to the first sample to get
/// the initial guess of the mean iteration.
pub const DEFAULT_EPSILON_INIT: f64 = 0.01;

pub fn rng_from_seed(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with sub-stream indices (SplitMix64 finalizer), so
/// per-trial generators are independent of how many trials run.
pub fn derive_seed(base: u64, indices: &[u64]) -> u64 {
    indices.iter().fold(splitmix(base), |acc, &i| splitmix(acc ^ splitmix(i.wrapping_add(0x9e37_79b9))))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Q-factor of a Gaussian `p×n` matrix. A rank-deficient draw is retried once.
pub fn generate_center<R: Rng + ?Sized>(dims: Dims, rng: &mut R) -> Result<StiefelPoint> {
    let mut last = None;
    for _ in 0..2 {
        let a = gaussian_matrix(dims.p(), dims.n(), rng);
        match thin_qr_q_factor(&a) {
            Ok(q) => return validate_point(q, dims),
            Err(e @ Error::RankDeficient { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("two failed attempts"))
}

/// `count` samples `exp(σ·sk(Aₖ))·C`.
pub fn generate_samples<R: Rng + ?Sized>(
    center: &StiefelPoint,
    sigma: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<StiefelPoint>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {sigma}")));
    }
    let p = center.dims().p();
    (0..count)
        .map(|_| {
            let omega = skew_part(&gaussian_matrix(p, p, rng))?;
            let rotation = skew_expm(&omega, sigma)?;
            validate_point(rotation.matmul(center.matrix()), center.dims())
        })
        .collect()
}

/// `exp(ε·sk(A))·X₁` for a fresh Gaussian `A`.
pub fn perturb_initial_guess<R: Rng + ?Sized>(
    x1: &StiefelPoint,
    epsilon: f64,
    rng: &mut R,
) -> Result<StiefelPoint> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidConfig(format!("epsilon must be > 0, got {epsilon}")));
    }
    let p = x1.dims().p();
    let omega = skew_part(&gaussian_matrix(p, p, rng))?;
    let rotation = skew_expm(&omega, epsilon)?;
    validate_point(rotation.matmul(x1.matrix()), x1.dims())
}

/// A sample cloud together with how it was produced.
///
/// `center` is `None` for sets read from files that do not carry one.
#[derive(Debug, Clone)]
pub struct SampleSet {
    dims: Dims,
    center: Option<StiefelPoint>,
    sigma: f64,
    seed: u64,
    samples: Vec<StiefelPoint>,
}

impl SampleSet {
    pub fn new(
        dims: Dims,
        center: Option<StiefelPoint>,
        sigma: f64,
        seed: u64,
        samples: Vec<StiefelPoint>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidConfig("a sample set needs at least one sample".into()));
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {sigma}")));
        }
        let mismatch = samples
            .iter()
            .chain(center.iter())
            .find(|s| s.dims() != dims);
        if let Some(bad) = mismatch {
            return Err(Error::ShapeMismatch {
                op: "SampleSet::new",
                expected: dims.to_string(),
                got: bad.dims().to_string(),
            });
        }
        Ok(Self {
            dims,
            center,
            sigma,
            seed,
            samples,
        })
    }

    /// Center and `count` samples drawn from one generator seeded with `seed`.
    pub fn generate(dims: Dims, sigma: f64, count: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let center = generate_center(dims, &mut rng)?;
        let samples = generate_samples(&center, sigma, count, &mut rng)?;
        Self::new(dims, Some(center), sigma, seed, samples)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn center(&self) -> Option<&StiefelPoint> {
        self.center.as_ref()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn samples(&self) -> &[StiefelPoint] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same samples in a different order.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        for &i in order {
            if i >= self.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidConfig("order is not a permutation".into()));
            }
        }
        if order.len() != self.len() {
            return Err(Error::InvalidConfig("order is not a permutation".into()));
        }
        let samples = order.iter().map(|&i| self.samples[i].clone()).collect();
        Self::new(self.dims, self.center.clone(), self.sigma, self.seed, samples)
    }

    /// Every sample (and the center) left-multiplied by orthogonal `u`.
    pub fn rotated(&self, u: &Matrix) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| s.rotated(u))
            .collect::<Result<Vec<_>>>()?;
        let center = self.center.as_ref().map(|c| c.rotated(u)).transpose()?;
        Self::new(self.dims, center, self.sigma, self.seed, samples)
    }
}
