use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use stiefel_mean::sampling::gaussian_matrix;
use stiefel_mean::{
    discrepancy, fixed_point_mean, initial_guess, residual_vector_field, rng_from_seed, weighted_fixed_point_mean,
    AveragingConfig, Dims, Error, MapPair, Matrix, SampleSet, StiefelPoint, Weights,
};

fn on_circle(angle: f64) -> StiefelPoint {
    StiefelPoint::new(Matrix::from_rows(&[[angle.cos()], [angle.sin()]])).unwrap()
}

fn angle_of(x: &StiefelPoint) -> f64 {
    let m = x.matrix();
    m[(1, 0)].atan2(m[(0, 0)])
}

fn circle_set(angles: &[f64]) -> SampleSet {
    let samples = angles.iter().map(|&a| on_circle(a)).collect();
    SampleSet::new(Dims::new(2, 1).unwrap(), Some(on_circle(0.0)), 0.0, 0, samples).unwrap()
}

fn seeded(p: usize, n: usize, sigma: f64, count: usize, seed: u64) -> (SampleSet, StiefelPoint) {
    let set = SampleSet::generate(Dims::new(p, n).unwrap(), sigma, count, seed).unwrap();
    let start = initial_guess(&set, &AveragingConfig::default(), &mut rng_from_seed(seed + 1)).unwrap();
    (set, start)
}

#[test]
fn mean_is_invariant_under_sample_permutation() {
    let (set, start) = seeded(20, 4, 0.2, 30, 41);
    let order: Vec<usize> = (0..set.len()).rev().collect();
    let shuffled = set.permuted(&order).unwrap();
    for pair in MapPair::ALL {
        let config = AveragingConfig::new(pair);
        let a = fixed_point_mean(&set, &config, &start).unwrap();
        let b = fixed_point_mean(&shuffled, &config, &start).unwrap();
        let gap = (a.final_point.matrix() - b.final_point.matrix()).frobenius_norm();
        assert!(gap < 1e-9, "{pair}: {gap:e}");
    }
}

#[test]
fn mean_is_equivariant_under_left_rotation() {
    let (set, start) = seeded(12, 3, 0.15, 20, 42);
    let u = StiefelPoint::orthonormalize(&gaussian_matrix(12, 12, &mut rng_from_seed(99)))
        .unwrap()
        .into_matrix();
    let rotated = set.rotated(&u).unwrap();
    let rotated_start = start.rotated(&u).unwrap();
    for pair in MapPair::ALL {
        let config = AveragingConfig::new(pair);
        let a = fixed_point_mean(&set, &config, &start).unwrap();
        let b = fixed_point_mean(&rotated, &config, &rotated_start).unwrap();
        let expected = u.matmul(a.final_point.matrix());
        let gap = (&expected - b.final_point.matrix()).frobenius_norm();
        assert!(gap < 1e-9, "{pair}: {gap:e}");
    }
}

#[test]
fn step_sizes_decrease_at_small_spread() {
    for (seed, sigma) in [(51, 0.05), (52, 0.02), (53, 0.01)] {
        let (set, start) = seeded(20, 4, sigma, 30, seed);
        for pair in MapPair::ALL {
            let report = fixed_point_mean(&set, &AveragingConfig::new(pair), &start).unwrap();
            assert!(report.converged);
            let steps = &report.step_sizes[1..];
            assert!(
                steps.windows(2).all(|w| w[1] < w[0]),
                "{pair} sigma={sigma}: {steps:?}"
            );
        }
    }
}

#[test]
fn converged_residual_is_below_ten_tolerances() {
    let (set, start) = seeded(20, 4, 0.2, 30, 61);
    for pair in MapPair::ALL {
        let config = AveragingConfig::new(pair);
        let report = fixed_point_mean(&set, &config, &start).unwrap();
        assert!(report.converged);
        assert!(*report.step_sizes.last().unwrap() < config.conv_tol);
        assert!(report.residual_field_norm < 10.0 * config.conv_tol, "{pair}");
        let recomputed = residual_vector_field(&report.final_point, &set, pair).unwrap();
        assert_eq!(recomputed, report.residual_field_norm);
        for x in std::iter::once(&start).chain(Some(&report.final_point)) {
            assert!(x.defect() < 1e-9);
        }
    }
}

/// The circle iteration written on angles: lifts are `tan` (polar) or `sin`
/// (orthographic) of the angle gap, retractions add `atan` or `asin`.
fn scalar_angle_mean(pair: MapPair, angles: &[f64], weights: &[f64], start: f64) -> f64 {
    let lift = |d: f64| match pair {
        MapPair::PolarPolar => d.tan(),
        _ => d.sin(),
    };
    let retract = |t: f64| match pair {
        MapPair::OrthoOrtho => t.asin(),
        _ => t.atan(),
    };
    let n = angles.len() as f64;
    let mut phi = start;
    for _ in 0..1000 {
        let t: f64 = angles.iter().zip(weights).map(|(a, w)| w * lift(a - phi)).sum::<f64>() / n;
        phi += retract(t);
    }
    phi
}

#[test]
fn weighted_circle_matches_scalar_oracle() {
    let theta = 0.3;
    let set = circle_set(&[theta, -theta]);
    let weights = vec![2.0, 1.0];
    for pair in MapPair::ALL {
        let expected = scalar_angle_mean(pair, &[theta, -theta], &weights, 0.01);
        let config = AveragingConfig::new(pair).with_weights(Weights::Fixed(weights.clone()));
        let report = weighted_fixed_point_mean(&set, &config, &on_circle(0.01)).unwrap();
        assert!(report.converged, "{pair}");
        let got = angle_of(&report.final_point);
        assert!(got > 0.0, "mean must tilt toward the heavier sample");
        // On St(2,1), δ = 1 − cos(angle step), so stopping at δ < 1e-10 only
        // pins the angle to about √(2·1e-10).
        assert!((got - expected).abs() < 1e-4, "{pair}: {got} vs {expected}");

        // Iterating past that point agrees with the oracle to rounding.
        let mut tight = config.clone();
        tight.conv_tol = f64::MIN_POSITIVE;
        tight.max_iters = 300;
        let report = weighted_fixed_point_mean(&set, &tight, &on_circle(0.01)).unwrap();
        let got = angle_of(&report.final_point);
        assert!((got - expected).abs() < 1e-7, "{pair}: {got} vs {expected}");
    }
}

#[test]
fn unit_weights_reproduce_the_unweighted_trace() {
    let (set, start) = seeded(20, 4, 0.2, 30, 71);
    for pair in MapPair::ALL {
        let plain = fixed_point_mean(&set, &AveragingConfig::new(pair), &start).unwrap();
        let fixed = AveragingConfig::new(pair).with_weights(Weights::Fixed(vec![1.0; set.len()]));
        let hook = AveragingConfig::new(pair)
            .with_weights(Weights::PerIteration(Arc::new(|_, _, s: &SampleSet| vec![1.0; s.len()])));
        for config in [fixed, hook] {
            let weighted = weighted_fixed_point_mean(&set, &config, &start).unwrap();
            assert_eq!(weighted.step_sizes, plain.step_sizes);
            assert_eq!(weighted.delta_to_center, plain.delta_to_center);
            assert_eq!(weighted.final_point, plain.final_point);
        }
    }
}

#[test]
fn per_iteration_hook_sees_every_iteration() {
    let (set, start) = seeded(10, 2, 0.1, 8, 72);
    let calls = Arc::new(AtomicUsize::new(0));
    let seen = calls.clone();
    let config = AveragingConfig::new(MapPair::MixedPolarOrtho).with_weights(Weights::PerIteration(Arc::new(
        move |i, x: &StiefelPoint, s: &SampleSet| {
            assert_eq!(i, seen.fetch_add(1, Ordering::SeqCst));
            // Down-weight samples far from the current iterate.
            s.samples()
                .iter()
                .map(|q| 1.0 / (1.0 + discrepancy(x, q).unwrap()))
                .collect()
        },
    )));
    let report = weighted_fixed_point_mean(&set, &config, &start).unwrap();
    assert!(report.converged);
    assert_eq!(calls.load(Ordering::SeqCst), report.iterations_used);
}

#[test]
fn heavy_weight_pulls_the_mean_onto_its_sample() {
    // Weights enter the update unnormalized, so the ratio 10⁶:1 is supplied
    // already rescaled to sum to N.
    let (set, start) = seeded(20, 4, 0.1, 10, 81);
    let raw: Vec<f64> = (0..set.len()).map(|k| if k == 0 { 1e6 } else { 1.0 }).collect();
    let total: f64 = raw.iter().sum();
    let scaled: Vec<f64> = raw.iter().map(|w| w * set.len() as f64 / total).collect();
    for pair in MapPair::ALL {
        let config = AveragingConfig::new(pair).with_weights(Weights::Fixed(scaled.clone()));
        let report = weighted_fixed_point_mean(&set, &config, &start).unwrap();
        assert!(report.converged);
        let d = discrepancy(&report.final_point, &set.samples()[0]).unwrap();
        assert!(d < 1e-3, "{pair}: {d:e}");
    }
}

#[test]
fn unscaled_heavy_weight_fails_loudly() {
    let (set, start) = seeded(20, 4, 0.1, 10, 81);
    let raw: Vec<f64> = (0..set.len()).map(|k| if k == 0 { 1e6 } else { 1.0 }).collect();
    for pair in MapPair::ALL {
        let config = AveragingConfig::new(pair).with_weights(Weights::Fixed(raw.clone()));
        match weighted_fixed_point_mean(&set, &config, &start) {
            Err(e) => assert!(e.is_numerical(), "{pair}: {e}"),
            Ok(report) => assert!(!report.converged, "{pair}"),
        }
    }
}

#[test]
fn zero_spread_mean_is_the_center() {
    let set = SampleSet::generate(Dims::new(20, 4).unwrap(), 0.0, 20, 91).unwrap();
    let c = set.center().unwrap();
    let start = initial_guess(&set, &AveragingConfig::default(), &mut rng_from_seed(92)).unwrap();
    for pair in MapPair::ALL {
        let report = fixed_point_mean(&set, &AveragingConfig::new(pair), &start).unwrap();
        assert!(report.converged);
        assert!(report.iterations_used <= 3, "{pair}: {}", report.iterations_used);
        assert!((report.final_point.matrix() - c.matrix()).frobenius_norm() < 1e-10);
    }
}

#[test]
fn parallel_lifting_is_bitwise_identical() {
    let (set, start) = seeded(30, 5, 0.1, 40, 101);
    for pair in MapPair::ALL {
        let mut config = AveragingConfig::new(pair);
        let serial = fixed_point_mean(&set, &config, &start).unwrap();
        config.parallel = true;
        let parallel = fixed_point_mean(&set, &config, &start).unwrap();
        assert_eq!(serial.step_sizes, parallel.step_sizes);
        assert_eq!(serial.final_point, parallel.final_point);
    }
}

#[test]
fn errors_carry_iteration_and_sample() {
    let set = circle_set(&[0.1, 0.2, 2.5]);
    let mut config = AveragingConfig::new(MapPair::PolarPolar);
    config.domain_radius = 1.0;
    let err = fixed_point_mean(&set, &config, &on_circle(0.0)).unwrap_err();
    assert!(err.is_numerical());
    assert!(matches!(err, Error::Iteration { iteration: 0, sample: Some(2), .. }), "{err}");
    assert_eq!(err.to_string().matches("too far apart").count(), 1);
}
