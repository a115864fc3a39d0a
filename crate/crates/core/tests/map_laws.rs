use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use stiefel_mean::kernels::{skew_expm, skew_part};
use stiefel_mean::manifold::{orthonormality_defect, tangency_defect};
use stiefel_mean::sampling::gaussian_matrix;
use stiefel_mean::{
    discrepancy, orthographic_lifting, orthographic_retraction, polar_lifting, polar_retraction,
    project_to_tangent, rng_from_seed, Dims, Matrix, SampleRng, StiefelPoint, TangentVector,
};

fn point(p: usize, n: usize, rng: &mut SampleRng) -> StiefelPoint {
    StiefelPoint::orthonormalize(&gaussian_matrix(p, n, rng)).unwrap()
}

/// A point at a controlled rotation distance from `x`.
fn near(x: &StiefelPoint, spread: f64, rng: &mut SampleRng) -> StiefelPoint {
    let p = x.dims().p();
    let omega = skew_part(&gaussian_matrix(p, p, rng)).unwrap();
    if p == 1 {
        return x.clone();
    }
    let omega = omega.scale(1.0 / omega.frobenius_norm());
    x.rotated(&skew_expm(&omega, spread).unwrap()).unwrap()
}

fn tangent<'a>(x: &'a StiefelPoint, norm: f64, rng: &mut SampleRng) -> TangentVector<'a> {
    let dims = x.dims();
    let v = project_to_tangent(x, &gaussian_matrix(dims.p(), dims.n(), rng)).unwrap();
    let len = v.matrix().frobenius_norm();
    if len < 1e-12 {
        return TangentVector::zero(x);
    }
    let scale = norm / len;
    TangentVector::new(x, v.into_matrix().scale(scale)).unwrap()
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=6).prop_flat_map(|n| (n..=12, Just(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projector_is_idempotent((p, n) in dims(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let x = point(p, n, &mut rng);
        let a = gaussian_matrix(p, n, &mut rng);
        let once = project_to_tangent(&x, &a).unwrap().into_matrix();
        let twice = project_to_tangent(&x, &once).unwrap().into_matrix();
        prop_assert!((&once - &twice).frobenius_norm() < 1e-12);
        prop_assert!(tangency_defect(&x, &once) < 1e-12);
    }

    #[test]
    fn projector_annihilates_normal_space((p, n) in dims(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let x = point(p, n, &mut rng);
        let s = gaussian_matrix(n, n, &mut rng).sym_part();
        let normal = x.matrix().matmul(&s);
        prop_assert!(project_to_tangent(&x, &normal).unwrap().matrix().frobenius_norm() < 1e-12);
    }

    #[test]
    fn discrepancy_is_symmetric_and_rotation_invariant((p, n) in dims(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let x = point(p, n, &mut rng);
        let y = point(p, n, &mut rng);
        let d = discrepancy(&x, &y).unwrap();
        assert_abs_diff_eq!(d, discrepancy(&y, &x).unwrap(), epsilon = 1e-13);
        let u = point(p, p, &mut rng).into_matrix();
        let rotated = discrepancy(&x.rotated(&u).unwrap(), &y.rotated(&u).unwrap()).unwrap();
        assert_abs_diff_eq!(d, rotated, epsilon = 1e-12);
        prop_assert!(discrepancy(&x, &x).unwrap() < 1e-14);
    }

    #[test]
    fn polar_round_trip((p, n) in dims(), seed in any::<u64>(), spread in 0.0f64..0.3) {
        let mut rng = rng_from_seed(seed);
        let x = point(p, n, &mut rng);
        let q = near(&x, spread, &mut rng);
        let v = polar_lifting(&x, &q).unwrap();
        prop_assert!(v.defect() < 1e-9);
        let back = polar_retraction(&v).unwrap();
        prop_assert!(back.defect() < 1e-9);
        prop_assert!((back.matrix() - q.matrix()).frobenius_norm() < 1e-9);
    }

    #[test]
    fn orthographic_round_trip((p, n) in dims(), seed in any::<u64>(), norm in 0.0f64..0.3) {
        let mut rng = rng_from_seed(seed);
        let x = point(p, n, &mut rng);
        let v = tangent(&x, norm, &mut rng);
        let q = orthographic_retraction(&v).unwrap();
        prop_assert!(q.defect() < 1e-9);
        let back = orthographic_lifting(&x, &q).unwrap();
        prop_assert!(back.defect() < 1e-9);
        prop_assert!((back.matrix() - v.matrix()).frobenius_norm() < 1e-9);
    }

    #[test]
    fn orthographic_lifting_is_projection_of_difference((p, n) in dims(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let x = point(p, n, &mut rng);
        let q = near(&x, 0.3, &mut rng);
        let lifted = orthographic_lifting(&x, &q).unwrap().into_matrix();
        let projected = project_to_tangent(&x, &(q.matrix() - x.matrix())).unwrap().into_matrix();
        prop_assert!((&lifted - &projected).frobenius_norm() < 1e-13);
    }

    #[test]
    fn retractions_agree_to_second_order((p, n) in dims(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let x = point(p, n, &mut rng);
        let dir = tangent(&x, 1.0, &mut rng).into_matrix();
        for h in [1e-2, 1e-3] {
            let v = TangentVector::new(&x, dir.scale(h)).unwrap();
            let a = polar_retraction(&v).unwrap();
            let b = orthographic_retraction(&v).unwrap();
            let first_order = x.matrix() + v.matrix();
            // Both are X + hV + O(h²).
            prop_assert!((a.matrix() - &first_order).frobenius_norm() < 2.0 * h * h);
            prop_assert!((b.matrix() - &first_order).frobenius_norm() < 2.0 * h * h);
        }
    }
}

#[test]
fn map_law_suite_on_st_20_4() {
    // The fixed 200-instance sweep at δ(X,Q) < 0.3.
    let dims = Dims::new(20, 4).unwrap();
    let mut rng = rng_from_seed(2024);
    let mut instances = 0;
    while instances < 200 {
        let x = point(dims.p(), dims.n(), &mut rng);
        let q = near(&x, 0.25, &mut rng);
        if discrepancy(&x, &q).unwrap() >= 0.3 {
            continue;
        }
        instances += 1;
        for (v, retract) in [
            (polar_lifting(&x, &q).unwrap(), polar_retraction as fn(&TangentVector<'_>) -> _),
            (orthographic_lifting(&x, &q).unwrap(), orthographic_retraction),
        ] {
            assert!(v.defect() < 1e-9);
            let back: StiefelPoint = retract(&v).unwrap();
            assert!(orthonormality_defect(back.matrix()) < 1e-9);
            assert!((back.matrix() - q.matrix()).frobenius_norm() < 1e-9);
        }
    }
}

#[test]
fn circle_values() {
    let x = StiefelPoint::new(Matrix::from_rows(&[[1.0], [0.0]])).unwrap();
    let theta = std::f64::consts::FRAC_PI_3;
    let q = StiefelPoint::new(Matrix::from_rows(&[[theta.cos()], [theta.sin()]])).unwrap();
    assert_abs_diff_eq!(discrepancy(&x, &q).unwrap(), 0.5, epsilon = 1e-15);
    let v = polar_lifting(&x, &q).unwrap();
    assert_abs_diff_eq!(v.matrix()[(1, 0)], theta.tan(), epsilon = 1e-14);
    let w = orthographic_lifting(&x, &q).unwrap();
    assert_abs_diff_eq!(w.matrix()[(1, 0)], theta.sin(), epsilon = 1e-15);
    let anti = StiefelPoint::new(Matrix::from_rows(&[[-1.0], [0.0]])).unwrap();
    assert_abs_diff_eq!(discrepancy(&x, &anti).unwrap(), 2.0, epsilon = 1e-15);
}
