use ndarray::{Array2, Array3};
use proptest::prelude::*;
use vsheet_nonlinear::smoothing::*;

fn band_limited(nt: usize, n2: usize, modes: &[(usize, usize, f64)]) -> Array2<f64> {
    Array2::from_shape_fn((nt, n2), |(a, b)| {
        let t = std::f64::consts::PI * a as f64 / (nt - 1) as f64;
        let x = std::f64::consts::TAU * b as f64 / n2 as f64;
        modes.iter().map(|&(k, m, c)| c * (k as f64 * t).cos() * (m as f64 * x + c).cos()).sum()
    })
}

#[test]
fn harness_constants_stay_below_the_pinned_bound() {
    let r = smoothing_harness(&HarnessConfig::default()).unwrap();
    assert_eq!(r.rows.len(), 8);
    assert!(r.as1 < HARNESS_BOUND && r.as2 < HARNESS_BOUND && r.as3 < HARNESS_BOUND, "{r:?}");
    assert!(r.rows.iter().all(|row| row.as1 > 0.0 && row.as3 > 0.0));
}

#[test]
fn harness_is_deterministic() {
    let cfg = HarnessConfig { grids: vec![(17, 32)], samples: 4, ..HarnessConfig::default() };
    assert_eq!(smoothing_harness(&cfg).unwrap(), smoothing_harness(&cfg).unwrap());
}

#[test]
fn schedule_bounds_hold_up_to_a_million() {
    for theta0 in [1.0, 2.0, 3.5] {
        assert_eq!(ThetaSchedule::new(theta0).unwrap().first_violation(1_000_000), None);
    }
}

#[test]
fn theta_derivative_matches_centred_differences() {
    let sm = Smoother::new(17, 32).unwrap();
    let u = band_limited(17, 32, &[(1, 2, 0.5), (3, 2, 0.7), (4, 1, -0.2), (0, 5, 0.4)]);
    let theta = 3.0;
    let eps = 1e-4;
    let fd = (&sm.smooth2(&u, theta + eps) - &sm.smooth2(&u, theta - eps)) / (2.0 * eps);
    let exact = sm.smooth_plane_dtheta(u.view(), theta);
    assert!((&fd - &exact).iter().all(|v| v.abs() < 1e-7));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn band_limited_data_are_fixed_points(k1 in 0usize..3, m1 in 0usize..3, k2 in 0usize..3, m2 in 0usize..3, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, theta in 4.5f64..12.0) {
        let sm = Smoother::new(17, 32).unwrap();
        let u = band_limited(17, 32, &[(k1, m1, c1), (k2, m2, c2)]);
        let su = sm.smooth2(&u, theta);
        prop_assert!((&su - &u).iter().all(|v| v.abs() <= 1e-12));
        let ssu = sm.smooth2(&su, theta);
        prop_assert!((&ssu - &su).iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn equal_traces_smooth_to_equal_traces(seed in any::<u64>(), theta in 1.0f64..8.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let sm = Smoother::new(9, 16).unwrap();
        let u = Array3::from_shape_fn((9, 5, 16), |_| rng.random_range(-1.0..1.0));
        let mut v = Array3::from_shape_fn((9, 5, 16), |_| rng.random_range(-1.0..1.0));
        v.index_axis_mut(ndarray::Axis(1), 0).assign(&u.index_axis(ndarray::Axis(1), 0));
        let (su, sv) = (sm.smooth3(&u, theta), sm.smooth3(&v, theta));
        prop_assert_eq!(su.index_axis(ndarray::Axis(1), 0), sv.index_axis(ndarray::Axis(1), 0));
    }

    #[test]
    fn smoothing_twice_only_changes_the_transition_band(seed in any::<u64>(), theta in 1.0f64..6.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let sm = Smoother::new(17, 32).unwrap();
        let u = Array2::from_shape_fn((17, 32), |_| rng.random_range(-1.0..1.0));
        let su = sm.smooth2(&u, theta);
        let d = &sm.smooth2(&su, theta) - &su;
        let spec = sm.spectrum(d.view());
        for ((r, c), v) in spec.indexed_iter() {
            let (a, b) = sm.modes(r, c);
            let rho = a.hypot(b) / theta;
            if rho <= 1.0 || rho >= 2.0 {
                prop_assert!(v.norm() < 1e-13);
            }
        }
    }
}
