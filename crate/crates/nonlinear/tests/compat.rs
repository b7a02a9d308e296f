use proptest::prelude::*;
use std::sync::Arc;
use vsheet_core::{Grid, IdealGas, Side, Sided, Vec6};
use vsheet_nonlinear::compat::*;
use vsheet_nonlinear::operator::MhdOperator;
use vsheet_nonlinear::spacetime::SpaceTimeGrid;
use vsheet_nonlinear::spacetime::FieldSet;

fn op(n: usize) -> MhdOperator {
    let g = Grid::new(n, n, 4.0, 2.0 * std::f64::consts::PI).unwrap();
    MhdOperator::new(g, Arc::new(IdealGas::default()))
}

fn bg() -> Sided<Vec6> {
    Sided::new(Vec6::new(1.0, 0.0, 0.2, 0.0, 1.0, 0.0), Vec6::new(1.0, 0.0, -0.2, 0.0, 1.0, 0.0))
}

fn truncate(jet: &TimeJet, order: usize) -> TimeJet {
    TimeJet { u: jet.u[..=order].to_vec(), phi: jet.phi[..=order].to_vec() }
}

/// Stationary shear: `u2(x1)`, `S(x1)` with constant pressure and tangential field.
fn shear(op: &MhdOperator) -> InitialData {
    let mut d = InitialData::uniform(&op.grid, bg().plus, bg().minus);
    for side in Side::both() {
        let s = side.sign();
        let u = d.u0.get_mut(side);
        u[2] = op.grid.from_fn(|x1, _| s * (0.2 + 0.1 * (-x1).exp()));
        u[5] = op.grid.from_fn(|x1, _| 0.1 * (0.5 * x1).sin());
    }
    d
}

#[test]
fn bump_data_are_compatible_to_every_computed_order() {
    let op = op(64);
    let d = bump_data(&op.grid, bg(), 0.05, 2.0, 1.0);
    d.validate(&op, 0.1, 1e-3).unwrap();
    let jet = time_jet(&op, &d, 4).unwrap();
    let r = check_compatibility(&op.grid, &jet, 3);
    assert!(r.max_violation() < 1e-12, "{r:?}");
}

#[test]
fn forcing_of_an_order_two_jet_is_quadratic_in_time() {
    let op = op(64);
    let d = bump_data(&op.grid, bg(), 0.05, 1.3, 1.0);
    let jet = time_jet(&op, &d, 2).unwrap();
    let st = SpaceTimeGrid::new(op.grid, 0.5, 9).unwrap();
    let (a, _) = build_approximate(&op, jet, bg(), 1.0, 10.0, &st).unwrap();
    let slope = forcing_temporal_order(&op, &a, 1e-3, 1e-1, 9).unwrap();
    assert!((slope - 2.0).abs() < 0.3, "slope {slope}");
}

/// On `[0, T/2]` the cutoff is inactive, so a stationary state stays exact.
#[test]
fn stationary_shear_has_zero_jet_and_forcing() {
    let op = op(32);
    let d = shear(&op);
    let jet = time_jet(&op, &d, 3).unwrap();
    for j in 1..=3 {
        assert!(jet.u[j].plus.iter().chain(jet.u[j].minus.iter()).all(|f| f.iter().all(|v| v.abs() < 1e-12)));
    }
    let st = SpaceTimeGrid::new(op.grid, 0.5, 9).unwrap();
    let bg = bg();
    let (a, _) = build_approximate(&op, truncate(&jet, 0), bg, 1.0, 10.0, &st).unwrap();
    for t in [0.01, 0.2, 0.5] {
        let f = forcing_fa(&op, &a, t).unwrap();
        let m = f.plus.iter().chain(f.minus.iter()).flat_map(|c| c.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(m < 1e-13, "{m}");
    }
    assert!(discrete_forcing(&op, &a, &st).unwrap().max_abs() < 1e-13);
}

#[test]
fn forcing_vanishes_in_the_past() {
    let op = op(32);
    let d = bump_data(&op.grid, bg(), 0.05, 1.3, 1.0);
    let jet = time_jet(&op, &d, 2).unwrap();
    let st = SpaceTimeGrid::new(op.grid, 0.5, 9).unwrap();
    let (a, _) = build_approximate(&op, jet, bg(), 1.0, 10.0, &st).unwrap();
    for t in [-1e-9, -0.3, -2.0] {
        let f = forcing_fa(&op, &a, t).unwrap();
        assert!(f.plus.iter().chain(f.minus.iter()).all(|c| c.iter().all(|&v| v == 0.0)));
    }
}

#[test]
fn normal_field_is_transported_along_the_front() {
    let op = op(32);
    let g = op.grid;
    let mut d = InitialData::uniform(&g, bg().plus, bg().minus);
    for side in Side::both() {
        let s = side.sign();
        let u = d.u0.get_mut(side);
        u[3] = g.from_fn(|_, x2| s * 0.01 * (2.0 * x2).cos());
        u[2] = g.from_fn(|_, x2| s * 0.2 + 0.05 * x2.sin());
    }
    let jet = time_jet(&op, &d, 1).unwrap();
    for side in Side::both() {
        let (h, u2) = (d.u0.get(side)[3].row(0).to_owned(), d.u0.get(side)[2].row(0).to_owned());
        let expected = -(&u2 * &g.d2_boundary(&h) + &g.d2_boundary(&u2) * &h);
        let hn1 = &jet.u[1].get(side)[3].row(0) - &(&jet.u[0].get(side)[4].row(0) * &g.d2_boundary(&jet.phi[1]));
        assert!((&hn1 - &expected).iter().all(|v| v.abs() < 1e-13));
    }
}

#[test]
fn oversized_data_ask_for_a_shorter_window() {
    let op = op(32);
    let d = bump_data(&op.grid, bg(), 0.05, 1.3, 1.0);
    let jet = time_jet(&op, &d, 2).unwrap();
    let st = SpaceTimeGrid::new(op.grid, 0.5, 9).unwrap();
    let err = build_approximate(&op, jet, bg(), 1.0, 1e-6, &st).unwrap_err();
    assert!(err.to_string().contains("smaller T"));
}

#[test]
fn grid_scale_data_are_rejected_as_under_resolved() {
    let op = op(32);
    let mut d = InitialData::uniform(&op.grid, bg().plus, bg().minus);
    for side in Side::both() {
        d.u0.get_mut(side)[0] = op.grid.from_fn(|x1, x2| {
            let i = (x1 / op.grid.h1()).round() as i64;
            let j = (x2 / op.grid.h2()).round() as i64;
            1.0 + 0.01 * if (i + j) % 2 == 0 { 1.0 } else { -1.0 }
        });
    }
    assert!(time_jet(&op, &d, 3).is_err());
}

#[test]
fn shorter_cutoff_shrinks_the_approximate_solution() {
    let op = op(32);
    let d = bump_data(&op.grid, bg(), 0.05, 1.3, 1.0);
    let jet = time_jet(&op, &d, 2).unwrap();
    let mut last = f64::INFINITY;
    for t_max in [1.0, 0.5, 0.25] {
        let st = SpaceTimeGrid::new(op.grid, t_max, 17).unwrap();
        let (_, s) = build_approximate(&op, jet.clone(), bg(), t_max, 10.0, &st).unwrap();
        assert!(s.u_tilde < last);
        last = s.u_tilde;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn projection_restores_order_zero_compatibility(seed in any::<u64>(), a in 0.0f64..0.05, b in 0.0f64..0.05) {
        use rand::{Rng, SeedableRng};
        let op = op(16);
        let g = op.grid;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut d = InitialData::uniform(&g, bg().plus, bg().minus);
        d.phi0 = g.boundary_from_fn(|x2| a * x2.sin() + b * (2.0 * x2).cos());
        for side in Side::both() {
            for c in 0..6 {
                let (k, amp) = (rng.random_range(1..3) as f64, rng.random_range(-0.02..0.02));
                let f = &mut d.u0.get_mut(side)[c];
                *f = &*f + &g.from_fn(|x1, x2| amp * (k * x2).cos() * (-x1).exp());
            }
        }
        let p = project_compatible(&g, &d);
        let jet = time_jet(&op, &p, 1).unwrap();
        prop_assert!(check_compatibility(&g, &jet, 0).orders[0].max() <= 1e-10);
    }
}
