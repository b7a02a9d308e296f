use std::sync::Arc;
use vsheet_core::{Grid, IdealGas, Side, Sided, Vec6};
use vsheet_nonlinear::compat::{build_approximate, time_jet, InitialData};
use vsheet_nonlinear::nash_moser::*;
use vsheet_nonlinear::operator::{constant_state, MhdOperator};
use vsheet_nonlinear::spacetime::{FieldSet, SpaceTimeGrid};

fn small() -> ToySpec {
    ToySpec { n1: 32, n2: 32, nt: 9, ..ToySpec::default() }
}

#[test]
fn small_toy_run_decreases_and_keeps_its_books() {
    let p = toy_problem(&small()).unwrap();
    let r = run(&p, &NashMoserConfig::default(), |_| {}).unwrap();
    assert_eq!(r.stop, StopReason::MaxIterations);
    assert!(r.strictly_decreasing(5), "{:?}", r.iterates.iter().map(|i| i.residual_interior).collect::<Vec<_>>());
    assert!(r.iterates[5].residual_interior < 0.2 * r.iterates[0].residual_interior);
    for s in &r.steps {
        assert!(s.bookkeeping_residual <= 1e-12, "step {}: {}", s.i, s.bookkeeping_residual);
        assert!(s.kinematic_residual <= 1e-10);
        assert!(s.normal_field_residual <= 1e-10);
        assert!(s.errors.quadratic < s.source_f);
    }
}

#[test]
fn iterates_are_causal_up_to_the_smoothing_defect() {
    let p = toy_problem(&small()).unwrap();
    let cfg = NashMoserConfig::default();
    let mut state = IterationState::initial(&p.st);
    for _ in 0..2 {
        state = iterate_step(&p, &state, &cfg).unwrap().0;
    }
    let s0 = state.v.u.slice(0);
    let m = s0.plus.iter().chain(s0.minus.iter()).fold(0.0f64, |m, f| f.fold(m, |a, v| a.max(v.abs())));
    let total = state.v.max_abs();
    assert!(total > 0.0);
    assert!(m < 1e-2 * total, "{m} of {total}");
    assert!(state.v.phi.row(0).iter().all(|&v| v.abs() < 1e-2 * total));
}

#[test]
fn quadratic_error_scales_with_the_square_of_the_step() {
    let p = toy_problem(&small()).unwrap();
    let step = |s: f64| {
        let cfg = NashMoserConfig { forcing_scale: s, ..NashMoserConfig::default() };
        iterate_step(&p, &IterationState::initial(&p.st), &cfg).unwrap().1
    };
    let (a, b) = (step(1.0), step(0.5));
    let dv = a.delta_v / b.delta_v;
    assert!((dv - 2.0).abs() < 0.05, "step ratio {dv}");
    let ratio = a.errors.quadratic / b.errors.quadratic;
    assert!((ratio - 4.0).abs() <= 1.0, "quadratic ratio {ratio}");
}

#[test]
fn exact_data_converge_at_once() {
    let bg = toy_background();
    let grid = Grid::new(16, 16, 4.0, std::f64::consts::TAU).unwrap();
    let op = MhdOperator::new(grid, Arc::new(IdealGas::default()));
    let st = SpaceTimeGrid::new(grid, 0.5, 9).unwrap();
    let data = InitialData::uniform(&grid, bg.plus, bg.minus);
    let jet = time_jet(&op, &data, 2).unwrap();
    let (approx, small) = build_approximate(&op, jet, bg, 1.0, 1e-3, &st).unwrap();
    assert!(small.total() < 1e-13);
    let p = Problem::new(op, st, &approx).unwrap();
    assert!(p.fa.max_abs() < 1e-13, "{}", p.fa.max_abs());
    assert!(p.ga.max_abs() < 1e-13, "{}", p.ga.max_abs());
    let r = run(&p, &NashMoserConfig::default(), |_| {}).unwrap();
    assert_eq!(r.stop, StopReason::Converged);
    assert_eq!(r.iterates.len(), 1);
}

#[test]
fn first_modified_state_of_exact_data_is_the_background() {
    let bg = toy_background();
    let grid = Grid::new(16, 16, 4.0, std::f64::consts::TAU).unwrap();
    let op = MhdOperator::new(grid, Arc::new(IdealGas::default()));
    let st = SpaceTimeGrid::new(grid, 0.5, 9).unwrap();
    let data = InitialData::uniform(&grid, bg.plus, bg.minus);
    let jet = time_jet(&op, &data, 1).unwrap();
    let (approx, _) = build_approximate(&op, jet, bg, 1.0, 1e-3, &st).unwrap();
    let p = Problem::new(op, st, &approx).unwrap();
    let m = modified_state(&p, &IterationState::initial(&st), 2.0, TransportConfig::default()).unwrap();
    assert!(m.v.max_abs() < 1e-13, "{}", m.v.max_abs());
    assert_eq!(m.causal_defect, 0.0);
}

/// `u = a x` in physical coordinates on both sides, flat front: the field
/// obeys `H1 = H1_0(x1 e^{-at})`, `H2 = H2_0(x1 e^{-at}) e^{-at}`.
fn transport_error(n: usize, nt: usize) -> f64 {
    let a = 0.5;
    let t_end = 0.5;
    let grid = Grid::new(n, 8, 4.0, std::f64::consts::TAU).unwrap();
    let op = MhdOperator::new(grid, Arc::new(IdealGas::default()));
    let st = SpaceTimeGrid::new(grid, t_end, nt).unwrap();
    let v = Vec6::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let mut base = constant_state(&st, v, v);
    let h1 = |x: f64| 0.2 * (-4.0 * (x - 1.5).powi(2)).exp();
    let h2 = |x: f64| 1.0 + 0.3 * (-4.0 * (x - 1.5).powi(2)).exp();
    for side in Side::both() {
        let u1 = &mut base.u.fields.get_mut(side)[1];
        for ((_, i, _), val) in u1.indexed_iter_mut() {
            *val = side.sign() * a * grid.x1(i);
        }
    }
    let h0 = Sided::from_fn(|_| [grid.from_fn(|x1, _| h1(x1)), grid.from_fn(|x1, _| h2(x1))]);
    let (h, _) = transport_magnetic(&op, &st, &base, &st.zeros2(), &h0, TransportConfig::default()).unwrap();
    let decay = (-a * t_end).exp();
    let mut err = 0.0f64;
    for side in Side::both() {
        let [f1, f2] = h.get(side);
        for i in 0..=n {
            let x = grid.x1(i) * decay;
            err = err.max((f1[[nt - 1, i, 3]] - h1(x)).abs()).max((f2[[nt - 1, i, 3]] - h2(x) * decay).abs());
        }
    }
    err
}

#[test]
fn magnetic_transport_matches_the_stretching_flow() {
    let coarse = transport_error(32, 9);
    let fine = transport_error(64, 17);
    assert!(coarse < 5e-3, "{coarse}");
    assert!(fine < coarse / 4.0, "{coarse} -> {fine}");
}
