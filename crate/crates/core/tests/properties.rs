use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use vsheet_core::eos::{Eos, IdealGas};
use vsheet_core::geometry::{a1_tilde, lift_front, transformed_vectors, FrontField};
use vsheet_core::matrices::{a_matrices, assemble_a0, assemble_a1, assemble_a2, is_symmetric, rh_residual};
use vsheet_core::norms::{hm_star_norm, trace, GridFunction, Lifting, MultiIndex, NormDomain};
use vsheet_core::ramp::make_cutoff;
use vsheet_core::symmetrizer::{
    assemble_symmetrizer, boundary_quadratic_form, build_lambda_vec, check_b0_positive,
    check_stability_vec, wang_yu_compare, AlfvenData, BoundaryBasic, FrontPoint,
};
use vsheet_core::{Grid, PhysState, Side, Vec6};

/// Density with a pressure derivative that changes sign, to exercise the
/// failing branch of the hyperbolicity test.
struct Wavy;

impl Eos for Wavy {
    fn name(&self) -> &'static str {
        "wavy"
    }
    fn density(&self, p: f64, _s: f64) -> f64 {
        1.0 + 0.5 * p.sin()
    }
    fn density_dp(&self, p: f64, _s: f64) -> f64 {
        0.5 * p.cos()
    }
    fn density_ds(&self, _p: f64, _s: f64) -> f64 {
        0.0
    }
    fn density_dpp(&self, p: f64, _s: f64) -> f64 {
        -0.5 * p.sin()
    }
    fn density_dps(&self, _p: f64, _s: f64) -> f64 {
        0.0
    }
}

fn state() -> impl Strategy<Value = Vec6> {
    (0.05f64..5.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -1.0f64..1.0)
        .prop_map(|(p, u1, u2, h1, h2, s)| Vec6::new(p, u1, u2, h1, h2, s))
}

fn min_eig(m: vsheet_core::Mat6) -> f64 {
    SymmetricEigen::new(m).eigenvalues.min()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn coefficient_matrices_are_exactly_symmetric(u in state()) {
        let eos = IdealGas::default();
        let st = PhysState::from_vec(&u, Side::Plus);
        prop_assert!(is_symmetric(&assemble_a0(&st, &eos, 1e-6).unwrap()));
        prop_assert!(is_symmetric(&assemble_a1(&st, &eos, 1e-6).unwrap()));
        prop_assert!(is_symmetric(&assemble_a2(&st, &eos, 1e-6).unwrap()));
    }

    #[test]
    fn hyperbolicity_certificate_matches_a0_spectrum(p in 0.0f64..7.0, s in -1.0f64..1.0) {
        let eos = Wavy;
        let st = PhysState::new(p, 0.1, 0.0, 0.2, 0.3, s, Side::Minus);
        let cert = st.check_hyperbolicity(&eos, 1e-9);
        let a0 = a_matrices(&eos, &st.to_vec())[0];
        if cert.ok {
            prop_assert!(min_eig(a0) > 0.0);
        } else {
            prop_assert!(min_eig(a0) <= 1e-9);
        }
    }

    #[test]
    fn rh_residual_is_linear_in_total_pressure_jump(a in state(), b in state(), eps in -1.0f64..1.0) {
        let eos = IdealGas::default();
        let (pa, pb) = (PhysState::from_vec(&a, Side::Plus), PhysState::from_vec(&b, Side::Minus));
        let mut shifted = pa;
        shifted.p += eps;
        let r0 = rh_residual(&pa, &pb, 0.1, 0.2, &eos);
        let r1 = rh_residual(&shifted, &pb, 0.1, 0.2, &eos);
        for k in 0..4 {
            prop_assert_eq!(r0.components[k], r1.components[k]);
        }
        prop_assert!((r1.components[4] - r0.components[4] - eps).abs() < 1e-12);
    }

    #[test]
    fn lambda_satisfies_balance_and_bound(a in state(), b in state(), frac in -0.999f64..0.999) {
        let eos = IdealGas::default();
        // Place [u2] inside the stable band so that the margin is at least 1e-3.
        let width = check_stability_vec(&a, &b, &eos, 0.0).margin + (a[2] - b[2]).abs() - 1e-3;
        prop_assume!(width > 0.0);
        let mut a = a;
        a[2] = b[2] + frac * width;
        let report = check_stability_vec(&a, &b, &eos, 1e-3);
        prop_assert!(report.satisfied);
        let l = build_lambda_vec(&a, &b, &eos).unwrap();
        prop_assert!(l.plus.abs() < report.a_plus);
        prop_assert!(l.minus.abs() < report.a_minus);
        prop_assert!(l.balance_residual(&a, &b).abs() <= 1e-12);
    }

    #[test]
    fn b0_analytic_test_matches_eigenvalues(u in state(), lam in -2.0f64..2.0) {
        let eos = IdealGas::default();
        let cert = check_b0_positive(&u, lam, &eos);
        prop_assume!(cert.analytic_margin.abs() > 1e-9);
        prop_assert_eq!(cert.analytic, cert.min_eig > 0.0);
    }

    #[test]
    fn wang_yu_subsonic_bound_is_weaker(c in 0.1f64..10.0, frac in 1e-3f64..0.999) {
        let w = wang_yu_compare(c, frac * c).unwrap();
        prop_assert!(w.ours < w.wy_subsonic);
    }

    #[test]
    fn small_fronts_keep_jacobian_bounded(amp in -0.499f64..0.499, k in 1i32..4, ph in 0.0f64..6.0) {
        let g = Grid::new(24, 16, 8.0, std::f64::consts::TAU).unwrap();
        let front = FrontField::new(g.boundary_from_fn(|x2| amp * (k as f64 * x2 + ph).sin()));
        let l = lift_front(&g, &front, &make_cutoff());
        prop_assert!(l.min_d1_phi_plus >= 0.5);
        prop_assert!(l.max_d1_phi_minus <= -0.5);
        for j in 0..g.n2 {
            let slope = g.d2_boundary(&front.phi)[j];
            prop_assert_eq!(l.d2_psi[[0, j]], slope);
        }
    }

    #[test]
    fn a1_tilde_is_symmetric(u in state(), dt in -1.0f64..1.0, d2 in -1.0f64..1.0, j in 0.5f64..1.5) {
        let eos = IdealGas::default();
        let m = a1_tilde(&a_matrices(&eos, &u), dt, d2, j).unwrap();
        prop_assert!(is_symmetric(&m));
    }

    #[test]
    fn transformed_traces_equal_normal_components(u in state(), d2 in -1.0f64..1.0) {
        let t = transformed_vectors(&u, 0.0, d2, 1.0);
        prop_assert_eq!(t.u_n, u[1] - u[2] * d2);
        prop_assert_eq!(t.h_n, u[3] - u[4] * d2);
    }

    #[test]
    fn symmetrized_matrices_are_symmetric(u in state(), lam in -1.0f64..1.0) {
        let b = assemble_symmetrizer(&u, lam, &IdealGas::default());
        prop_assert!((b.b0 - b.b0.transpose()).amax() <= 1e-14);
        prop_assert!((b.b1 - b.b1.transpose()).amax() <= 1e-14);
        prop_assert!((b.b2 - b.b2.transpose()).amax() <= 1e-14);
    }

    #[test]
    fn multi_index_weight_is_additive(a in (0usize..4, 0usize..4, 0usize..4, 0usize..4),
                                      b in (0usize..4, 0usize..4, 0usize..4, 0usize..4)) {
        let a = MultiIndex::new(a.0, a.1, a.2, a.3);
        let b = MultiIndex::new(b.0, b.1, b.2, b.3);
        prop_assert_eq!(a.add(&b).weight(), a.weight() + b.weight());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn quadratic_form_decomposes_exactly(
        vp in state(), vm in state(),
        phi in -1.0f64..1.0, dt in -1.0f64..1.0, d2 in -1.0f64..1.0,
        u2 in (-1.0f64..1.0, -1.0f64..1.0), h2 in (-1.0f64..1.0, -1.0f64..1.0),
        d1un in (-1.0f64..1.0, -1.0f64..1.0), d1hn in (-1.0f64..1.0, -1.0f64..1.0),
        d1q in (-1.0f64..1.0, -1.0f64..1.0), lam in (-1.0f64..1.0, -1.0f64..1.0),
    ) {
        let basic = BoundaryBasic {
            u2: [u2.0, u2.1], h2: [h2.0, h2.1], d1_un: [d1un.0, d1un.1],
            d1_hn: [d1hn.0, d1hn.1], d1_q: [d1q.0, d1q.1],
        };
        let front = FrontPoint { phi, dt, d2 };
        // Enforce the boundary conditions and constraints on otherwise random traces.
        let (mut vp, mut vm) = (vp, vm);
        vp[1] = dt + u2.0 * d2 - phi * d1un.0;
        vm[1] = dt + u2.1 * d2 + phi * d1un.1;
        vm[0] = vp[0] + phi * (d1q.0 + d1q.1);
        vp[3] = h2.0 * d2 - phi * d1hn.0;
        vm[3] = h2.1 * d2 + phi * d1hn.1;
        let pair = vsheet_core::symmetrizer::LambdaPair { plus: lam.0, minus: lam.1 };
        let q = boundary_quadratic_form(&vp, &vm, pair, front, &basic, 1e-12);
        prop_assert!(q.warning.is_none());
        prop_assert!((q.total - q.leading - q.lot).abs() <= 1e-12);
    }

    #[test]
    fn norms_grow_with_order(a in -1.0f64..1.0, k in 1i32..3) {
        let g = Grid::new(12, 12, 2.0, std::f64::consts::TAU).unwrap();
        let u = GridFunction::from_fn(g, 0.0, 0.1, 6, |t, x1, x2| {
            (a + t + x1).sin() * (k as f64 * x2).cos()
        });
        let mut prev = 0.0;
        for m in 0..4 {
            let n = hm_star_norm(&u, m, NormDomain::SpaceTime).unwrap().total;
            prop_assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn trace_inverts_lift(seed in 0u64..1000) {
        let g = Grid::new(10, 8, 2.0, 1.0).unwrap();
        let v0 = ndarray::Array2::from_shape_fn((2, g.n2), |(k, j)| ((seed + k as u64 * 7 + j as u64) as f64).sin());
        let l = Lifting::default().lift(&g, 0.0, 0.1, std::slice::from_ref(&v0));
        prop_assert_eq!(trace(&l), v0);
    }
}

#[test]
fn b0_loses_positivity_exactly_at_the_algebraic_boundary() {
    let eos = IdealGas::default();
    for u in [Vec6::new(1.0, 0.0, 0.0, 0.3, 0.8, 0.0), Vec6::new(2.5, 0.4, -0.2, -1.1, 0.2, 0.5)] {
        let a = AlfvenData::of(&u, &eos).a_hat;
        let cert = check_b0_positive(&u, a, &eos);
        assert!(cert.min_eig.abs() <= 1e-10, "{}", cert.min_eig);
    }
}

#[test]
fn incompressible_limit_of_the_margin() {
    // rho = 1 and c = 1e6: the margin tends to |H+| + |H-| - |[u2]|.
    let eos = IdealGas::default();
    let c: f64 = 1e6;
    let p = c * c / eos.gamma;
    let s = eos.entropy_for(p, 1.0);
    let up = Vec6::new(p, 0.0, 0.7, 0.0, 1.2, s);
    let um = Vec6::new(p, 0.0, -0.1, 0.0, -0.5, s);
    let r = check_stability_vec(&up, &um, &eos, 0.0);
    let expect = 1.2 + 0.5 - 0.8;
    assert!(((r.margin - expect) / expect).abs() < 1e-6);
}

#[test]
fn lambda_with_unit_a_hat_on_both_sides() {
    // a = 1 means rho (1 + |H|^2 / (gamma p)) = 1; pick p = 2 and solve for rho.
    let eos = IdealGas::default();
    let p = 2.0;
    let side = |h2: f64, u2: f64| {
        let rho = 1.0 / (1.0 + h2 * h2 / (eos.gamma * p));
        Vec6::new(p, 0.0, u2, 0.0, h2, eos.entropy_for(p, rho))
    };
    let (up, um) = (side(2.0, 1.0), side(1.0, 0.0));
    assert!((AlfvenData::of(&up, &eos).a_hat - 1.0).abs() < 1e-14);
    assert!((AlfvenData::of(&um, &eos).a_hat - 1.0).abs() < 1e-14);
    let l = build_lambda_vec(&up, &um, &eos).unwrap();
    assert!((l.plus - 1.0 / 3.0).abs() < 1e-14);
    assert!((l.minus + 1.0 / 3.0).abs() < 1e-14);
    assert!(l.balance_residual(&up, &um).abs() < 1e-14);
}

#[test]
fn sound_speed_of_ideal_gas() {
    let eos = IdealGas::default();
    let st = PhysState::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, Side::Plus);
    let c = st.sound_speed(&eos, 1e-6).unwrap();
    assert!((c - (5.0f64 / 3.0).sqrt()).abs() < 1e-14);
}
