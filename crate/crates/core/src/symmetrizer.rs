//! Secondary Friedrichs symmetrizer, the stability condition on the sheet,
//! the explicit choice of `lambda`, and the boundary quadratic form.

use crate::eos::Eos;
use crate::error::{Error, Result};
use crate::grid::{Grid, Sided, StateField};
use crate::matrices::{a_matrices, Mat6, Vec6};
use crate::ramp::EtaProfile;
use crate::state::{PhysState, Side};
use nalgebra::SymmetricEigen;
use ndarray::{Array1, Array2};
use serde::Serialize;

/// Below this `|H2|` a side is treated as unmagnetized when choosing `lambda`.
pub const TINY_FIELD: f64 = 1e-10;

/// Default stability margin in nondimensional units.
pub const DEFAULT_STABILITY_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlfvenData {
    pub c_a: f64,
    pub a_hat: f64,
}

impl AlfvenData {
    /// `c_A = |H| / sqrt(rho)` and `a = 1 / sqrt(rho (1 + c_A^2 / c^2))`.
    pub fn of(u: &Vec6, eos: &dyn Eos) -> Self {
        let rho = eos.density(u[0], u[5]);
        let rho_p = eos.density_dp(u[0], u[5]);
        let h_sq = u[3] * u[3] + u[4] * u[4];
        let c_a = (h_sq / rho).sqrt();
        // c^2 = 1 / rho_p, so rho (1 + c_A^2 / c^2) = rho + |H|^2 rho_p.
        Self { c_a, a_hat: 1.0 / (rho + h_sq * rho_p).sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    /// `a+ |H2+| + a- |H2-| - |[u2]|`.
    pub margin: f64,
    pub k: f64,
    pub satisfied: bool,
    pub a_plus: f64,
    pub a_minus: f64,
}

pub fn check_stability(plus: &PhysState, minus: &PhysState, eos: &dyn Eos, k: f64) -> StabilityReport {
    check_stability_vec(&plus.to_vec(), &minus.to_vec(), eos, k)
}

pub fn check_stability_vec(up: &Vec6, um: &Vec6, eos: &dyn Eos, k: f64) -> StabilityReport {
    let ap = AlfvenData::of(up, eos).a_hat;
    let am = AlfvenData::of(um, eos).a_hat;
    let margin = ap * up[4].abs() + am * um[4].abs() - (up[2] - um[2]).abs();
    StabilityReport { margin, k, satisfied: margin >= k, a_plus: ap, a_minus: am }
}

/// Boundary values of `lambda+-` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaPair {
    pub plus: f64,
    pub minus: f64,
}

impl LambdaPair {
    pub fn get(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.plus,
            Side::Minus => self.minus,
        }
    }

    /// `lambda+ H2+ - lambda- H2- - [u2]`; zero for the constructed pair.
    pub fn balance_residual(&self, up: &Vec6, um: &Vec6) -> f64 {
        self.plus * up[4] - self.minus * um[4] - (up[2] - um[2])
    }
}

pub fn build_lambda(plus: &PhysState, minus: &PhysState, eos: &dyn Eos) -> Result<LambdaPair> {
    build_lambda_vec(&plus.to_vec(), &minus.to_vec(), eos)
}

/// Choose `lambda+-` with `[u2 - lambda H2] = 0` and `|lambda+-| < a+-`.
pub fn build_lambda_vec(up: &Vec6, um: &Vec6, eos: &dyn Eos) -> Result<LambdaPair> {
    let report = check_stability_vec(up, um, eos, 0.0);
    let jump = up[2] - um[2];
    if jump == 0.0 {
        return Ok(LambdaPair { plus: 0.0, minus: 0.0 });
    }
    if report.margin <= 0.0 {
        return Err(Error::StabilityViolated { margin: report.margin, k: 0.0 });
    }
    let (hp, hm) = (up[4], um[4]);
    if hm.abs() < TINY_FIELD {
        return Ok(LambdaPair { plus: jump / hp, minus: 0.0 });
    }
    if hp.abs() < TINY_FIELD {
        return Ok(LambdaPair { plus: 0.0, minus: -jump / hm });
    }
    let (ap, am) = (report.a_plus, report.a_minus);
    let denom = ap * hp.abs() + am * hm.abs();
    Ok(LambdaPair {
        plus: hp.signum() * ap * jump / denom,
        minus: -hm.signum() * am * jump / denom,
    })
}

/// Boundary `lambda+-` along `x2` from the two boundary traces.
pub fn build_lambda_boundary(
    grid: &Grid,
    states: &Sided<StateField>,
    eos: &dyn Eos,
) -> Result<Sided<Array1<f64>>> {
    let mut plus = Array1::zeros(grid.n2);
    let mut minus = Array1::zeros(grid.n2);
    for j in 0..grid.n2 {
        let up = crate::grid::state_at(&states.plus, 0, j);
        let um = crate::grid::state_at(&states.minus, 0, j);
        let pair = build_lambda_vec(&up, &um, eos)?;
        plus[j] = pair.plus;
        minus[j] = pair.minus;
    }
    Ok(Sided::new(plus, minus))
}

/// Interior extension `lambda^(x) = eta(x1) lambda(x2)` together with the
/// smallest positivity margin `a^2 - lambda^2` it leaves in the domain.
#[derive(Debug, Clone)]
pub struct LambdaField {
    pub values: Sided<Array2<f64>>,
    pub eta: EtaProfile,
    pub min_margin: f64,
}

pub fn extend_lambda(
    grid: &Grid,
    boundary: &Sided<Array1<f64>>,
    eta: EtaProfile,
    states: &Sided<StateField>,
    eos: &dyn Eos,
) -> Result<LambdaField> {
    let mut min_margin = f64::INFINITY;
    let values = boundary.map(|side, lam| {
        let field = states.get(side);
        Array2::from_shape_fn(grid.shape(), |(i, j)| {
            let l = eta.value(grid.x1(i)) * lam[j];
            let a = AlfvenData::of(&crate::grid::state_at(field, i, j), eos).a_hat;
            min_margin = min_margin.min(a * a - l * l);
            l
        })
    });
    if min_margin <= 0.0 {
        return Err(Error::PositivityLost { min_eig: min_margin });
    }
    Ok(LambdaField { values, eta, min_margin })
}

/// `S`, `T`, `B0 = S A0`, `B1 = S A1 + T e4^T`, `B2 = S A2 + T e5^T` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizerBundle {
    pub s: Mat6,
    pub t: Vec6,
    pub b0: Mat6,
    pub b1: Mat6,
    pub b2: Mat6,
}

impl SymmetrizerBundle {
    /// `(B1 - B0 dt Psi - B2 d2 Psi) / d1 Phi`.
    pub fn b1_tilde(&self, dt_psi: f64, d2_psi: f64, d1_phi: f64) -> Mat6 {
        (self.b1 - self.b0 * dt_psi - self.b2 * d2_psi) / d1_phi
    }
}

pub fn s_matrix(u: &Vec6, lambda: f64, eos: &dyn Eos) -> Mat6 {
    let rho = eos.density(u[0], u[5]);
    let g = eos.inv_rho_c2(u[0], u[5]);
    let (h1, h2, l) = (u[3], u[4], lambda);
    #[rustfmt::skip]
    let s = Mat6::new(
        1.0,         l * h1 * g, l * h2 * g, 0.0,      0.0,      0.0,
        l * h1 * rho, 1.0,       0.0,        -rho * l, 0.0,      0.0,
        l * h2 * rho, 0.0,       1.0,        0.0,      -rho * l, 0.0,
        0.0,         -l,         0.0,        1.0,      0.0,      0.0,
        0.0,         0.0,        -l,         0.0,      1.0,      0.0,
        0.0,         0.0,        0.0,        0.0,      0.0,      1.0,
    );
    s
}

pub fn t_vector(u: &Vec6, lambda: f64) -> Vec6 {
    Vec6::new(1.0, 0.0, 0.0, u[3], u[4], 0.0) * -lambda
}

pub fn assemble_symmetrizer(u: &Vec6, lambda: f64, eos: &dyn Eos) -> SymmetrizerBundle {
    let a = a_matrices(eos, u);
    let s = s_matrix(u, lambda, eos);
    let t = t_vector(u, lambda);
    let mut b1 = s * a[1];
    let mut b2 = s * a[2];
    for r in 0..6 {
        b1[(r, 3)] += t[r];
        b2[(r, 4)] += t[r];
    }
    SymmetrizerBundle { s, t, b0: s * a[0], b1, b2 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct B0Certificate {
    /// `rho lambda^2 < 1 / (1 + c_A^2 / c^2)`.
    pub analytic: bool,
    pub min_eig: f64,
    /// `1 / (1 + c_A^2 / c^2) - rho lambda^2`.
    pub analytic_margin: f64,
}

pub fn check_b0_positive(u: &Vec6, lambda: f64, eos: &dyn Eos) -> B0Certificate {
    let rho = eos.density(u[0], u[5]);
    let a = AlfvenData::of(u, eos).a_hat;
    let analytic_margin = rho * a * a - rho * lambda * lambda;
    let b0 = assemble_symmetrizer(u, lambda, eos).b0;
    let min_eig = SymmetricEigen::new(b0).eigenvalues.min();
    B0Certificate { analytic: analytic_margin > 0.0, min_eig, analytic_margin }
}

/// Boundary traces of the basic state needed by the boundary quadratic form.
/// Normal derivatives are taken in the fixed half-plane on each side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryBasic {
    pub u2: [f64; 2],
    pub h2: [f64; 2],
    pub d1_un: [f64; 2],
    pub d1_hn: [f64; 2],
    pub d1_q: [f64; 2],
}

/// Front values `(phi, dt phi, d2 phi)` at one boundary point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontPoint {
    pub phi: f64,
    pub dt: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticForm {
    pub total: f64,
    pub leading: f64,
    pub lot: f64,
    /// Largest residual of the boundary conditions and the `H_N` constraint.
    pub constraint_residual: f64,
    pub warning: Option<String>,
}

/// Homogeneous boundary-condition and constraint residuals at one point:
/// the two kinematic rows, the pressure row, and the two `H_N` constraints.
pub fn boundary_residuals(
    vp: &Vec6,
    vm: &Vec6,
    front: FrontPoint,
    basic: &BoundaryBasic,
) -> [f64; 5] {
    let d1_q_jump = basic.d1_q[0] + basic.d1_q[1];
    [
        front.dt + basic.u2[0] * front.d2 - vp[1] - front.phi * basic.d1_un[0],
        front.dt + basic.u2[1] * front.d2 - vm[1] + front.phi * basic.d1_un[1],
        vp[0] - vm[0] + front.phi * d1_q_jump,
        basic.h2[0] * front.d2 - vp[3] - front.phi * basic.d1_hn[0],
        basic.h2[1] * front.d2 - vm[3] + front.phi * basic.d1_hn[1],
    ]
}

/// `2[q (u_N - lambda H_N)]` and its split into the leading part
/// `2[u2 - lambda H2] q+ d2 phi` plus lower-order terms.
pub fn boundary_quadratic_form(
    vp: &Vec6,
    vm: &Vec6,
    lambda: LambdaPair,
    front: FrontPoint,
    basic: &BoundaryBasic,
    tolerance: f64,
) -> QuadraticForm {
    let (lp, lm) = (lambda.plus, lambda.minus);
    let total = 2.0 * (vp[0] * (vp[1] - lp * vp[3]) - vm[0] * (vm[1] - lm * vm[3]));
    let coeff = (basic.u2[0] - lp * basic.h2[0]) - (basic.u2[1] - lm * basic.h2[1]);
    let leading = 2.0 * coeff * vp[0] * front.d2;
    let d1_q_jump = basic.d1_q[0] + basic.d1_q[1];
    let d1_jump = (basic.d1_un[0] - lp * basic.d1_hn[0]) + (basic.d1_un[1] - lm * basic.d1_hn[1]);
    let minus_tangential = basic.u2[1] - lm * basic.h2[1];
    let minus_normal = basic.d1_un[1] - lm * basic.d1_hn[1];
    let lot = -2.0 * d1_jump * vp[0] * front.phi
        - 2.0 * d1_q_jump * front.phi * front.dt
        - 2.0 * d1_q_jump * minus_tangential * front.phi * front.d2
        - 2.0 * d1_q_jump * minus_normal * front.phi * front.phi;
    let constraint_residual = boundary_residuals(vp, vm, front, basic)
        .iter()
        .fold(0.0f64, |a, b| a.max(b.abs()));
    let warning = (constraint_residual > tolerance).then(|| {
        format!("boundary constraints violated by {constraint_residual:.3e}; decomposition is not exact")
    });
    QuadraticForm { total, leading, lot, constraint_residual, warning }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WangYuComparison {
    pub ours: f64,
    pub wy_subsonic: f64,
    pub wy_supersonic: f64,
}

/// Closed-form thresholds for `[u2]^2`-type speeds in the constant-coefficient
/// isentropic case, ours versus the subsonic and supersonic bounds of Wang-Yu.
pub fn wang_yu_compare(c: f64, c_a: f64) -> Result<WangYuComparison> {
    if !(c_a > 0.0 && c_a < c) {
        return Err(Error::Domain(format!("need 0 < c_A < c, got c = {c}, c_A = {c_a}")));
    }
    let (c2, ca2) = (c * c, c_a * c_a);
    let root = ((c2 - ca2) / (c2 + ca2)).sqrt();
    Ok(WangYuComparison {
        ours: ca2 * c2 / (c2 + ca2),
        wy_subsonic: c2 - c2 * root,
        wy_supersonic: c2 + c2 * root,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::IdealGas;

    fn state(p: f64, u2: f64, h1: f64, h2: f64) -> Vec6 {
        Vec6::new(p, 0.0, u2, h1, h2, 0.0)
    }

    #[test]
    fn zero_jump_gives_zero_lambda() {
        let eos = IdealGas::default();
        let l = build_lambda_vec(&state(1.0, 0.3, 0.0, 1.0), &state(1.0, 0.3, 0.0, 0.0), &eos).unwrap();
        assert_eq!(l, LambdaPair { plus: 0.0, minus: 0.0 });
    }

    #[test]
    fn one_sided_field_branch() {
        let eos = IdealGas::default();
        let l = build_lambda_vec(&state(1.0, 1.0, 0.0, 2.0), &state(1.0, 0.0, 0.0, 0.0), &eos).unwrap();
        assert_eq!(l.plus, 0.5);
        assert_eq!(l.minus, 0.0);
    }

    #[test]
    fn unmagnetized_shear_is_unstable() {
        let eos = IdealGas::default();
        let r = check_stability_vec(&state(1.0, 1.0, 0.0, 0.0), &state(1.0, 0.0, 0.0, 0.0), &eos, 1e-3);
        assert!(!r.satisfied);
        assert!(build_lambda_vec(&state(1.0, 1.0, 0.0, 0.0), &state(1.0, 0.0, 0.0, 0.0), &eos).is_err());
    }

    #[test]
    fn symmetrizer_matrices_are_symmetric() {
        let eos = IdealGas::default();
        let u = Vec6::new(1.3, 0.2, -0.4, 0.7, -0.3, 0.1);
        let b = assemble_symmetrizer(&u, 0.23, &eos);
        assert!((b.b0 - b.b0.transpose()).amax() < 1e-15);
        assert!((b.b1 - b.b1.transpose()).amax() < 1e-15);
        assert!((b.b2 - b.b2.transpose()).amax() < 1e-15);
    }

    #[test]
    fn b0_entry_example() {
        // rho = 1 and c = 1 need p = 1/gamma with the matching entropy.
        let eos = IdealGas::default();
        let p = 1.0 / eos.gamma;
        let u = Vec6::new(p, 0.0, 0.0, 0.0, 1.0, eos.entropy_for(p, 1.0));
        let b = assemble_symmetrizer(&u, 0.5, &eos);
        assert!((b.b0[(0, 2)] - 0.5).abs() < 1e-15);
        assert_eq!(assemble_symmetrizer(&u, 0.0, &eos).b0, a_matrices(&eos, &u)[0]);
    }

    #[test]
    fn wang_yu_limits() {
        let w = wang_yu_compare(1.0, 1.0 - 1e-8).unwrap();
        assert!((w.ours - 0.5).abs() < 1e-3);
        assert!((w.wy_subsonic - 1.0).abs() < 1e-3);
        let w = wang_yu_compare(1.0, 1e-6).unwrap();
        assert!(w.ours < 1e-11 && w.wy_subsonic < 1e-11);
        assert!(wang_yu_compare(1.0, 1.0).is_err());
    }
}
