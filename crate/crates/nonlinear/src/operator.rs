//! The nonlinear interior operator `L(U, Psi) = A0 dt U + A1~ d1 U + A2 d2 U`
//! and boundary operator `B(U, phi)` on the straightened domain, their
//! directional derivatives by central differences, and the Cauchy
//! right-hand side used for time jets.

use crate::spacetime::{BoundaryRows, FieldSet, Interior, SpaceTimeGrid, SpaceTimeState};
use ndarray::{Array1, Array2, Axis};
use std::sync::Arc;
use vsheet_core::geometry::a1_tilde;
use vsheet_core::grid::{state_at, zero_state_field};
use vsheet_core::matrices::a_matrices;
use vsheet_core::ramp::{make_cutoff, CutoffChi};
use vsheet_core::{Eos, Error, Grid, Result, Side, Sided, StateField, Vec6};

/// Smallest admissible `(H2+)^2 + (H2-)^2` when solving for the front slope.
pub const SLOPE_DENOMINATOR_FLOOR: f64 = 1e-12;

/// `mu = (H1+ H2+ + H1- H2-) / ((H2+)^2 + (H2-)^2)`, the front slope implied
/// by the normal-field constraints.
pub fn front_slope(plus: &Vec6, minus: &Vec6) -> Result<f64> {
    let den = plus[4] * plus[4] + minus[4] * minus[4];
    if den < SLOPE_DENOMINATOR_FLOOR {
        return Err(Error::StabilityViolated { margin: den, k: SLOPE_DENOMINATOR_FLOOR });
    }
    Ok((plus[3] * plus[4] + minus[3] * minus[4]) / den)
}

/// `eta = u1+ - u2+ mu`, the front speed.
pub fn front_speed(plus: &Vec6, minus: &Vec6) -> Result<f64> {
    Ok(plus[1] - plus[2] * front_slope(plus, minus)?)
}

/// Weights and nodes of the fourth-order central difference used for
/// directional derivatives: `f'(0) ~ sum w f(s)`.
const DIRECTIONAL: [(f64, f64); 4] = [(-1.0, 1.0 / 6.0), (-0.5, -4.0 / 3.0), (0.5, 4.0 / 3.0), (1.0, -1.0 / 6.0)];

#[derive(Clone)]
pub struct MhdOperator {
    pub grid: Grid,
    pub eos: Arc<dyn Eos>,
    pub chi: CutoffChi,
}

impl std::fmt::Debug for MhdOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MhdOperator").field("grid", &self.grid).field("chi", &self.chi).finish()
    }
}

/// Front-dependent factors at one instant.
struct Lift {
    chi: Vec<f64>,
    dchi: Vec<f64>,
    d2_phi: Array1<f64>,
}

impl MhdOperator {
    pub fn new(grid: Grid, eos: Arc<dyn Eos>) -> Self {
        Self { grid, eos, chi: make_cutoff() }
    }

    fn lift(&self, phi: &Array1<f64>) -> Lift {
        let g = &self.grid;
        Lift {
            chi: (0..=g.n1).map(|i| self.chi.value(g.x1(i))).collect(),
            dchi: (0..=g.n1).map(|i| self.chi.derivative(g.x1(i))).collect(),
            d2_phi: g.d2_boundary(phi),
        }
    }

    fn derivatives(&self, u: &Sided<StateField>) -> (Sided<StateField>, Sided<StateField>) {
        let g = &self.grid;
        (
            u.map(|_, f| std::array::from_fn(|c| g.d1(&f[c]))),
            u.map(|_, f| std::array::from_fn(|c| g.d2(&f[c]))),
        )
    }

    /// `A1~` at node `(i, j)` of `side`.
    fn a1t(&self, a: &[vsheet_core::Mat6; 3], lift: &Lift, phi: &Array1<f64>, dt_phi: &Array1<f64>, side: Side, i: usize, j: usize) -> Result<vsheet_core::Mat6> {
        let d1_phi = side.sign() + lift.dchi[i] * phi[j];
        a1_tilde(a, lift.chi[i] * dt_phi[j], lift.chi[i] * lift.d2_phi[j], d1_phi)
    }

    /// `A1~ d1 U + A2 d2 U` at one instant.
    pub fn spatial_slice(&self, u: &Sided<StateField>, phi: &Array1<f64>, dt_phi: &Array1<f64>) -> Result<Sided<StateField>> {
        let g = &self.grid;
        let lift = self.lift(phi);
        let (d1, d2) = self.derivatives(u);
        let mut out = Sided::new(zero_state_field(g), zero_state_field(g));
        for side in Side::both() {
            let (uu, u1, u2) = (u.get(side), d1.get(side), d2.get(side));
            let o = out.get_mut(side);
            for i in 0..=g.n1 {
                for j in 0..g.n2 {
                    let a = a_matrices(self.eos.as_ref(), &state_at(uu, i, j));
                    let a1 = self.a1t(&a, &lift, phi, dt_phi, side, i, j)?;
                    let r = a1 * state_at(u1, i, j) + a[2] * state_at(u2, i, j);
                    for c in 0..6 {
                        o[c][[i, j]] = r[c];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `L(U, Psi)` at one instant from `U`, `dt U`, `phi` and `dt phi`.
    pub fn interior_slice(&self, u: &Sided<StateField>, dt_u: &Sided<StateField>, phi: &Array1<f64>, dt_phi: &Array1<f64>) -> Result<Sided<StateField>> {
        let g = &self.grid;
        let mut out = self.spatial_slice(u, phi, dt_phi)?;
        for side in Side::both() {
            let (uu, ut) = (u.get(side), dt_u.get(side));
            let o = out.get_mut(side);
            for i in 0..=g.n1 {
                for j in 0..g.n2 {
                    let a0 = a_matrices(self.eos.as_ref(), &state_at(uu, i, j))[0];
                    let r = a0 * state_at(ut, i, j);
                    for c in 0..6 {
                        o[c][[i, j]] += r[c];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `B(U, phi)` at one instant: `dt phi + u2+- d2 phi - u1+-` and `[q]`.
    pub fn boundary_slice(&self, u: &Sided<StateField>, phi: &Array1<f64>, dt_phi: &Array1<f64>) -> [Array1<f64>; 3] {
        let d2 = self.grid.d2_boundary(phi);
        let n2 = self.grid.n2;
        let tr = |s: Side, j: usize| state_at(u.get(s), 0, j);
        let q = |v: &Vec6| v[0] + 0.5 * (v[3] * v[3] + v[4] * v[4]);
        [
            Array1::from_shape_fn(n2, |j| dt_phi[j] + tr(Side::Plus, j)[2] * d2[j] - tr(Side::Plus, j)[1]),
            Array1::from_shape_fn(n2, |j| dt_phi[j] + tr(Side::Minus, j)[2] * d2[j] - tr(Side::Minus, j)[1]),
            Array1::from_shape_fn(n2, |j| q(&tr(Side::Plus, j)) - q(&tr(Side::Minus, j))),
        ]
    }

    /// `L(U, Psi)` on the space-time grid, time derivatives by differences.
    pub fn interior(&self, st: &SpaceTimeGrid, s: &SpaceTimeState) -> Result<Interior> {
        let dt_u = Interior { fields: s.u.fields.map(|_, f| std::array::from_fn(|c| st.dt_of3(&f[c]))) };
        let dt_phi = st.dt_of2(&s.phi);
        let mut out = Interior::zeros(st);
        for k in 0..st.nt {
            let r = self.interior_slice(&s.u.slice(k), &dt_u.slice(k), &s.phi_slice(k), &dt_phi.row(k).to_owned())?;
            out.set_slice(k, &r);
        }
        Ok(out)
    }

    pub fn boundary(&self, st: &SpaceTimeGrid, s: &SpaceTimeState) -> BoundaryRows {
        let dt_phi = st.dt_of2(&s.phi);
        let mut out = BoundaryRows::zeros(st);
        for k in 0..st.nt {
            let r = self.boundary_slice(&s.u.slice(k), &s.phi_slice(k), &dt_phi.row(k).to_owned());
            for (row, v) in out.rows.iter_mut().zip(r) {
                row.index_axis_mut(Axis(0), k).assign(&v);
            }
        }
        out
    }

    pub fn evaluate(&self, st: &SpaceTimeGrid, s: &SpaceTimeState) -> Result<(Interior, BoundaryRows)> {
        Ok((self.interior(st, s)?, self.boundary(st, s)))
    }

    /// `(L', B')(base)` applied to `dir`, from four operator evaluations
    /// along `base + s dir`, `s` in `{-1, -1/2, 1/2, 1}`.
    pub fn derivative(&self, st: &SpaceTimeGrid, base: &SpaceTimeState, dir: &SpaceTimeState) -> Result<(Interior, BoundaryRows)> {
        let mut li = Interior::zeros(st);
        let mut lb = BoundaryRows::zeros(st);
        for (s, w) in DIRECTIONAL {
            let (i, b) = self.evaluate(st, &base.lin(1.0, dir, s))?;
            li = li.lin(1.0, &i, w);
            lb = lb.lin(1.0, &b, w);
        }
        Ok((li, lb))
    }

    /// Cauchy right-hand side: `dt phi = eta(U)` at `x1 = 0` and
    /// `dt U = -A0^{-1} (A1~ d1 U + A2 d2 U)`.
    pub fn cauchy_rhs(&self, u: &Sided<StateField>, phi: &Array1<f64>) -> Result<(Sided<StateField>, Array1<f64>)> {
        let g = &self.grid;
        let mut dt_phi = Array1::zeros(g.n2);
        for j in 0..g.n2 {
            dt_phi[j] = front_speed(&state_at(&u.plus, 0, j), &state_at(&u.minus, 0, j))?;
        }
        let mut out = self.spatial_slice(u, phi, &dt_phi)?;
        let eos = self.eos.as_ref();
        for side in Side::both() {
            let uu = u.get(side);
            let o = out.get_mut(side);
            for i in 0..=g.n1 {
                for j in 0..g.n2 {
                    let v = state_at(uu, i, j);
                    // A0 = diag(rho_p / rho, rho, rho, 1, 1, 1).
                    let rho = eos.density(v[0], v[5]);
                    let diag = [eos.inv_rho_c2(v[0], v[5]), rho, rho, 1.0, 1.0, 1.0];
                    for c in 0..6 {
                        o[c][[i, j]] /= -diag[c];
                    }
                }
            }
        }
        Ok((out, dt_phi))
    }

    /// Largest characteristic speed bound `|u| + sqrt(c^2 + c_A^2)`.
    pub fn max_speed(&self, u: &Sided<StateField>) -> f64 {
        let g = &self.grid;
        let eos = self.eos.as_ref();
        let mut m = 0.0f64;
        for side in Side::both() {
            for i in 0..=g.n1 {
                for j in 0..g.n2 {
                    let v = state_at(u.get(side), i, j);
                    let rho = eos.density(v[0], v[5]);
                    let c2 = 1.0 / eos.density_dp(v[0], v[5]);
                    let ca2 = (v[3] * v[3] + v[4] * v[4]) / rho;
                    m = m.max(v[1].hypot(v[2]) + (c2 + ca2).sqrt());
                }
            }
        }
        m
    }
}

/// Space-time state from a closure over levels.
pub fn state_from_levels(st: &SpaceTimeGrid, f: impl Fn(usize) -> (Sided<StateField>, Array1<f64>)) -> SpaceTimeState {
    let mut out = SpaceTimeState::zeros(st);
    for k in 0..st.nt {
        let (u, phi) = f(k);
        out.u.set_slice(k, &u);
        out.phi.row_mut(k).assign(&phi);
    }
    out
}

/// Constant piecewise state on every level.
pub fn constant_state(st: &SpaceTimeGrid, plus: Vec6, minus: Vec6) -> SpaceTimeState {
    let g = st.grid;
    let fill = |v: Vec6| -> StateField { std::array::from_fn(|c| Array2::from_elem(g.shape(), v[c])) };
    state_from_levels(st, |_| (Sided::new(fill(plus), fill(minus)), Array1::zeros(g.n2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vsheet_core::IdealGas;

    fn op() -> (MhdOperator, SpaceTimeGrid) {
        let g = Grid::new(16, 16, 4.0, 2.0 * std::f64::consts::PI).unwrap();
        (MhdOperator::new(g, Arc::new(IdealGas::default())), SpaceTimeGrid::new(g, 0.5, 6).unwrap())
    }

    #[test]
    fn slope_without_normal_field_is_zero() {
        let p = Vec6::new(1.0, 0.3, 0.2, 0.0, 1.0, 0.0);
        let m = Vec6::new(1.0, 0.3, -0.2, 0.0, 0.7, 0.0);
        assert_eq!(front_slope(&p, &m).unwrap(), 0.0);
        assert_eq!(front_speed(&p, &m).unwrap(), 0.3);
    }

    #[test]
    fn slope_matches_direct_formula_and_cancels_normal_fields() {
        let p = Vec6::new(1.0, 0.0, 0.0, 1.0, 2.0, 0.0);
        let m = Vec6::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        let mu = front_slope(&p, &m).unwrap();
        assert!((mu - 0.4).abs() < 1e-15);
        let (hp, hm) = (p[3] - p[4] * mu, m[3] - m[4] * mu);
        assert!((hp * p[4] + hm * m[4]).abs() < 1e-15);
    }

    #[test]
    fn vanishing_tangential_field_has_no_slope() {
        let p = Vec6::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        assert!(front_slope(&p, &p).is_err());
    }

    #[test]
    fn constant_state_has_zero_residuals() {
        let (op, st) = op();
        let s = constant_state(&st, Vec6::new(1.0, 0.0, 0.2, 0.0, 1.0, 0.0), Vec6::new(1.0, 0.0, -0.2, 0.0, 1.0, 0.0));
        let (i, b) = op.evaluate(&st, &s).unwrap();
        assert!(i.max_abs() < 1e-14);
        assert!(b.max_abs() < 1e-14);
    }

    #[test]
    fn boundary_derivative_of_quadratic_rows_is_exact() {
        let (op, st) = op();
        let base = constant_state(&st, Vec6::new(1.0, 0.1, 0.2, 0.3, 1.0, 0.0), Vec6::new(1.2, 0.0, -0.2, 0.1, 0.8, 0.0));
        let mut dir = SpaceTimeState::zeros(&st);
        dir.u.fields.plus[4].fill(0.5);
        dir.u.fields.plus[3].fill(0.25);
        dir.phi = Array2::from_shape_fn((st.nt, st.grid.n2), |(k, j)| st.t(k) * (st.grid.x2(j)).sin());
        let (_, db) = op.derivative(&st, &base, &dir).unwrap();
        // d/ds [q+] = H+ . dH+ = 0.3 * 0.25 + 1.0 * 0.5.
        assert!(db.rows[2].iter().all(|v| (v - 0.575).abs() < 1e-13));
    }
}
