//! Compatible initial data: time jets of the Cauchy problem, the
//! compatibility conditions at the front, projection onto order-zero
//! compatible data, and the approximate solution with its forcing `F^a`.

use crate::operator::MhdOperator;
use crate::spacetime::{lin_slice, zero_slice, Interior, SpaceTimeGrid, SpaceTimeState};
use ndarray::Array1;
use serde::Serialize;
use vsheet_core::fd::fornberg_weights;
use vsheet_core::grid::state_at;
use vsheet_core::ramp::TimeCutoff;
use vsheet_core::symmetrizer::check_stability_vec;
use vsheet_core::{Error, Grid, PhysState, Result, Side, Sided, StateField, Vec6};
use vsheet_linear::LiftProfile;

/// Step in `s` of the nested differencing used for the jets.
pub const JET_STEP: f64 = 0.02;
/// Half-width of the jet stencil; nodes are `m JET_STEP`, `|m| <= JET_HALF_WIDTH`.
pub const JET_HALF_WIDTH: i32 = 4;
/// A jet term whose size exceeds `max_speed * pi / (2 h)` times the
/// previous one is growing at the grid scale.
pub const RESOLUTION_FRACTION: f64 = 0.5;
/// Jet terms below this multiple of `|U0|` are rounding noise.
pub const JET_NOISE_FLOOR: f64 = 1e-10;
/// Largest admissible `|phi0|`.
pub const FRONT_BOUND: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Sided<StateField>,
    pub phi0: Array1<f64>,
    /// Piecewise-constant state the data perturb.
    pub background: Sided<Vec6>,
}

impl InitialData {
    /// The background itself with a flat front.
    pub fn uniform(grid: &Grid, plus: Vec6, minus: Vec6) -> Self {
        let bg = Sided::new(plus, minus);
        let u0 = bg.map(|_, v| std::array::from_fn(|c| ndarray::Array2::from_elem(grid.shape(), v[c])));
        Self { u0, phi0: Array1::zeros(grid.n2), background: bg }
    }

    /// Hyperbolicity everywhere, stability at the front and `|phi0| < 1/2`.
    pub fn validate(&self, op: &MhdOperator, k_hyp: f64, k_stab: f64) -> Result<()> {
        let g = &op.grid;
        let eos = op.eos.as_ref();
        for side in Side::both() {
            for i in 0..=g.n1 {
                for j in 0..g.n2 {
                    PhysState::from_vec(&state_at(self.u0.get(side), i, j), side).ensure_admissible(eos, k_hyp)?;
                }
            }
        }
        for j in 0..g.n2 {
            let r = check_stability_vec(&state_at(&self.u0.plus, 0, j), &state_at(&self.u0.minus, 0, j), eos, k_stab);
            if !r.satisfied {
                return Err(Error::StabilityViolated { margin: r.margin, k: k_stab });
            }
        }
        let m = self.phi0.fold(0.0f64, |a, b| a.max(b.abs()));
        if m >= FRONT_BOUND {
            return Err(Error::ConstraintViolated { constraint: "front bound |phi0| < 1/2", residual: m });
        }
        Ok(())
    }
}

/// `U_j = dt^j U` and `phi_j = dt^j phi` at `t = 0`, `j = 0..=order`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeJet {
    pub u: Vec<Sided<StateField>>,
    pub phi: Vec<Array1<f64>>,
}

impl TimeJet {
    pub fn order(&self) -> usize {
        self.u.len() - 1
    }
}

fn slice_norm(grid: &Grid, u: &Sided<StateField>) -> f64 {
    Side::both().iter().flat_map(|&s| u.get(s).iter()).map(|f| grid.l2_sq(f)).sum::<f64>().sqrt()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Jet of the Cauchy problem to `order >= 1`: `U_{j+1}` and `phi_{j+1}` are
/// the `j`-th `s`-derivatives at 0 of the right-hand side along the Taylor
/// polynomial of degree `j`, by Fornberg differencing.
pub fn time_jet(op: &MhdOperator, data: &InitialData, order: usize) -> Result<TimeJet> {
    if order == 0 {
        return Err(Error::Domain("a time jet needs order >= 1".into()));
    }
    let g = &op.grid;
    let nodes: Vec<f64> = (-JET_HALF_WIDTH..=JET_HALF_WIDTH).map(|m| m as f64 * JET_STEP).collect();
    let weights = fornberg_weights(0.0, &nodes, order - 1);
    let mut jet = TimeJet { u: vec![data.u0.clone()], phi: vec![data.phi0.clone()] };
    let scale = slice_norm(g, &data.u0).max(1.0);
    let bound = op.max_speed(&data.u0) * std::f64::consts::PI * RESOLUTION_FRACTION / g.h1().min(g.h2());
    for j in 0..order {
        let mut du = zero_slice(g);
        let mut dphi = Array1::zeros(g.n2);
        for (&s, &w) in nodes.iter().zip(&weights[j]) {
            if j == 0 && s != 0.0 {
                continue;
            }
            let mut u = jet.u[0].clone();
            let mut phi = jet.phi[0].clone();
            for k in 1..=j {
                let c = s.powi(k as i32) / factorial(k);
                u = lin_slice(&u, 1.0, &jet.u[k], c);
                phi = phi + &jet.phi[k] * c;
            }
            let (r, rphi) = op.cauchy_rhs(&u, &phi)?;
            let w = if j == 0 { 1.0 } else { w };
            du = lin_slice(&du, 1.0, &r, w);
            dphi = dphi + rphi * w;
        }
        let (prev, next) = (slice_norm(g, &jet.u[j]), slice_norm(g, &du));
        if j >= 1 && next > JET_NOISE_FLOOR * scale && prev > JET_NOISE_FLOOR * scale && next > bound * prev {
            return Err(Error::Domain(format!(
                "time jet of order {} grows by {:.3e} per order (limit {bound:.3e}); the data are under-resolved",
                j + 1,
                next / prev
            )));
        }
        jet.u.push(du);
        jet.phi.push(dphi);
    }
    Ok(jet)
}

/// Largest violation of each compatibility condition at one order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompatOrder {
    pub order: usize,
    /// `phi_{j+1} - dt^j (u1 - u2 d2 phi)` on both sides.
    pub kinematic: f64,
    /// `dt^j [p + |H|^2 / 2]`.
    pub pressure: f64,
    /// `dt^j (H1 - H2 d2 phi)` on both sides.
    pub normal_field: f64,
}

impl CompatOrder {
    pub fn max(&self) -> f64 {
        self.kinematic.max(self.pressure).max(self.normal_field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatReport {
    pub orders: Vec<CompatOrder>,
}

impl CompatReport {
    pub fn max_violation(&self) -> f64 {
        self.orders.iter().fold(0.0, |m, o| m.max(o.max()))
    }

    /// Highest order up to which every violation is at most `tol`.
    pub fn compatible_order(&self, tol: f64) -> Option<usize> {
        self.orders.iter().take_while(|o| o.max() <= tol).last().map(|o| o.order)
    }
}

fn max_abs1(a: &Array1<f64>) -> f64 {
    a.fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Leibniz expansion of the compatibility conditions for `j = 0..=order`,
/// `order < jet.order()`.
pub fn check_compatibility(grid: &Grid, jet: &TimeJet, order: usize) -> CompatReport {
    let order = order.min(jet.order() - 1);
    let tr = |k: usize, side: Side, c: usize| jet.u[k].get(side)[c].row(0).to_owned();
    let d2: Vec<Array1<f64>> = jet.phi.iter().map(|p| grid.d2_boundary(p)).collect();
    let orders = (0..=order)
        .map(|j| {
            let mut kin = 0.0f64;
            let mut nf = 0.0f64;
            for side in Side::both() {
                let mut k = &jet.phi[j + 1] - &tr(j, side, 1);
                let mut n = tr(j, side, 3);
                for l in 0..=j {
                    let c = binomial(j, l);
                    k = k + &(&tr(j - l, side, 2) * &d2[l]) * c;
                    n = n - &(&tr(j - l, side, 4) * &d2[l]) * c;
                }
                kin = kin.max(max_abs1(&k));
                nf = nf.max(max_abs1(&n));
            }
            let mut q = &tr(j, Side::Plus, 0) - &tr(j, Side::Minus, 0);
            for l in 0..=j {
                let c = 0.5 * binomial(j, l);
                for side in Side::both() {
                    let hh = &tr(l, side, 3) * &tr(j - l, side, 3) + &tr(l, side, 4) * &tr(j - l, side, 4);
                    q = q + hh * (c * side.sign());
                }
            }
            CompatOrder { order: j, kinematic: kin, pressure: max_abs1(&q), normal_field: nf }
        })
        .collect();
    CompatReport { orders }
}

/// Nearest order-zero compatible data: the boundary values of `H1+-`,
/// `u1-` and `p-` are moved onto the constraints and the correction is
/// spread into the interior by the lift profile.
pub fn project_compatible(grid: &Grid, data: &InitialData) -> InitialData {
    let lift = LiftProfile::for_grid(grid);
    let ell: Vec<f64> = (0..=grid.n1).map(|i| lift.value(grid.x1(i))).collect();
    let d2 = grid.d2_boundary(&data.phi0);
    let mut out = data.clone();
    let shift = |f: &mut ndarray::Array2<f64>, j: usize, delta: f64| {
        for (i, &l) in ell.iter().enumerate() {
            f[[i, j]] += l * delta;
        }
    };
    for j in 0..grid.n2 {
        for side in Side::both() {
            let u = out.u0.get_mut(side);
            let delta = u[4][[0, j]] * d2[j] - u[3][[0, j]];
            shift(&mut u[3], j, delta);
        }
        let (up, um) = (state_at(&out.u0.plus, 0, j), state_at(&out.u0.minus, 0, j));
        let un_p = up[1] - up[2] * d2[j];
        let un_m = um[1] - um[2] * d2[j];
        let q = |v: &Vec6| v[0] + 0.5 * (v[3] * v[3] + v[4] * v[4]);
        let dq = q(&up) - q(&um);
        let m = &mut out.u0.minus;
        shift(&mut m[1], j, un_p - un_m);
        shift(&mut m[0], j, dq);
    }
    out
}

/// `U^a = U_bg + chi_T(t) sum_j (U_j - U_bg delta_j0) t^j / j!` and the same
/// polynomial for the front.
#[derive(Debug, Clone)]
pub struct ApproxSolution {
    pub grid: Grid,
    pub jet: TimeJet,
    pub background: Sided<Vec6>,
    pub cutoff: TimeCutoff,
}

impl ApproxSolution {
    fn poly<T: Clone>(&self, t: f64, terms: &[T], zero: T, add: impl Fn(&T, &T, f64) -> T) -> (T, T) {
        let chi = self.cutoff.value(t);
        let dchi = self.cutoff.derivative(t, 1);
        let mut p = zero.clone();
        let mut dp = zero;
        for (j, term) in terms.iter().enumerate() {
            p = add(&p, term, t.powi(j as i32) / factorial(j));
            if j > 0 {
                dp = add(&dp, term, t.powi(j as i32 - 1) / factorial(j - 1));
            }
        }
        let val = add(&p, &p, chi - 1.0);
        let dval = add(&add(&dp, &dp, chi - 1.0), &p, dchi);
        (val, dval)
    }

    fn perturbations(&self) -> Vec<Sided<StateField>> {
        let g = &self.grid;
        let bg = self.background.map(|_, v| -> StateField { std::array::from_fn(|c| ndarray::Array2::from_elem(g.shape(), v[c])) });
        let mut terms = self.jet.u.clone();
        terms[0] = lin_slice(&terms[0], 1.0, &bg, -1.0);
        terms
    }

    /// `U^a - U_bg` and its time derivative.
    pub fn tilde_at(&self, t: f64) -> (Sided<StateField>, Sided<StateField>) {
        let g = self.grid;
        self.poly(t, &self.perturbations(), zero_slice(&g), |a, b, c| lin_slice(a, 1.0, b, c))
    }

    /// `U^a` and `dt U^a`.
    pub fn u_at(&self, t: f64) -> (Sided<StateField>, Sided<StateField>) {
        let (u, du) = self.tilde_at(t);
        let u = Sided::from_fn(|s| std::array::from_fn(|c| &u.get(s)[c] + self.background.get(s)[c]));
        (u, du)
    }

    /// `phi^a` and `dt phi^a`.
    pub fn phi_at(&self, t: f64) -> (Array1<f64>, Array1<f64>) {
        self.poly(t, &self.jet.phi, Array1::zeros(self.grid.n2), |a, b, c| a + &(b * c))
    }

    /// `(U^a, phi^a)` on every level of `st`.
    pub fn on_grid(&self, st: &SpaceTimeGrid) -> SpaceTimeState {
        let mut s = SpaceTimeState::zeros(st);
        for k in 0..st.nt {
            s.u.set_slice(k, &self.u_at(st.t(k)).0);
            s.phi.row_mut(k).assign(&self.phi_at(st.t(k)).0);
        }
        s
    }

    /// `U^a - U_bg` on every level of `st`.
    pub fn tilde_on_grid(&self, st: &SpaceTimeGrid) -> SpaceTimeState {
        let mut s = self.on_grid(st);
        for k in 0..st.nt {
            s.u.set_slice(k, &self.tilde_at(st.t(k)).0);
        }
        s
    }
}

/// `F^a(t) = -L(U^a, Psi^a)` for `t > 0` with exact time derivatives of the
/// polynomial; zero for `t <= 0`.
pub fn forcing_fa(op: &MhdOperator, approx: &ApproxSolution, t: f64) -> Result<Sided<StateField>> {
    if t <= 0.0 {
        return Ok(zero_slice(&op.grid));
    }
    let (u, du) = approx.u_at(t);
    let (phi, dphi) = approx.phi_at(t);
    let l = op.interior_slice(&u, &du, &phi, &dphi)?;
    Ok(lin_slice(&l, -1.0, &l, 0.0))
}

/// `F^a = -L(U^a, Psi^a)` with the space-time differences of `st`, so that
/// the discrete problem around `U^a` is consistent.
pub fn discrete_forcing(op: &MhdOperator, approx: &ApproxSolution, st: &SpaceTimeGrid) -> Result<Interior> {
    let l = op.interior(st, &approx.on_grid(st))?;
    Ok(crate::spacetime::FieldSet::scale(&l, -1.0))
}

/// Sizes entering the smallness requirement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Smallness {
    pub u_tilde: f64,
    pub phi: f64,
    pub forcing: f64,
}

impl Smallness {
    pub fn total(&self) -> f64 {
        self.u_tilde + self.phi + self.forcing
    }
}

/// Approximate solution from a jet with a time cutoff at `t_max`; the sum of
/// `L2` norms of `U^a - U_bg`, `phi^a` and `F^a` over `st` must stay below
/// `delta`, and `U^a` must stay hyperbolic and stable on every level.
pub fn build_approximate(op: &MhdOperator, jet: TimeJet, background: Sided<Vec6>, t_max: f64, delta: f64, st: &SpaceTimeGrid) -> Result<(ApproxSolution, Smallness)> {
    if t_max <= 0.0 {
        return Err(Error::Domain(format!("cutoff time must be positive, got {t_max}")));
    }
    let approx = ApproxSolution { grid: op.grid, jet, background, cutoff: TimeCutoff { t_max } };
    let tilde = approx.tilde_on_grid(st);
    let fa = discrete_forcing(op, &approx, st)?;
    let small = Smallness { u_tilde: tilde.u.l2(st), phi: st.l2_sq2(&tilde.phi).sqrt(), forcing: fa.l2(st) };
    if small.total() > delta {
        return Err(Error::Domain(format!(
            "approximate solution has size {:.3e} > delta = {delta:.3e}; use a smaller T",
            small.total()
        )));
    }
    let eos = op.eos.as_ref();
    let g = &op.grid;
    for k in 0..st.nt {
        let (u, _) = approx.u_at(st.t(k));
        for side in Side::both() {
            for i in 0..=g.n1 {
                for j in 0..g.n2 {
                    PhysState::from_vec(&state_at(u.get(side), i, j), side).ensure_admissible(eos, 0.0)?;
                }
            }
        }
        for j in 0..g.n2 {
            let r = check_stability_vec(&state_at(&u.plus, 0, j), &state_at(&u.minus, 0, j), eos, 0.0);
            if !r.satisfied {
                return Err(Error::StabilityViolated { margin: r.margin, k: 0.0 });
            }
        }
    }
    Ok((approx, small))
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Slope of `|F^a(t)|_{L2}` over `count` log-spaced times in `[t_lo, t_hi]`.
pub fn forcing_temporal_order(op: &MhdOperator, approx: &ApproxSolution, t_lo: f64, t_hi: f64, count: usize) -> Result<f64> {
    let ts: Vec<f64> = (0..count).map(|k| t_lo * (t_hi / t_lo).powf(k as f64 / (count - 1) as f64)).collect();
    let ys = ts.iter().map(|&t| Ok(slice_norm(&op.grid, &forcing_fa(op, approx, t)?))).collect::<Result<Vec<f64>>>()?;
    Ok(log_log_slope(&ts, &ys))
}

/// Smooth compactly supported bump `exp(-1/(1-r^2))` for `|r| < 1`.
pub fn bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

/// Manufactured data: the background plus `amplitude` times a bump in `x1`
/// centred at `centre` with half-width `radius`, modulated in `x2`, on `p`,
/// `u1`, `u2` and `S` (the magnetic field is untouched, so it stays
/// divergence free and the data are compatible to every order).
pub fn bump_data(grid: &Grid, background: Sided<Vec6>, amplitude: f64, centre: f64, radius: f64) -> InitialData {
    let profile = |side: Side, c: usize, x1: f64, x2: f64| -> f64 {
        let shape = bump((x1 - centre) / radius) * (x2.cos() + 0.5 * (2.0 * x2).sin());
        let weight = [1.0, 0.7, -0.5, 0.0, 0.0, 0.3][c] * if side == Side::Plus { 1.0 } else { -0.8 };
        background.get(side)[c] + amplitude * weight * shape
    };
    let u0 = Sided::from_fn(|side| std::array::from_fn(|c| grid.from_fn(|x1, x2| profile(side, c, x1, x2))));
    InitialData { u0, phi0: Array1::zeros(grid.n2), background }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;
    use vsheet_core::IdealGas;

    fn setup(n: usize) -> MhdOperator {
        let g = Grid::new(n, n, 4.0, 2.0 * std::f64::consts::PI).unwrap();
        MhdOperator::new(g, Arc::new(IdealGas::default()))
    }

    fn bg() -> Sided<Vec6> {
        Sided::new(Vec6::new(1.0, 0.0, 0.2, 0.0, 1.0, 0.0), Vec6::new(1.0, 0.0, -0.2, 0.0, 1.0, 0.0))
    }

    #[test]
    fn uniform_data_have_a_zero_jet() {
        let op = setup(16);
        let jet = time_jet(&op, &InitialData::uniform(&op.grid, bg().plus, bg().minus), 3).unwrap();
        for j in 1..=3 {
            assert!(slice_norm(&op.grid, &jet.u[j]) < 1e-12);
            assert!(max_abs1(&jet.phi[j]) < 1e-12);
        }
    }

    #[test]
    fn injected_pressure_jump_is_reported_exactly() {
        let op = setup(16);
        let mut d = InitialData::uniform(&op.grid, bg().plus, bg().minus);
        d.u0.plus[0] += 0.01;
        let jet = time_jet(&op, &d, 1).unwrap();
        let r = check_compatibility(&op.grid, &jet, 0);
        assert!((r.orders[0].pressure - 0.01).abs() < 1e-15);
    }

    #[test]
    fn first_front_derivative_is_the_normal_velocity() {
        let op = setup(16);
        let mut d = InitialData::uniform(&op.grid, bg().plus, bg().minus);
        let g = op.grid;
        d.phi0 = g.boundary_from_fn(|x2| 0.05 * x2.sin());
        let d2 = g.d2_boundary(&d.phi0);
        for side in Side::both() {
            let u = d.u0.get_mut(side);
            for j in 0..g.n2 {
                for i in 0..=g.n1 {
                    u[3][[i, j]] = u[4][[i, j]] * d2[j];
                    u[1][[i, j]] = 0.03 + u[2][[i, j]] * d2[j];
                }
            }
        }
        let jet = time_jet(&op, &d, 1).unwrap();
        for j in 0..g.n2 {
            assert!((jet.phi[1][j] - 0.03).abs() < 1e-13);
        }
        assert!(check_compatibility(&g, &jet, 0).orders[0].max() < 1e-13);
    }
}
