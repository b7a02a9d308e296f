//! Magnetic constraints of the linearized problem: monitors along a
//! trajectory and the transport equations that carry their defects.

use crate::basic::{BasicState, BoundaryTraces};
use crate::solver::{Forcing, Trajectory};
use ndarray::{Array1, Array2};
use serde::Serialize;
use vsheet_core::geometry::transformed_vectors;
use vsheet_core::grid::state_at;
use vsheet_core::{Grid, Result, Side, Sided};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintSample {
    pub t: f64,
    /// `||div h'||_{L^2}` over both sides.
    pub divergence: f64,
    /// `||d1 H'_n||_{L^2} + ||d2(d1 Phi H'_2)||_{L^2}`, the size of the two
    /// terms that cancel in the divergence.
    pub divergence_scale: f64,
    /// `||H2^ d2 phi - H'_N -+ phi d1 H^_N||_{L^2(Gamma)}` over both sides.
    pub boundary: f64,
    /// Size of the individual boundary terms.
    pub boundary_scale: f64,
}

impl ConstraintSample {
    pub fn relative_divergence(&self) -> f64 {
        ratio(self.divergence, self.divergence_scale)
    }

    pub fn relative_boundary(&self) -> f64 {
        ratio(self.boundary, self.boundary_scale)
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Relative residual below which a constraint counts as exact.
pub const ROUNDING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintSeries {
    pub samples: Vec<ConstraintSample>,
}

impl ConstraintSeries {
    /// Largest relative residual of either constraint over the run divided by
    /// its value at the first stored time with a nonzero solution. Both are
    /// floored at [`ROUNDING_FLOOR`] so a constraint kept to rounding error
    /// reports 1.
    pub fn growth_factor(&self) -> f64 {
        let first = self.samples.iter().find(|s| s.divergence_scale > 0.0 || s.boundary_scale > 0.0);
        let Some(first) = first else { return 1.0 };
        let floor = |x: f64| x.max(ROUNDING_FLOOR);
        let d0 = floor(first.relative_divergence());
        let b0 = floor(first.relative_boundary());
        let dmax = self.samples.iter().map(|s| floor(s.relative_divergence())).fold(0.0, f64::max);
        let bmax = self.samples.iter().map(|s| floor(s.relative_boundary())).fold(0.0, f64::max);
        (dmax / d0).max(bmax / b0)
    }
}

/// `L^2` norm squared over `x1 <= x1_max`.
fn l2_sq_upto(grid: &Grid, f: &Array2<f64>, x1_max: f64) -> f64 {
    (0..=grid.n1).take_while(|&i| grid.x1(i) <= x1_max + 1e-12).map(|i| grid.weight(i) * f.row(i).dot(&f.row(i))).sum()
}

/// Divergence and boundary constraint residuals at every stored time. The
/// divergence is measured ahead of the sponge layer, which damps the two
/// field components independently and so does not preserve it.
pub fn constraint_monitor(basic: &BasicState, traj: &Trajectory) -> Result<ConstraintSeries> {
    let grid = traj.grid;
    let x1_max = traj.config.sponge_start * grid.l1;
    let mut samples = Vec::with_capacity(traj.times.len());
    for (k, &t) in traj.times.iter().enumerate() {
        let snap = basic.at(t);
        let geo = snap.geometry(&grid);
        let tr = BoundaryTraces::of(&grid, &snap, &geo);
        let state = &traj.states[k];
        let d2phi = grid.d2_boundary(&state.phi);
        let mut s = ConstraintSample { t, divergence: 0.0, divergence_scale: 0.0, boundary: 0.0, boundary_scale: 0.0 };
        let (mut div_sq, mut a_sq, mut b_sq, mut bd_sq, mut bs_sq) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for side in Side::both() {
            let v = state.v.get(side);
            let d1_phi = geo.lifted.d1_phi.get(side);
            let a = grid.d1(&v[3]);
            let b = grid.d2(&(&v[4] * d1_phi));
            div_sq += l2_sq_upto(&grid, &(&a + &b), x1_max);
            a_sq += l2_sq_upto(&grid, &a, x1_max);
            b_sq += l2_sq_upto(&grid, &b, x1_max);
            let sign = side.sign();
            let h2 = tr.h2.get(side);
            let d1_hn = tr.d1_hn.get(side);
            let t1 = Array1::from_shape_fn(grid.n2, |j| h2[j] * d2phi[j]);
            let t2 = v[3].row(0).to_owned();
            let t3 = Array1::from_shape_fn(grid.n2, |j| sign * state.phi[j] * d1_hn[j]);
            let r = &t1 - &t2 - &t3;
            bd_sq += grid.boundary_inner(&r, &r);
            bs_sq += [t1, t2, t3].iter().map(|x| grid.boundary_inner(x, x).sqrt()).sum::<f64>().powi(2);
        }
        s.divergence = div_sq.sqrt();
        s.divergence_scale = a_sq.sqrt() + b_sq.sqrt();
        s.boundary = bd_sq.sqrt();
        s.boundary_scale = bs_sq.sqrt();
        samples.push(s);
    }
    Ok(ConstraintSeries { samples })
}

/// Shu-Osher form of SSP-RK3: `(weight of the new stage, stage time fraction)`.
const RK3: [(f64, f64); 3] = [(1.0, 0.0), (0.25, 1.0), (2.0 / 3.0, 0.5)];

/// `dt g + a dx2 g + (dx2 a) g = s` on the periodic line, SSP-RK3 from
/// `g = 0` at `t = 0`. Returns `g` at `t_end`.
pub fn solve_line_transport(
    grid: &Grid,
    speed: &dyn Fn(f64, f64) -> f64,
    source: &dyn Fn(f64, f64) -> f64,
    t_end: f64,
    steps: usize,
) -> Array1<f64> {
    let dt = t_end / steps as f64;
    let rhs = |g: &Array1<f64>, t: f64| -> Array1<f64> {
        let a = grid.boundary_from_fn(|x| speed(t, x));
        let flux = &a * g;
        // Conservative form: dt g + dx2 (a g) = s.
        let div = grid.d2_boundary(&flux);
        grid.boundary_from_fn(|x| source(t, x)) - div
    };
    let mut g = Array1::zeros(grid.n2);
    for n in 0..steps {
        let t = n as f64 * dt;
        let mut stage = g.clone();
        for &(a, c) in &RK3 {
            let k = rhs(&stage, t + c * dt);
            stage = &g * (1.0 - a) + (&stage + &(k * dt)) * a;
        }
        g = stage;
    }
    g
}

/// Defects `(R+-, g3+-)` at `t_end` driven by the forcing and by `g1`.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub t: f64,
    pub r: Sided<Array2<f64>>,
    pub g3: Sided<Array1<f64>>,
}

/// Integrate the divergence-defect and boundary-defect transport equations
/// along the basic flow.
pub fn solve_constraint_transport(
    basic: &BasicState,
    forcing: &dyn Forcing,
    g1: &dyn Fn(Side, f64, f64) -> f64,
    t_end: f64,
    steps: usize,
) -> Result<TransportSolution> {
    let grid = basic.grid;
    let dt = t_end / steps as f64;
    // Coefficients at time t: velocity (a1, a2), zero-order term, source.
    struct Coeffs {
        a1: Sided<Array2<f64>>,
        a2: Sided<Array2<f64>>,
        c: Sided<Array2<f64>>,
        src: Sided<Array2<f64>>,
        bsrc: Sided<Array1<f64>>,
        u2: Sided<Array1<f64>>,
    }
    let coeffs = |t: f64| -> Result<Coeffs> {
        let snap = basic.at(t);
        let geo = snap.geometry(&grid);
        let l = &geo.lifted;
        let f = forcing.eval(&grid, t);
        let mut out = Coeffs {
            a1: Sided::new(grid.zeros(), grid.zeros()),
            a2: Sided::new(grid.zeros(), grid.zeros()),
            c: Sided::new(grid.zeros(), grid.zeros()),
            src: Sided::new(grid.zeros(), grid.zeros()),
            bsrc: Sided::new(Array1::zeros(grid.n2), Array1::zeros(grid.n2)),
            u2: Sided::new(Array1::zeros(grid.n2), Array1::zeros(grid.n2)),
        };
        for side in Side::both() {
            let u = snap.u.get(side);
            let d1p = l.d1_phi.get(side);
            let mut un = grid.zeros();
            let mut v2 = grid.zeros();
            let mut fn_ = grid.zeros();
            // f_h = (f_n, d1 Phi f5), matching h' = (H'_n, d1 Phi H'_2).
            let mut f5 = grid.zeros();
            for i in 0..=grid.n1 {
                for j in 0..grid.n2 {
                    let tv = transformed_vectors(&state_at(u, i, j), l.dt_psi[[i, j]], l.d2_psi[[i, j]], d1p[[i, j]]);
                    un[[i, j]] = tv.u_n;
                    v2[[i, j]] = u[2][[i, j]] * d1p[[i, j]];
                    out.a1.get_mut(side)[[i, j]] = (tv.u_n - l.dt_psi[[i, j]]) / d1p[[i, j]];
                    out.a2.get_mut(side)[[i, j]] = u[2][[i, j]];
                    if let Some(f) = &f {
                        let fs = f.get(side);
                        fn_[[i, j]] = fs[3][[i, j]] - fs[4][[i, j]] * l.d2_psi[[i, j]];
                        f5[[i, j]] = fs[4][[i, j]] * d1p[[i, j]];
                    }
                }
            }
            let div_v = grid.d1(&un) + grid.d2(&v2);
            let div_f = grid.d1(&fn_) + grid.d2(&f5);
            *out.c.get_mut(side) = &div_v / d1p;
            *out.src.get_mut(side) = &div_f / d1p;
            let h2 = Array1::from_shape_fn(grid.n2, |j| u[4][[0, j]]);
            let h2g1 = Array1::from_shape_fn(grid.n2, |j| h2[j] * g1(side, t, grid.x2(j)));
            *out.bsrc.get_mut(side) = grid.d2_boundary(&h2g1) - fn_.row(0);
            *out.u2.get_mut(side) = Array1::from_shape_fn(grid.n2, |j| u[2][[0, j]]);
        }
        Ok(out)
    };
    let rhs = |r: &Sided<Array2<f64>>, g: &Sided<Array1<f64>>, co: &Coeffs| -> (Sided<Array2<f64>>, Sided<Array1<f64>>) {
        let dr = Sided::from_fn(|s| {
            let rs = r.get(s);
            let mut out = co.src.get(s) - &(co.a1.get(s) * &grid.d1(rs)) - &(co.a2.get(s) * &grid.d2(rs)) - &(co.c.get(s) * rs);
            // Zero inflow at the far boundary; x1 = 0 is characteristic.
            let n = grid.n1;
            for j in 0..grid.n2 {
                if co.a1.get(s)[[n, j]] < 0.0 {
                    out[[n, j]] = -rs[[n, j]] / dt;
                }
            }
            out
        });
        let dg = Sided::from_fn(|s| {
            let flux = co.u2.get(s) * g.get(s);
            co.bsrc.get(s) - &grid.d2_boundary(&flux)
        });
        (dr, dg)
    };
    let mut r = Sided::new(grid.zeros(), grid.zeros());
    let mut g = Sided::new(Array1::zeros(grid.n2), Array1::zeros(grid.n2));
    for n in 0..steps {
        let t = n as f64 * dt;
        let (mut rs, mut gs) = (r.clone(), g.clone());
        for &(a, c) in &RK3 {
            let co = coeffs(t + c * dt)?;
            let (dr, dg) = rhs(&rs, &gs, &co);
            rs = Sided::from_fn(|s| r.get(s) * (1.0 - a) + (rs.get(s) + &(dr.get(s) * dt)) * a);
            gs = Sided::from_fn(|s| g.get(s) * (1.0 - a) + (gs.get(s) + &(dg.get(s) * dt)) * a);
        }
        r = rs;
        g = gs;
    }
    Ok(TransportSolution { t: t_end, r, g3: g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::ZeroForcing;
    use std::sync::Arc;
    use vsheet_core::{IdealGas, Vec6};

    /// Characteristic oracle: follow `dX/ds = a(X)` backwards from `x` to time
    /// 0, then integrate `dg/ds = s - a'(X) g` forward with RK4.
    fn characteristics(a: impl Fn(f64) -> f64, da: impl Fn(f64) -> f64, src: impl Fn(f64, f64) -> f64, t: f64, x: f64) -> f64 {
        let n = 4000;
        let h = t / n as f64;
        let mut xs = x;
        for _ in 0..n {
            let k1 = a(xs);
            let k2 = a(xs - 0.5 * h * k1);
            let k3 = a(xs - 0.5 * h * k2);
            let k4 = a(xs - h * k3);
            xs -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let f = |s: f64, (x, g): (f64, f64)| (a(x), src(s, x) - da(x) * g);
        let mut y = (xs, 0.0);
        for k in 0..n {
            let s = k as f64 * h;
            let k1 = f(s, y);
            let k2 = f(s + 0.5 * h, (y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1));
            let k3 = f(s + 0.5 * h, (y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1));
            let k4 = f(s + h, (y.0 + h * k3.0, y.1 + h * k3.1));
            y = (y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0), y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1));
        }
        y.1
    }

    #[test]
    fn line_transport_matches_characteristics() {
        let a = |x: f64| 0.3 + 0.1 * x.sin();
        let da = |x: f64| 0.1 * x.cos();
        let src = |t: f64, x: f64| t * (2.0 * x).cos() + (x - 0.5 * t).sin();
        let t_end = 1.0;
        let mut errs = Vec::new();
        for n in [32, 64] {
            let g = Grid::new(8, n, 1.0, 2.0 * std::f64::consts::PI).unwrap();
            let steps = n;
            let sol = solve_line_transport(&g, &|_, x| a(x), &src, t_end, steps);
            let err = (0..n).map(|j| (sol[j] - characteristics(a, da, src, t_end, g.x2(j))).abs()).fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[1] < 1e-4, "{errs:?}");
        assert!(errs[0] / errs[1] > 4.0, "{errs:?}");
    }

    #[test]
    fn zero_sources_give_zero_defects() {
        let g = Grid::new(16, 16, 4.0, 2.0 * std::f64::consts::PI).unwrap();
        let b = BasicState::constant(g, Arc::new(IdealGas::default()), Vec6::new(1.0, 0.0, 0.2, 0.0, 1.0, 0.0), Vec6::new(1.0, 0.0, -0.2, 0.0, 1.0, 0.0));
        let sol = solve_constraint_transport(&b, &ZeroForcing, &|_, _, _| 0.0, 0.5, 10).unwrap();
        for s in Side::both() {
            assert!(sol.r.get(s).iter().all(|&v| v == 0.0));
            assert!(sol.g3.get(s).iter().all(|&v| v == 0.0));
        }
    }
}
