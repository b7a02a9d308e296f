//! Reduction to homogeneous boundary conditions: lift the boundary data
//! into the interior and move the residual of the lift into the forcing.
//!
//! The lift is `b(t, x2) l(x1)` with `l = 1 - smoothstep(x1 / width)`, the
//! tangential field of the lift is zero, and the total-pressure jump is
//! split evenly between the two sides.

use crate::basic::BasicState;
use crate::effective::assemble_snapshot;
use crate::solver::{Forcing, SampledForcing};
use ndarray::{Array1, Array2};
use vsheet_core::grid::zero_state_field;
use vsheet_core::ramp::smoothstep;
use vsheet_core::{Error, Grid, Mat6, Result, Side, Sided, StateField, Vec6};

/// Boundary data sampled at `t0 + k dt`: kinematic rows `g1+-`, the
/// pressure-jump row `g2`, and the normal-field defect `g3+-`.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub t0: f64,
    pub dt: f64,
    pub g1: Vec<Sided<Array1<f64>>>,
    pub g2: Vec<Array1<f64>>,
    pub g3: Vec<Sided<Array1<f64>>>,
}

impl BoundaryData {
    pub fn zeros(grid: &Grid, t0: f64, dt: f64, nt: usize) -> Self {
        let z = || Array1::zeros(grid.n2);
        Self {
            t0,
            dt,
            g1: (0..nt).map(|_| Sided::new(z(), z())).collect(),
            g2: (0..nt).map(|_| z()).collect(),
            g3: (0..nt).map(|_| Sided::new(z(), z())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.g2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g2.is_empty()
    }

    /// Discrete `L^2(Gamma_T)` norm of all rows.
    pub fn l2(&self, grid: &Grid) -> f64 {
        let mut s = 0.0;
        for k in 0..self.len() {
            let w = if k == 0 || k + 1 == self.len() { 0.5 } else { 1.0 } * self.dt;
            for side in Side::both() {
                s += w * grid.boundary_inner(self.g1[k].get(side), self.g1[k].get(side));
                s += w * grid.boundary_inner(self.g3[k].get(side), self.g3[k].get(side));
            }
            s += w * grid.boundary_inner(&self.g2[k], &self.g2[k]);
        }
        s.sqrt()
    }
}

/// Lift profile in `x1`.
#[derive(Debug, Clone, Copy)]
pub struct LiftProfile {
    pub width: f64,
}

impl LiftProfile {
    pub fn for_grid(grid: &Grid) -> Self {
        Self { width: (0.5 * grid.l1).min(1.0) }
    }

    pub fn value(&self, x1: f64) -> f64 {
        1.0 - smoothstep(x1 / self.width)
    }
}

#[derive(Debug, Clone)]
pub struct Homogenized {
    /// Lifted `U~` at the sample times.
    pub lift: Vec<Sided<StateField>>,
    /// `F = f - L'_e U~` at the sample times.
    pub forcing: SampledForcing,
}

/// Build `U~` with `u~_N|0 = -g1`, `[q~]|0 = g2`, `H~_N|0 = -g3` and return
/// `F = f - L'_e U~`.
pub fn homogenize_boundary(basic: &BasicState, data: &BoundaryData, f: &dyn Forcing, profile: LiftProfile) -> Result<Homogenized> {
    let grid = basic.grid;
    let nt = data.len();
    if nt < 3 {
        return Err(Error::Domain("boundary data need at least three samples".into()));
    }
    let ell: Vec<f64> = (0..=grid.n1).map(|i| profile.value(grid.x1(i))).collect();
    let mut lift = Vec::with_capacity(nt);
    for k in 0..nt {
        let t = data.t0 + k as f64 * data.dt;
        let snap = basic.at(t);
        lift.push(Sided::from_fn(|side| {
            let sign = side.sign();
            let u = snap.u.get(side);
            let (g1, g3) = (data.g1[k].get(side), data.g3[k].get(side));
            let mut out = zero_state_field(&grid);
            for i in 0..=grid.n1 {
                for j in 0..grid.n2 {
                    let h1 = -g3[j] * ell[i];
                    // q~ = p~ + H^ . H~ with H~ = (h1, 0).
                    out[0][[i, j]] = sign * 0.5 * data.g2[k][j] * ell[i] - u[3][[i, j]] * h1;
                    out[1][[i, j]] = -g1[j] * ell[i];
                    out[3][[i, j]] = h1;
                }
            }
            out
        }));
    }
    // Residual of the lift in the characteristic variables, mapped back.
    let mut forcing = Vec::with_capacity(nt);
    let mut v_lift: Vec<Sided<StateField>> = Vec::with_capacity(nt);
    let mut ops = Vec::with_capacity(nt);
    for (k, lk) in lift.iter().enumerate() {
        let t = data.t0 + k as f64 * data.dt;
        let snap = basic.at(t);
        let geo = snap.geometry(&grid);
        let op = assemble_snapshot(&grid, basic.eos.as_ref(), &snap, &geo, None, f64::INFINITY)?;
        v_lift.push(map_points(&grid, lk, |side, i, j, u| {
            let jm = op.sides.get(side).j.at(i, j);
            jm.try_inverse().expect("J is unit upper triangular") * u
        }));
        ops.push(op);
    }
    for k in 0..nt {
        let t = data.t0 + k as f64 * data.dt;
        let op = &ops[k];
        let dtv = time_derivative(&v_lift, k, data.dt);
        let fk = f.eval(&grid, t);
        let vk = &v_lift[k];
        let d1: Sided<StateField> = Sided::from_fn(|s| std::array::from_fn(|c| grid.d1(&vk.get(s)[c])));
        let d2: Sided<StateField> = Sided::from_fn(|s| std::array::from_fn(|c| grid.d2(&vk.get(s)[c])));
        let out = map_points(&grid, vk, |side, i, j, v| {
            let c = op.sides.get(side);
            let at = |f: &StateField| Vec6::from_fn(|r, _| f[r][[i, j]]);
            let lv = c.a[0].at(i, j) * at(dtv.get(side)) + c.a[1].at(i, j) * at(d1.get(side)) + c.a[2].at(i, j) * at(d2.get(side)) + c.a[3].at(i, j) * v;
            let jt_inv: Mat6 = c.j.at(i, j).transpose().try_inverse().expect("J is unit upper triangular");
            let base = fk.as_ref().map_or(Vec6::zeros(), |f| at(f.get(side)));
            base - jt_inv * lv
        });
        forcing.push(out);
    }
    Ok(Homogenized { lift, forcing: SampledForcing { t0: data.t0, dt: data.dt, data: forcing } })
}

fn map_points(grid: &Grid, f: &Sided<StateField>, g: impl Fn(Side, usize, usize, Vec6) -> Vec6) -> Sided<StateField> {
    Sided::from_fn(|side| {
        let src = f.get(side);
        let mut out = zero_state_field(grid);
        for i in 0..=grid.n1 {
            for j in 0..grid.n2 {
                let v = g(side, i, j, Vec6::from_fn(|c, _| src[c][[i, j]]));
                for c in 0..6 {
                    out[c][[i, j]] = v[c];
                }
            }
        }
        out
    })
}

/// Second-order time derivative of a sampled field, one-sided at the ends.
fn time_derivative(v: &[Sided<StateField>], k: usize, dt: f64) -> Sided<StateField> {
    let n = v.len();
    let comb = |w: [(usize, f64); 3]| -> Sided<StateField> {
        Sided::from_fn(|s| {
            std::array::from_fn(|c| {
                let mut acc: Array2<f64> = Array2::zeros(v[0].get(s)[c].raw_dim());
                for (idx, wt) in w {
                    acc.scaled_add(wt / dt, &v[idx].get(s)[c]);
                }
                acc
            })
        })
    };
    if k == 0 {
        comb([(0, -1.5), (1, 2.0), (2, -0.5)])
    } else if k + 1 == n {
        comb([(n - 1, 1.5), (n - 2, -2.0), (n - 3, 0.5)])
    } else {
        comb([(k - 1, -0.5), (k, 0.0), (k + 1, 0.5)])
    }
}
