//! Time integration of the effective problem in the characteristic
//! variables with the front `phi` co-evolved.
//!
//! Interior: fourth-order differences, sixth-order Kreiss-Oliger dissipation,
//! SSP-RK3. Boundary `x1 = 0`: after every stage the one incoming
//! characteristic amplitude per side is reset so that the pressure-jump row
//! and the difference of the two kinematic rows hold; `phi` follows the
//! kinematic row of the `+` side. Far boundary: incoming amplitudes are set to
//! zero behind a sponge layer.

use crate::basic::{BasicGeometry, BasicSnapshot, BasicState, BoundaryTraces};
use crate::effective::{assemble_snapshot, characteristic_pencil, max_speeds, EffectiveOperator, BOUNDARY_STRUCTURE_TOLERANCE};
use ndarray::{Array1, Array2};
use serde::Serialize;
use std::sync::{Arc, Mutex};
use vsheet_core::grid::zero_state_field;
use vsheet_core::ramp::smoothstep;
use vsheet_core::{Error, Grid, Result, Side, Sided, StateField, Vec6};

/// Unknowns of the effective problem: `V+-` and the front.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearState {
    pub v: Sided<StateField>,
    pub phi: Array1<f64>,
}

impl LinearState {
    pub fn zeros(grid: &Grid) -> Self {
        Self { v: Sided::new(zero_state_field(grid), zero_state_field(grid)), phi: Array1::zeros(grid.n2) }
    }

    fn axpy(&self, a: f64, other: &Self, b: f64) -> Self {
        let comb = |x: &StateField, y: &StateField| -> StateField { std::array::from_fn(|k| &x[k] * a + &y[k] * b) };
        Self {
            v: Sided::new(comb(&self.v.plus, &other.v.plus), comb(&self.v.minus, &other.v.minus)),
            phi: &self.phi * a + &other.phi * b,
        }
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = self.phi.fold(0.0f64, |a, b| a.max(b.abs()));
        for side in Side::both() {
            for f in self.v.get(side) {
                m = m.max(f.fold(0.0f64, |a, b| a.max(b.abs())));
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.phi.iter().all(|v| v.is_finite())
            && Side::both().iter().all(|&s| self.v.get(s).iter().all(|f| f.iter().all(|v| v.is_finite())))
    }
}

/// Interior source of the `U'` system, per side and component.
pub trait Forcing: Sync {
    /// `None` stands for zero forcing at `t`.
    fn eval(&self, grid: &Grid, t: f64) -> Option<Sided<StateField>>;
}

pub struct ZeroForcing;

impl Forcing for ZeroForcing {
    fn eval(&self, _grid: &Grid, _t: f64) -> Option<Sided<StateField>> {
        None
    }
}

/// Forcing from a pointwise closure `(side, t, x1, x2) -> f`.
pub struct FnForcing<F: Fn(Side, f64, f64, f64) -> Vec6 + Sync> {
    pub f: F,
}

impl<F: Fn(Side, f64, f64, f64) -> Vec6 + Sync> Forcing for FnForcing<F> {
    fn eval(&self, grid: &Grid, t: f64) -> Option<Sided<StateField>> {
        Some(Sided::from_fn(|side| {
            let mut out = zero_state_field(grid);
            for i in 0..=grid.n1 {
                for j in 0..grid.n2 {
                    let v = (self.f)(side, t, grid.x1(i), grid.x2(j));
                    for k in 0..6 {
                        out[k][[i, j]] = v[k];
                    }
                }
            }
            out
        }))
    }
}

/// Forcing sampled at uniform times, linearly interpolated and zero outside.
#[derive(Debug, Clone)]
pub struct SampledForcing {
    pub t0: f64,
    pub dt: f64,
    pub data: Vec<Sided<StateField>>,
}

impl Forcing for SampledForcing {
    fn eval(&self, _grid: &Grid, t: f64) -> Option<Sided<StateField>> {
        let n = self.data.len();
        let x = (t - self.t0) / self.dt;
        if n == 0 || x < 0.0 || x > (n - 1) as f64 {
            return None;
        }
        let k = (x.floor() as usize).min(n.saturating_sub(2));
        if n == 1 {
            return Some(self.data[0].clone());
        }
        let w = x - k as f64;
        let (a, b) = (&self.data[k], &self.data[k + 1]);
        Some(Sided::from_fn(|s| std::array::from_fn(|c| &a.get(s)[c] * (1.0 - w) + &b.get(s)[c] * w)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub cfl: f64,
    /// Kreiss-Oliger coefficient relative to the largest characteristic speed.
    pub dissipation: f64,
    /// Sponge starts at this fraction of `L1`.
    pub sponge_start: f64,
    /// Peak sponge rate.
    pub sponge_strength: f64,
    pub t_end: f64,
    /// Interval between stored snapshots; the step is adjusted to divide it.
    pub snapshot_dt: f64,
    /// Optional fixed step, checked against the CFL limit.
    pub dt: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { cfl: 0.4, dissipation: 0.1, sponge_start: 0.75, sponge_strength: 4.0, t_end: 1.0, snapshot_dt: 0.05, dt: None }
    }
}

impl SolverConfig {
    pub fn sponge(&self, grid: &Grid, x1: f64) -> f64 {
        let start = self.sponge_start * grid.l1;
        if x1 <= start {
            return 0.0;
        }
        self.sponge_strength * smoothstep((x1 - start) / (grid.l1 - start))
    }
}

/// Stored history of a run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub config: SolverConfig,
    pub dt: f64,
    /// Kreiss-Oliger rate actually applied.
    pub dissipation_rate: f64,
    pub steps: usize,
    pub times: Vec<f64>,
    pub states: Vec<LinearState>,
    /// Semi-discrete time derivatives at the stored times.
    pub rates: Vec<LinearState>,
    pub forcing: Vec<Option<Sided<StateField>>>,
}

impl Trajectory {
    pub fn snapshot_dt(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            self.config.snapshot_dt
        }
    }
}

/// Boundary data derived from one assembled operator.
#[derive(Debug, Clone)]
struct BoundaryData {
    traces: BoundaryTraces,
    /// Incoming eigenvector at `x1 = 0`, per side and `x2` node.
    incoming: Sided<Vec<Vec6>>,
    /// `A0`-orthonormal incoming eigenvectors at `x1 = L1`.
    far_incoming: Sided<Vec<Vec<(Vec6, Vec6)>>>,
}

#[derive(Clone)]
struct Frame {
    op: EffectiveOperator,
    bd: BoundaryData,
}

pub struct LinearSolver<'a> {
    pub basic: &'a BasicState,
    pub config: SolverConfig,
    stationary: Option<Arc<Frame>>,
    /// Frames of a time-dependent state at the most recent stage times.
    recent: Mutex<Vec<(f64, Arc<Frame>)>>,
    speeds: [f64; 2],
}

/// Distinct stage times of one SSP-RK3 step.
const FRAME_CACHE: usize = 4;

fn build_frame(grid: &Grid, basic: &BasicState, snap: &BasicSnapshot, geo: &BasicGeometry) -> Result<Frame> {
    let op = assemble_snapshot(grid, basic.eos.as_ref(), snap, geo, None, BOUNDARY_STRUCTURE_TOLERANCE)?;
    let traces = BoundaryTraces::of(grid, snap, geo);
    let mut incoming = Sided::new(Vec::new(), Vec::new());
    let mut far = Sided::new(Vec::new(), Vec::new());
    for side in Side::both() {
        let c = op.sides.get(side);
        for j in 0..grid.n2 {
            let (ev, vecs) = characteristic_pencil(&c.a[1].at(0, j), &c.a[0].at(0, j))?;
            if ev[5] <= 0.0 {
                return Err(Error::Domain("no incoming characteristic at the front".into()));
            }
            incoming.get_mut(side).push(vecs.column(5).into_owned());
            let a0 = c.a[0].at(grid.n1, j);
            let (ev, vecs) = characteristic_pencil(&c.a[1].at(grid.n1, j), &a0)?;
            let list = (0..6)
                .filter(|&k| ev[k] < -1e-12)
                .map(|k| {
                    let r = vecs.column(k).into_owned();
                    (r, a0 * r)
                })
                .collect();
            far.get_mut(side).push(list);
        }
    }
    Ok(Frame { op, bd: BoundaryData { traces, incoming, far_incoming: far } })
}

fn ko_periodic(f: &Array1<f64>, h: f64) -> Array1<f64> {
    const W: [f64; 7] = [1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0];
    let n = f.len();
    Array1::from_shape_fn(n, |j| W.iter().enumerate().map(|(k, w)| w * f[(j + n + k - 3) % n]).sum::<f64>() / (64.0 * h))
}

impl<'a> LinearSolver<'a> {
    pub fn new(basic: &'a BasicState, config: SolverConfig) -> Result<Self> {
        let grid = basic.grid;
        let snap = basic.at(0.0);
        let geo = snap.geometry(&grid);
        let frame = build_frame(&grid, basic, &snap, &geo)?;
        let mut speeds = max_speeds(&frame.op)?;
        if !basic.is_stationary() {
            // Sample a few times to bound the speeds of a time-dependent state.
            for k in 1..=4 {
                let t = config.t_end * k as f64 / 4.0;
                let s = basic.at(t);
                let op = assemble_snapshot(&grid, basic.eos.as_ref(), &s, &s.geometry(&grid), None, f64::INFINITY)?;
                let sp = max_speeds(&op)?;
                speeds = [speeds[0].max(sp[0]), speeds[1].max(sp[1])];
            }
        }
        let stationary = basic.is_stationary().then(|| Arc::new(frame));
        Ok(Self { basic, config, stationary, recent: Mutex::new(Vec::new()), speeds })
    }

    pub fn speeds(&self) -> [f64; 2] {
        self.speeds
    }

    pub fn dissipation_rate(&self) -> f64 {
        self.config.dissipation * self.speeds[0].max(self.speeds[1])
    }

    /// Largest stable step for the configured CFL number.
    pub fn cfl_limit(&self) -> f64 {
        let g = &self.basic.grid;
        self.config.cfl / (self.speeds[0] / g.h1() + self.speeds[1] / g.h2()).max(1e-300)
    }

    fn frame_at(&self, t: f64) -> Result<Arc<Frame>> {
        if let Some(f) = &self.stationary {
            return Ok(f.clone());
        }
        let mut recent = self.recent.lock().expect("frame cache poisoned");
        if let Some((_, f)) = recent.iter().find(|(s, _)| *s == t) {
            return Ok(f.clone());
        }
        let grid = self.basic.grid;
        let snap = self.basic.at(t);
        let geo = snap.geometry(&grid);
        let frame = Arc::new(build_frame(&grid, self.basic, &snap, &geo)?);
        if recent.len() == FRAME_CACHE {
            recent.remove(0);
        }
        recent.push((t, frame.clone()));
        Ok(frame)
    }

    /// Semi-discrete right-hand side at time `t`.
    pub fn rhs(&self, state: &LinearState, t: f64, forcing: Option<&Sided<StateField>>) -> Result<LinearState> {
        let frame = self.frame_at(t)?;
        Ok(self.rhs_with(&frame, state, forcing))
    }

    fn rhs_with(&self, frame: &Frame, state: &LinearState, forcing: Option<&Sided<StateField>>) -> LinearState {
        let grid = &self.basic.grid;
        let ko = self.dissipation_rate();
        let sponge: Vec<f64> = (0..=grid.n1).map(|i| self.config.sponge(grid, grid.x1(i))).collect();
        let mut out = LinearState::zeros(grid);
        for side in Side::both() {
            let v = state.v.get(side);
            let c = &frame.op.sides.get(side).step;
            let d1: [Array2<f64>; 6] = std::array::from_fn(|k| grid.d1(&v[k]));
            let d2: [Array2<f64>; 6] = std::array::from_fn(|k| grid.d2(&v[k]));
            let diss: [Array2<f64>; 6] = std::array::from_fn(|k| grid.ko6(&v[k]));
            let f = forcing.map(|f| f.get(side));
            let o = out.v.get_mut(side);
            for i in 0..=grid.n1 {
                for j in 0..grid.n2 {
                    let at = |a: &[Array2<f64>; 6]| Vec6::new(a[0][[i, j]], a[1][[i, j]], a[2][[i, j]], a[3][[i, j]], a[4][[i, j]], a[5][[i, j]]);
                    let vv = at(v);
                    let mut r = -(c[1].at(i, j) * at(&d1) + c[2].at(i, j) * at(&d2) + c[3].at(i, j) * vv);
                    if let Some(f) = f {
                        r += c[0].at(i, j) * at(f);
                    }
                    r += at(&diss) * ko - vv * sponge[i];
                    for k in 0..6 {
                        o[k][[i, j]] = r[k];
                    }
                }
            }
        }
        let tr = &frame.bd.traces;
        let d2phi = grid.d2_boundary(&state.phi);
        let diss = ko_periodic(&state.phi, grid.h2());
        for j in 0..grid.n2 {
            out.phi[j] = state.v.plus[1][[0, j]] - tr.u2.plus[j] * d2phi[j] + state.phi[j] * tr.d1_un.plus[j] + ko * diss[j];
        }
        out
    }

    /// Enforce the boundary conditions at `x1 = 0` and the far-boundary
    /// outflow condition by adjusting incoming amplitudes only.
    fn project(&self, frame: &Frame, state: &mut LinearState) {
        let grid = &self.basic.grid;
        let tr = &frame.bd.traces;
        let d2phi = grid.d2_boundary(&state.phi);
        for j in 0..grid.n2 {
            let vp = Vec6::from_fn(|k, _| state.v.plus[k][[0, j]]);
            let vm = Vec6::from_fn(|k, _| state.v.minus[k][[0, j]]);
            let phi = state.phi[j];
            let jump_u2 = tr.u2.plus[j] - tr.u2.minus[j];
            let jump_q = tr.d1_q.plus[j] + tr.d1_q.minus[j];
            // Difference of the kinematic rows and the pressure row.
            let r1 = vm[1] - vp[1] + jump_u2 * d2phi[j] - phi * (tr.d1_un.plus[j] + tr.d1_un.minus[j]);
            let r2 = vp[0] - vm[0] + phi * jump_q;
            let (rp, rm) = (frame.bd.incoming.plus[j], frame.bd.incoming.minus[j]);
            let m = nalgebra::Matrix2::new(-rp[1], rm[1], rp[0], -rm[0]);
            let c = m.try_inverse().expect("incoming modes are independent") * nalgebra::Vector2::new(-r1, -r2);
            for k in 0..6 {
                state.v.plus[k][[0, j]] += c[0] * rp[k];
                state.v.minus[k][[0, j]] += c[1] * rm[k];
            }
        }
        let n = grid.n1;
        for side in Side::both() {
            let v = state.v.get_mut(side);
            for j in 0..grid.n2 {
                let mut vv = Vec6::from_fn(|k, _| v[k][[n, j]]);
                for (r, a0r) in &frame.bd.far_incoming.get(side)[j] {
                    vv -= r * a0r.dot(&vv);
                }
                for k in 0..6 {
                    v[k][[n, j]] = vv[k];
                }
            }
        }
    }

    /// Largest boundary-condition residual (both kinematic rows and the
    /// pressure row) of a state at time `t`, using `rate.phi` minus its
    /// artificial dissipation as `dt phi`.
    pub fn boundary_residual(&self, state: &LinearState, rate: &LinearState, t: f64) -> Result<f64> {
        let frame = self.frame_at(t)?;
        let grid = &self.basic.grid;
        let tr = &frame.bd.traces;
        let d2phi = grid.d2_boundary(&state.phi);
        let ko = self.dissipation_rate();
        let diss = ko_periodic(&state.phi, grid.h2());
        let mut worst = 0.0f64;
        for j in 0..grid.n2 {
            let phi = state.phi[j];
            let dt = rate.phi[j] - ko * diss[j];
            let rows = [
                dt + tr.u2.plus[j] * d2phi[j] - state.v.plus[1][[0, j]] - phi * tr.d1_un.plus[j],
                dt + tr.u2.minus[j] * d2phi[j] - state.v.minus[1][[0, j]] + phi * tr.d1_un.minus[j],
                state.v.plus[0][[0, j]] - state.v.minus[0][[0, j]] + phi * (tr.d1_q.plus[j] + tr.d1_q.minus[j]),
            ];
            worst = rows.iter().fold(worst, |a, b| a.max(b.abs()));
        }
        Ok(worst)
    }

    /// One SSP-RK3 step from `t`.
    pub fn step(&self, state: &LinearState, t: f64, dt: f64, forcing: &dyn Forcing) -> Result<LinearState> {
        let grid = &self.basic.grid;
        let stage = |s: &LinearState, tt: f64| -> Result<LinearState> {
            let frame = self.frame_at(tt)?;
            let f = forcing.eval(grid, tt);
            Ok(self.rhs_with(&frame, s, f.as_ref()))
        };
        let project_at = |s: &mut LinearState, tt: f64| -> Result<()> {
            let frame = self.frame_at(tt)?;
            self.project(&frame, s);
            Ok(())
        };
        let k1 = stage(state, t)?;
        let mut s1 = state.axpy(1.0, &k1, dt);
        project_at(&mut s1, t + dt)?;
        let k2 = stage(&s1, t + dt)?;
        let mut s2 = state.axpy(0.75, &s1.axpy(1.0, &k2, dt), 0.25);
        project_at(&mut s2, t + 0.5 * dt)?;
        let k3 = stage(&s2, t + 0.5 * dt)?;
        let mut s3 = state.axpy(1.0 / 3.0, &s2.axpy(1.0, &k3, dt), 2.0 / 3.0);
        project_at(&mut s3, t + dt)?;
        if !s3.is_finite() {
            return Err(Error::NonFinite { field: "V", t: t + dt });
        }
        Ok(s3)
    }

    /// Integrate from the zero state at `t = 0` to `t_end`, storing snapshots.
    pub fn evolve(&self, forcing: &dyn Forcing) -> Result<Trajectory> {
        self.evolve_from(LinearState::zeros(&self.basic.grid), forcing)
    }

    pub fn evolve_from(&self, initial: LinearState, forcing: &dyn Forcing) -> Result<Trajectory> {
        let grid = self.basic.grid;
        let limit = self.cfl_limit();
        let snap_dt = self.config.snapshot_dt.min(self.config.t_end);
        let dt = match self.config.dt {
            Some(dt) if dt > limit * (1.0 + 1e-12) => return Err(Error::Cfl { dt, limit }),
            Some(dt) => dt,
            None => snap_dt / (snap_dt / limit).ceil(),
        };
        let per_snapshot = ((snap_dt / dt).round() as usize).max(1);
        let n_snapshots = (self.config.t_end / snap_dt).round() as usize;
        let mut traj = Trajectory {
            grid,
            config: self.config,
            dt,
            dissipation_rate: self.dissipation_rate(),
            steps: 0,
            times: Vec::new(),
            states: Vec::new(),
            rates: Vec::new(),
            forcing: Vec::new(),
        };
        let mut state = initial;
        let mut t = 0.0;
        let record = |traj: &mut Trajectory, state: &LinearState, t: f64| -> Result<()> {
            let f = forcing.eval(&grid, t);
            let rate = self.rhs(state, t, f.as_ref())?;
            traj.times.push(t);
            traj.states.push(state.clone());
            traj.rates.push(rate);
            traj.forcing.push(f);
            Ok(())
        };
        record(&mut traj, &state, t)?;
        for s in 0..n_snapshots {
            for _ in 0..per_snapshot {
                state = self.step(&state, t, dt, forcing)?;
                traj.steps += 1;
                t += dt;
            }
            t = (s + 1) as f64 * per_snapshot as f64 * dt;
            record(&mut traj, &state, t)?;
        }
        Ok(traj)
    }
}
