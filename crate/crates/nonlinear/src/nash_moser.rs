//! The Nash-Moser iteration around an approximate solution: smoothed
//! sources, the modified state (smoothing, normal-velocity correction and
//! magnetic transport), the effective linear solve with the good unknown,
//! and the literal error decomposition with its accumulation.

use crate::compat::{build_approximate, bump_data, time_jet, ApproxSolution};
use crate::operator::MhdOperator;
use crate::smoothing::{Smoother, ThetaSchedule};
use crate::spacetime::{BoundaryRows, FieldSet, Interior, SpaceTimeGrid, SpaceTimeState};
use ndarray::{Array1, Array2, Array3, Axis};
use serde::Serialize;
use std::sync::Arc;
use vsheet_core::grid::state_at;
use vsheet_core::symmetrizer::check_stability_vec;
use vsheet_core::{Eos, Error, Grid, IdealGas, PhysState, Result, Side, Sided, StateField, Vec6};
use vsheet_linear::effective::j_matrix;
use vsheet_linear::{homogenize_boundary, BasicSnapshot, BasicState, BoundaryData, Forcing, LiftProfile, LinearSolver, SampledForcing, SolverConfig, ZeroForcing};

/// Consecutive residual increases that stop a run.
pub const STALL_LIMIT: usize = 3;

/// The nonlinear problem around `(U^a, phi^a)` on a space-time grid.
#[derive(Debug, Clone)]
pub struct Problem {
    pub op: MhdOperator,
    pub st: SpaceTimeGrid,
    pub smoother: Smoother,
    /// `(U^a, phi^a)` on the levels.
    pub ua: SpaceTimeState,
    /// `F^a = -L(U^a, Psi^a)`.
    pub fa: Interior,
    /// `G^a = -B(U^a, phi^a)`.
    pub ga: BoundaryRows,
}

impl Problem {
    pub fn new(op: MhdOperator, st: SpaceTimeGrid, approx: &ApproxSolution) -> Result<Self> {
        let ua = approx.on_grid(&st);
        let (l, b) = op.evaluate(&st, &ua)?;
        let smoother = Smoother::new(st.nt, st.grid.n2)?;
        Ok(Self { op, st, smoother, ua, fa: l.scale(-1.0), ga: b.scale(-1.0) })
    }

    /// `L(V, Psi) = L(U^a + V) - L(U^a)` and `B(V, psi) - B(0, 0)`.
    pub fn residual_operators(&self, v: &SpaceTimeState) -> Result<(Interior, BoundaryRows)> {
        let (l, b) = self.op.evaluate(&self.st, &self.ua.add(v))?;
        Ok((l.add(&self.fa), b.add(&self.ga)))
    }
}

/// Sizes of the toy problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToySpec {
    pub n1: usize,
    pub n2: usize,
    pub l1: f64,
    pub t_end: f64,
    pub nt: usize,
    pub amplitude: f64,
    pub delta: f64,
    pub jet_order: usize,
}

impl Default for ToySpec {
    fn default() -> Self {
        Self { n1: 64, n2: 64, l1: 4.0, t_end: 0.5, nt: 17, amplitude: 5e-5, delta: 1e-3, jet_order: 2 }
    }
}

/// Background of the toy problem: `p = rho = 1`, `H = (0, 1)`, `u2 = +-0.2`.
pub fn toy_background() -> Sided<Vec6> {
    let eos = IdealGas::default();
    let s = eos.entropy_for(1.0, 1.0);
    Sided::new(Vec6::new(1.0, 0.0, 0.2, 0.0, 1.0, s), Vec6::new(1.0, 0.0, -0.2, 0.0, 1.0, s))
}

/// Toy problem: bump data around the background, a jet of the given order
/// and a time cutoff inactive on the window.
pub fn toy_problem(spec: &ToySpec) -> Result<Problem> {
    let grid = Grid::new(spec.n1, spec.n2, spec.l1, std::f64::consts::TAU)?;
    let eos: Arc<dyn Eos> = Arc::new(IdealGas::default());
    let op = MhdOperator::new(grid, eos);
    let st = SpaceTimeGrid::new(grid, spec.t_end, spec.nt)?;
    let bg = toy_background();
    let data = bump_data(&grid, bg.clone(), spec.amplitude, 1.3, 1.0);
    data.validate(&op, 0.1, 1e-3)?;
    let jet = time_jet(&op, &data, spec.jet_order)?;
    let (approx, _) = build_approximate(&op, jet, bg, 2.0 * spec.t_end, spec.delta, &st)?;
    Problem::new(op, st, &approx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportConfig {
    pub cfl: f64,
    /// Kreiss-Oliger coefficient relative to the transport speed.
    pub dissipation: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self { cfl: 0.4, dissipation: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NashMoserConfig {
    pub theta0: f64,
    pub max_iter: usize,
    /// Multiplies `F^a` and `G^a`.
    pub forcing_scale: f64,
    /// A run whose first residual is at most this stops at once.
    pub tolerance: f64,
    pub transport: TransportConfig,
    pub solver: SolverConfig,
}

impl Default for NashMoserConfig {
    fn default() -> Self {
        Self {
            theta0: 2.0,
            max_iter: 5,
            forcing_scale: 1.0,
            tolerance: 1e-12,
            transport: TransportConfig::default(),
            solver: SolverConfig { sponge_strength: 0.0, ..SolverConfig::default() },
        }
    }
}

/// Iterate `V_i`, `psi_i`, the accumulated errors and the sources so far.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub i: usize,
    pub v: SpaceTimeState,
    pub e: Interior,
    pub e_b: BoundaryRows,
    pub f: Vec<Interior>,
    pub g: Vec<BoundaryRows>,
}

impl IterationState {
    pub fn initial(st: &SpaceTimeGrid) -> Self {
        Self { i: 0, v: SpaceTimeState::zeros(st), e: Interior::zeros(st), e_b: BoundaryRows::zeros(st), f: Vec::new(), g: Vec::new() }
    }
}

/// `V_{i+1/2}` and `psi_{i+1/2}` with the full state `U^a + V_{i+1/2}`.
#[derive(Debug, Clone)]
pub struct ModifiedState {
    pub v: SpaceTimeState,
    pub hat: SpaceTimeState,
    pub dt_phi: Array2<f64>,
    /// `max |u1 - dt phi - u2 d2 phi|` at `x1 = 0`.
    pub kinematic_residual: f64,
    /// `max |H1 - H2 d2 phi|` at `x1 = 0`.
    pub normal_field_residual: f64,
    /// `max |S V_i|` at `t = 0`.
    pub causal_defect: f64,
    pub transport_substeps: usize,
}

fn lift_values(grid: &Grid) -> Vec<f64> {
    let l = LiftProfile::for_grid(grid);
    (0..=grid.n1).map(|i| l.value(grid.x1(i))).collect()
}

fn lerp_slice(a: &Sided<StateField>, b: &Sided<StateField>, w: f64) -> Sided<StateField> {
    crate::spacetime::lin_slice(a, 1.0 - w, b, w)
}

/// Integrate the magnetic rows `dt H = -[A1~ d1 W + A2 d2 W]_H` of the
/// state `W` equal to `base` with its field replaced by `H`, from `h0` at
/// `t = 0`. Coefficients are interpolated linearly between levels; the
/// normal transport speed vanishes at `x1 = 0`, so no boundary condition
/// is imposed. Returns the field on the levels and the substeps per level.
pub fn transport_magnetic(op: &MhdOperator, st: &SpaceTimeGrid, base: &SpaceTimeState, dt_phi: &Array2<f64>, h0: &Sided<[Array2<f64>; 2]>, cfg: TransportConfig) -> Result<(Sided<[Array3<f64>; 2]>, usize)> {
    let g = &op.grid;
    let max_abs = |a: &Array3<f64>| a.fold(0.0f64, |m, v| m.max(v.abs()));
    let speed = Side::both().iter().map(|&s| max_abs(&base.u.fields.get(s)[1]) + max_abs(&base.u.fields.get(s)[2])).fold(0.0, f64::max)
        + dt_phi.fold(0.0f64, |m, v| m.max(v.abs()))
        + 1e-12;
    let nsub = ((st.dt() * speed * (1.0 / g.h1() + 1.0 / g.h2()) / cfg.cfl).ceil() as usize).max(1);
    let ko = cfg.dissipation * speed;
    let mut out: Sided<[Array3<f64>; 2]> = Sided::from_fn(|_| std::array::from_fn(|_| st.zeros3()));
    let mut h = h0.clone();
    let store = |out: &mut Sided<[Array3<f64>; 2]>, h: &Sided<[Array2<f64>; 2]>, k: usize| {
        for s in Side::both() {
            for c in 0..2 {
                out.get_mut(s)[c].index_axis_mut(Axis(0), k).assign(&h.get(s)[c]);
            }
        }
    };
    store(&mut out, &h, 0);
    let tau = st.dt() / nsub as f64;
    for k in 0..st.nt - 1 {
        let (ua, ub) = (base.u.slice(k), base.u.slice(k + 1));
        let (pa, pb) = (base.phi_slice(k), base.phi_slice(k + 1));
        let (da, db) = (dt_phi.row(k).to_owned(), dt_phi.row(k + 1).to_owned());
        let rhs = |h: &Sided<[Array2<f64>; 2]>, w: f64| -> Result<Sided<[Array2<f64>; 2]>> {
            let mut u = lerp_slice(&ua, &ub, w);
            for s in Side::both() {
                u.get_mut(s)[3] = h.get(s)[0].clone();
                u.get_mut(s)[4] = h.get(s)[1].clone();
            }
            let phi = &pa * (1.0 - w) + &pb * w;
            let dphi = &da * (1.0 - w) + &db * w;
            let sp = op.spatial_slice(&u, &phi, &dphi)?;
            Ok(Sided::from_fn(|s| std::array::from_fn(|c| g.ko6(&h.get(s)[c]) * ko - &sp.get(s)[3 + c])))
        };
        let comb = |x: &Sided<[Array2<f64>; 2]>, a: f64, y: &Sided<[Array2<f64>; 2]>, b: f64| -> Sided<[Array2<f64>; 2]> {
            Sided::from_fn(|s| std::array::from_fn(|c| &x.get(s)[c] * a + &y.get(s)[c] * b))
        };
        for m in 0..nsub {
            let w0 = m as f64 / nsub as f64;
            let w1 = (m + 1) as f64 / nsub as f64;
            let s1 = comb(&h, 1.0, &rhs(&h, w0)?, tau);
            let s2 = comb(&comb(&h, 0.75, &s1, 0.25), 1.0, &rhs(&s1, w1)?, 0.25 * tau);
            h = comb(&comb(&h, 1.0 / 3.0, &s2, 2.0 / 3.0), 1.0, &rhs(&s2, 0.5 * (w0 + w1))?, 2.0 / 3.0 * tau);
        }
        if h.plus.iter().chain(h.minus.iter()).any(|f| f.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite { field: "H'", t: st.t(k + 1) });
        }
        store(&mut out, &h, k + 1);
    }
    Ok((out, nsub))
}

/// Hyperbolicity everywhere and stability at the front on every level.
fn check_admissible(op: &MhdOperator, st: &SpaceTimeGrid, s: &SpaceTimeState) -> Result<()> {
    let g = &op.grid;
    let eos = op.eos.as_ref();
    for k in 0..st.nt {
        let u = s.u.slice(k);
        for side in Side::both() {
            for i in 0..=g.n1 {
                for j in 0..g.n2 {
                    let p = PhysState::from_vec(&state_at(u.get(side), i, j), side);
                    if p.ensure_admissible(eos, 0.0).is_err() {
                        return Err(Error::ConstraintViolated { constraint: "hyperbolicity of the modified state", residual: p.density(eos) });
                    }
                }
            }
        }
        for j in 0..g.n2 {
            let r = check_stability_vec(&state_at(&u.plus, 0, j), &state_at(&u.minus, 0, j), eos, 0.0);
            if !r.satisfied {
                return Err(Error::ConstraintViolated { constraint: "stability of the modified state", residual: r.margin });
            }
        }
    }
    Ok(())
}

/// Modified state: `psi`, `p`, `u2`, `S` smoothed; `u1` smoothed and
/// corrected by the lift so that `u1 = dt phi + u2 d2 phi` at `x1 = 0`; the
/// field transported from `H^a(0)` and its boundary normal component
/// projected onto `H2 d2 phi`.
pub fn modified_state(problem: &Problem, state: &IterationState, theta: f64, cfg: TransportConfig) -> Result<ModifiedState> {
    let (op, st) = (&problem.op, &problem.st);
    let g = &op.grid;
    let sv = problem.smoother.smooth_state(&state.v, theta);
    let s0 = sv.u.slice(0);
    let causal_defect = s0.plus.iter().chain(s0.minus.iter()).fold(sv.phi.row(0).fold(0.0f64, |m, v| m.max(v.abs())), |m, f| f.fold(m, |a, v| a.max(v.abs())));
    let mut hat = problem.ua.add(&sv);
    let dt_phi = st.dt_of2(&hat.phi);
    let ell = lift_values(g);
    let d2: Vec<Array1<f64>> = (0..st.nt).map(|k| g.d2_boundary(&hat.phi_slice(k))).collect();
    for side in Side::both() {
        let f = hat.u.fields.get_mut(side);
        for k in 0..st.nt {
            for j in 0..g.n2 {
                let gap = dt_phi[[k, j]] + f[2][[k, 0, j]] * d2[k][j] - f[1][[k, 0, j]];
                for (i, &l) in ell.iter().enumerate() {
                    f[1][[k, i, j]] += l * gap;
                }
            }
        }
    }
    let h0 = problem.ua.u.slice(0).map(|_, f| [f[3].clone(), f[4].clone()]);
    let (h, transport_substeps) = transport_magnetic(op, st, &hat, &dt_phi, &h0, cfg)?;
    for side in Side::both() {
        let f = hat.u.fields.get_mut(side);
        let [h1, h2] = h.get(side).clone();
        f[3] = h1;
        f[4] = h2;
        for k in 0..st.nt {
            for j in 0..g.n2 {
                let gap = f[4][[k, 0, j]] * d2[k][j] - f[3][[k, 0, j]];
                for (i, &l) in ell.iter().enumerate() {
                    f[3][[k, i, j]] += l * gap;
                }
            }
        }
    }
    check_admissible(op, st, &hat)?;
    let mut kin = 0.0f64;
    let mut nf = 0.0f64;
    for side in Side::both() {
        let f = hat.u.fields.get(side);
        for k in 0..st.nt {
            for j in 0..g.n2 {
                kin = kin.max((f[1][[k, 0, j]] - dt_phi[[k, j]] - f[2][[k, 0, j]] * d2[k][j]).abs());
                nf = nf.max((f[3][[k, 0, j]] - f[4][[k, 0, j]] * d2[k][j]).abs());
            }
        }
    }
    let v = hat.sub(&problem.ua);
    Ok(ModifiedState { v, hat, dt_phi, kinematic_residual: kin, normal_field_residual: nf, causal_defect, transport_substeps })
}

/// Cubic Lagrange interpolation in time of a source given on the levels;
/// zero outside the window.
pub struct LevelForcing {
    pub dt: f64,
    pub levels: Vec<Sided<StateField>>,
}

impl LevelForcing {
    pub fn from_interior(st: &SpaceTimeGrid, f: &Interior) -> Self {
        Self { dt: st.dt(), levels: (0..st.nt).map(|k| f.slice(k)).collect() }
    }
}

/// Weights of the four-point Lagrange interpolant at `x` over nodes `k0..k0+4`.
fn cubic_weights(x: f64, k0: usize) -> [f64; 4] {
    std::array::from_fn(|a| {
        (0..4).filter(|&b| b != a).map(|b| (x - (k0 + b) as f64) / (a as f64 - b as f64)).product()
    })
}

impl Forcing for LevelForcing {
    fn eval(&self, _grid: &Grid, t: f64) -> Option<Sided<StateField>> {
        let n = self.levels.len();
        let x = t / self.dt;
        if x < -1e-9 || x > (n - 1) as f64 + 1e-9 {
            return None;
        }
        let k0 = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let w = cubic_weights(x, k0);
        Some(Sided::from_fn(|s| {
            std::array::from_fn(|c| {
                let mut acc = self.levels[k0].get(s)[c].clone() * w[0];
                for (a, wa) in w.iter().enumerate().skip(1) {
                    acc.scaled_add(*wa, &self.levels[k0 + a].get(s)[c]);
                }
                acc
            })
        }))
    }
}

struct SumForcing<'a>(&'a dyn Forcing, &'a SampledForcing);

impl Forcing for SumForcing<'_> {
    fn eval(&self, grid: &Grid, t: f64) -> Option<Sided<StateField>> {
        match (self.0.eval(grid, t), self.1.eval(grid, t)) {
            (None, b) => b,
            (a, None) => a,
            (Some(a), Some(b)) => Some(crate::spacetime::lin_slice(&a, 1.0, &b, 1.0)),
        }
    }
}

/// Basic state for the linear solver from levels of `U^`: linear
/// interpolation in time with the boundary relations re-imposed.
pub fn basic_from_levels(op: &MhdOperator, st: &SpaceTimeGrid, hat: &SpaceTimeState, dt_phi: &Array2<f64>) -> BasicState {
    let grid = op.grid;
    let dt_u = Interior { fields: hat.u.fields.map(|_, f| std::array::from_fn(|c| st.dt_of3(&f[c]))) };
    let levels: Arc<Vec<(Sided<StateField>, Sided<StateField>, Array1<f64>, Array1<f64>)>> =
        Arc::new((0..st.nt).map(|k| (hat.u.slice(k), dt_u.slice(k), hat.phi_slice(k), dt_phi.row(k).to_owned())).collect());
    let dt = st.dt();
    BasicState::analytic(grid, op.eos.clone(), move |t| {
        let n = levels.len();
        let x = (t / dt).clamp(0.0, (n - 1) as f64);
        let k = (x.floor() as usize).min(n - 2);
        let w = x - k as f64;
        let (a, b) = (&levels[k], &levels[k + 1]);
        let mut u = lerp_slice(&a.0, &b.0, w);
        let dt_u = lerp_slice(&a.1, &b.1, w);
        let phi = &a.2 * (1.0 - w) + &b.2 * w;
        let dt_phi = &a.3 * (1.0 - w) + &b.3 * w;
        let d2_phi = grid.d2_boundary(&phi);
        for s in Side::both() {
            let f = u.get_mut(s);
            for j in 0..grid.n2 {
                f[1][[0, j]] = dt_phi[j] + f[2][[0, j]] * d2_phi[j];
                f[3][[0, j]] = f[4][[0, j]] * d2_phi[j];
            }
        }
        BasicSnapshot { t, u, dt_u, phi, dt_phi, d2_phi }
    })
}

/// Solution of the effective problem on the levels: `dV'` (the good
/// unknown) and `dpsi`.
#[derive(Debug, Clone)]
pub struct EffectiveSolution {
    pub v_dot: Interior,
    pub psi: Array2<f64>,
    pub solver_steps: usize,
}

/// Solve `L'_e dV' = f`, `B'_e (dV', dpsi) = g` around `hat` by lifting the
/// boundary data and integrating the homogeneous problem.
pub fn solve_effective(problem: &Problem, modified: &ModifiedState, f: &Interior, g: &BoundaryRows, solver: SolverConfig) -> Result<EffectiveSolution> {
    let (op, st) = (&problem.op, &problem.st);
    let grid = op.grid;
    let basic = basic_from_levels(op, st, &modified.hat, &modified.dt_phi);
    let row = |r: usize, k: usize| g.rows[r].row(k).to_owned();
    let bd = BoundaryData {
        t0: 0.0,
        dt: st.dt(),
        g1: (0..st.nt).map(|k| Sided::new(row(0, k), row(1, k))).collect(),
        g2: (0..st.nt).map(|k| row(2, k)).collect(),
        g3: (0..st.nt).map(|_| Sided::new(Array1::zeros(grid.n2), Array1::zeros(grid.n2))).collect(),
    };
    let hom = homogenize_boundary(&basic, &bd, &ZeroForcing, LiftProfile::for_grid(&grid))?;
    let level = LevelForcing::from_interior(st, f);
    let forcing = SumForcing(&level, &hom.forcing);
    let cfg = SolverConfig { t_end: st.t_end, snapshot_dt: st.dt(), dt: None, ..solver };
    let traj = LinearSolver::new(&basic, cfg)?.evolve(&forcing).map_err(|e| match e {
        e if e.is_numerical() => Error::Diverged(format!("effective solve: {e}")),
        e => e,
    })?;
    if traj.states.len() != st.nt {
        return Err(Error::Domain(format!("solver returned {} snapshots for {} levels", traj.states.len(), st.nt)));
    }
    let chi = &op.chi;
    let mut v_dot = Interior::zeros(st);
    let mut psi = st.zeros2();
    for (k, state) in traj.states.iter().enumerate() {
        let snap = basic.at(st.t(k));
        let lift = &hom.lift[k];
        for side in Side::both() {
            let (v, u, l) = (state.v.get(side), snap.u.get(side), lift.get(side));
            let out = v_dot.fields.get_mut(side);
            for i in 0..=grid.n1 {
                let c = chi.value(grid.x1(i));
                for j in 0..grid.n2 {
                    let jm = j_matrix(&state_at(u, i, j), c * snap.d2_phi[j]);
                    let r = state_at(l, i, j) + jm * state_at(v, i, j);
                    for n in 0..6 {
                        out[n][[k, i, j]] = r[n];
                    }
                }
            }
        }
        psi.row_mut(k).assign(&state.phi);
    }
    Ok(EffectiveSolution { v_dot, psi, solver_steps: traj.steps })
}

/// `dV = dV' + (d1 U^ / d1 Phi^) chi dpsi`.
pub fn good_unknown(op: &MhdOperator, st: &SpaceTimeGrid, hat: &SpaceTimeState, v_dot: &Interior, psi: &Array2<f64>) -> Interior {
    let g = &op.grid;
    let mut out = v_dot.clone();
    for k in 0..st.nt {
        let u = hat.u.slice(k);
        for side in Side::both() {
            let o = out.fields.get_mut(side);
            for c in 0..6 {
                let d1 = g.d1(&u.get(side)[c]);
                for i in 0..=g.n1 {
                    let x1 = g.x1(i);
                    let (chi, dchi) = (op.chi.value(x1), op.chi.derivative(x1));
                    for j in 0..g.n2 {
                        let d1_phi = side.sign() + dchi * hat.phi[[k, j]];
                        o[c][[k, i, j]] += d1[[i, j]] / d1_phi * chi * psi[[k, j]];
                    }
                }
            }
        }
    }
    out
}

/// Norms of the error pieces of one step (interior and boundary).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    /// Quadratic error of the Newton step.
    pub quadratic: f64,
    /// Substitution of `V_i` by `S V_i`.
    pub substitution: f64,
    /// Passage to the modified state.
    pub modification: f64,
    /// Dropping the front term of the good unknown (interior only).
    pub good_unknown: f64,
    /// Linear solve against its source.
    pub solve: f64,
    pub quadratic_b: f64,
    pub substitution_b: f64,
    pub modification_b: f64,
    pub solve_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub i: usize,
    pub theta: f64,
    pub delta_v: f64,
    pub delta_psi: f64,
    pub source_f: f64,
    pub source_g: f64,
    pub errors: ErrorNorms,
    pub bookkeeping_residual: f64,
    pub kinematic_residual: f64,
    pub normal_field_residual: f64,
    pub causal_defect: f64,
    pub transport_substeps: usize,
    pub solver_steps: usize,
}

/// Relative defect of `sum f + S E = S F` and `sum g + S E~ = S G`,
/// recomputed from the stored sources.
pub fn bookkeeping_residual(problem: &Problem, state: &IterationState, theta: f64, scale: f64) -> f64 {
    let sm = &problem.smoother;
    let rel = |lhs_sum: f64, parts: [f64; 3]| {
        let d = parts.iter().fold(0.0f64, |a, &b| a.max(b));
        if d == 0.0 {
            0.0
        } else {
            lhs_sum / d
        }
    };
    let st = &problem.st;
    let mut fsum = Interior::zeros(st);
    for f in &state.f {
        fsum = fsum.add(f);
    }
    let se = sm.smooth_interior(&state.e, theta);
    let sf = sm.smooth_interior(&problem.fa.scale(scale), theta);
    let ri = rel(fsum.add(&se).sub(&sf).max_abs(), [fsum.max_abs(), se.max_abs(), sf.max_abs()]);
    let mut gsum = BoundaryRows::zeros(st);
    for g in &state.g {
        gsum = gsum.add(g);
    }
    let seb = sm.smooth_rows(&state.e_b, theta);
    let sg = sm.smooth_rows(&problem.ga.scale(scale), theta);
    let rb = rel(gsum.add(&seb).sub(&sg).max_abs(), [gsum.max_abs(), seb.max_abs(), sg.max_abs()]);
    ri.max(rb)
}

/// One iteration: sources, modified state, effective solve, update and the
/// error decomposition by literal operator differences.
pub fn iterate_step(problem: &Problem, state: &IterationState, cfg: &NashMoserConfig) -> Result<(IterationState, StepReport)> {
    let (op, st, sm) = (&problem.op, &problem.st, &problem.smoother);
    let i = state.i;
    let theta = ThetaSchedule::new(cfg.theta0)?.theta(i);
    let s = cfg.forcing_scale;
    let mut fsum = Interior::zeros(st);
    for f in &state.f {
        fsum = fsum.add(f);
    }
    let mut gsum = BoundaryRows::zeros(st);
    for g in &state.g {
        gsum = gsum.add(g);
    }
    let f_i = sm.smooth_interior(&problem.fa.scale(s).sub(&state.e), theta).sub(&fsum);
    let g_i = sm.smooth_rows(&problem.ga.scale(s).sub(&state.e_b), theta).sub(&gsum);
    let mut next = state.clone();
    next.f.push(f_i.clone());
    next.g.push(g_i.clone());
    let bookkeeping = bookkeeping_residual(problem, &next, theta, s);

    let modified = modified_state(problem, state, theta, cfg.transport)?;
    let sol = solve_effective(problem, &modified, &f_i, &g_i, cfg.solver)?;
    let dv = good_unknown(op, st, &modified.hat, &sol.v_dot, &sol.psi);
    let delta = SpaceTimeState { u: dv, phi: sol.psi.clone() };
    next.v = state.v.add(&delta);
    next.i = i + 1;

    let (l_i, b_i) = problem.residual_operators(&state.v)?;
    let (l_n, b_n) = problem.residual_operators(&next.v)?;
    let base_i = problem.ua.add(&state.v);
    let base_s = problem.ua.add(&sm.smooth_state(&state.v, theta));
    let (d1, db1) = op.derivative(st, &base_i, &delta)?;
    let (d2, db2) = op.derivative(st, &base_s, &delta)?;
    let (d3, db3) = op.derivative(st, &modified.hat, &delta)?;
    let (d4, _) = op.derivative(st, &modified.hat, &SpaceTimeState { u: sol.v_dot.clone(), phi: st.zeros2() })?;
    let e1 = l_n.sub(&l_i).sub(&d1);
    let e2 = d1.sub(&d2);
    let e3 = d2.sub(&d3);
    let ed = d3.sub(&d4);
    let es = d4.sub(&f_i);
    let eb1 = b_n.sub(&b_i).sub(&db1);
    let eb2 = db1.sub(&db2);
    let eb3 = db2.sub(&db3);
    let ebs = db3.sub(&g_i);
    next.e = state.e.add(&e1).add(&e2).add(&e3).add(&ed).add(&es);
    next.e_b = state.e_b.add(&eb1).add(&eb2).add(&eb3).add(&ebs);

    let errors = ErrorNorms {
        quadratic: e1.l2(st),
        substitution: e2.l2(st),
        modification: e3.l2(st),
        good_unknown: ed.l2(st),
        solve: es.l2(st),
        quadratic_b: eb1.l2(st),
        substitution_b: eb2.l2(st),
        modification_b: eb3.l2(st),
        solve_b: ebs.l2(st),
    };
    let report = StepReport {
        i,
        theta,
        delta_v: delta.u.l2(st),
        delta_psi: st.l2_sq2(&delta.phi).sqrt(),
        source_f: f_i.l2(st),
        source_g: g_i.l2(st),
        errors,
        bookkeeping_residual: bookkeeping,
        kinematic_residual: modified.kinematic_residual,
        normal_field_residual: modified.normal_field_residual,
        causal_defect: modified.causal_defect,
        transport_substeps: modified.transport_substeps,
        solver_steps: sol.solver_steps,
    };
    Ok((next, report))
}

/// Residuals of one iterate, as emitted per iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateReport {
    pub i: usize,
    pub theta: f64,
    /// `|L(V_i, Psi_i) - s F^a|` over the window.
    pub residual_interior: f64,
    /// `|B(U^a + V_i, phi^a + psi_i) + (1 - s) B(U^a, phi^a)|`.
    pub residual_boundary: f64,
    pub v_norm: f64,
    pub psi_norm: f64,
    /// Norms of the step that produced this iterate (zero for the first).
    pub delta_v: f64,
    pub delta_psi: f64,
    pub bookkeeping_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub iterates: Vec<IterateReport>,
    pub steps: Vec<StepReport>,
    pub stop: StopReason,
    /// Geometric decay factor per iteration from a log-linear fit.
    pub fitted_decay: f64,
    pub final_residual: f64,
}

impl RunReport {
    pub fn strictly_decreasing(&self, count: usize) -> bool {
        let r: Vec<f64> = self.iterates.iter().map(|it| it.residual_interior).collect();
        r.len() > count && r.windows(2).take(count).all(|w| w[1] < w[0])
    }
}

/// Iterate until `max_iter` steps, immediate convergence, or
/// `STALL_LIMIT` consecutive residual increases.
pub fn run(problem: &Problem, cfg: &NashMoserConfig, mut on_iterate: impl FnMut(&IterateReport)) -> Result<RunReport> {
    let st = &problem.st;
    let sched = ThetaSchedule::new(cfg.theta0)?;
    let mut state = IterationState::initial(st);
    let mut iterates = Vec::new();
    let mut steps: Vec<StepReport> = Vec::new();
    let mut increases = 0;
    let residual = |state: &IterationState| -> Result<(f64, f64)> {
        let (l, b) = problem.residual_operators(&state.v)?;
        Ok((l.sub(&problem.fa.scale(cfg.forcing_scale)).l2(st), b.sub(&problem.ga.scale(cfg.forcing_scale)).l2(st)))
    };
    let stop = loop {
        let (ri, rb) = residual(&state)?;
        let last = steps.last();
        let it = IterateReport {
            i: state.i,
            theta: sched.theta(state.i),
            residual_interior: ri,
            residual_boundary: rb,
            v_norm: state.v.u.l2(st),
            psi_norm: st.l2_sq2(&state.v.phi).sqrt(),
            delta_v: last.map_or(0.0, |s| s.delta_v),
            delta_psi: last.map_or(0.0, |s| s.delta_psi),
            bookkeeping_residual: last.map_or(0.0, |s| s.bookkeeping_residual),
        };
        on_iterate(&it);
        if let Some(prev) = iterates.last().map(|p: &IterateReport| p.residual_interior) {
            increases = if ri > prev { increases + 1 } else { 0 };
        }
        iterates.push(it);
        if state.i == 0 && ri + rb <= cfg.tolerance {
            break StopReason::Converged;
        }
        if increases >= STALL_LIMIT {
            break StopReason::Stalled;
        }
        if state.i >= cfg.max_iter {
            break StopReason::MaxIterations;
        }
        let (next, report) = iterate_step(problem, &state, cfg)?;
        steps.push(report);
        state = next;
    };
    let r: Vec<f64> = iterates.iter().map(|it| it.residual_interior).collect();
    let fitted_decay = if r.len() >= 2 && r.iter().all(|&v| v > 0.0) {
        let n = r.len() as f64;
        let xm = (n - 1.0) / 2.0;
        let ym = r.iter().map(|v| v.ln()).sum::<f64>() / n;
        let (sxy, sxx) = r.iter().enumerate().fold((0.0, 0.0), |(a, b), (i, v)| {
            let dx = i as f64 - xm;
            (a + dx * (v.ln() - ym), b + dx * dx)
        });
        (sxy / sxx).exp()
    } else {
        0.0
    };
    Ok(RunReport { final_residual: *r.last().unwrap_or(&0.0), iterates, steps, stop, fitted_decay })
}

#[cfg(test)]
mod tests {
    use super::*;
    use vsheet_core::grid::zero_state_field;

    #[test]
    fn cubic_weights_reproduce_cubics() {
        let x = 2.3;
        let w = cubic_weights(x, 1);
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
        let approx: f64 = (0..4).map(|a| w[a] * f((1 + a) as f64)).sum();
        assert!((approx - f(x)).abs() < 1e-12);
    }

    #[test]
    fn level_forcing_is_zero_outside_the_window() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let lf = LevelForcing { dt: 0.1, levels: vec![Sided::new(zero_state_field(&g), zero_state_field(&g)); 5] };
        assert!(lf.eval(&g, -0.01).is_none());
        assert!(lf.eval(&g, 0.41).is_none());
        assert!(lf.eval(&g, 0.4).is_some());
    }
}
