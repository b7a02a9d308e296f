//! Energy bookkeeping for a stored trajectory: the squared norms entering
//! the `H^1_*` estimate, the instantaneous energy identity of the
//! symmetrized system, and the empirical a priori constant.

use crate::basic::{BasicGeometry, BasicSnapshot, BasicState};
use crate::effective::{assemble_snapshot, CoeffField, EffectiveOperator};
use crate::solver::{LinearState, Trajectory};
use ndarray::{Array2, Array3};
use serde::Serialize;
use std::io::Write;
use vsheet_core::norms::{boundary_norm, hm_star_norm, GridFunction, NormDomain};
use vsheet_core::ramp::{EtaProfile, SigmaWeight};
use vsheet_core::symmetrizer::{build_lambda_boundary, extend_lambda, t_vector, LambdaField};
use vsheet_core::{Error, Grid, Mat6, Result, Side, Sided, StateField, Vec6};

/// Noncharacteristic components `(q', u'_n, H'_n)` of `V`.
pub const NONCHARACTERISTIC: [usize; 3] = [0, 1, 3];

/// Width of the interior cutoff of `lambda`.
pub const DEFAULT_ETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub i: f64,
    pub i0: f64,
    pub i1n: f64,
    pub isigma: f64,
    pub i2: f64,
    /// `||phi(t)||_{L^2}`, not squared.
    pub phi_l2: f64,
    /// Identity residual `d/dt <B0 V, V> - (boundary + source + zero order)`.
    pub identity_residual: f64,
    /// Sum of the magnitudes of the identity terms, for relative errors.
    pub identity_scale: f64,
}

impl LedgerRow {
    pub fn i1star(&self) -> f64 {
        self.i + self.i0 + self.isigma + self.i2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub const CSV_HEADER: &'static str = "t,I,I0,I1n,Isigma,I2,phiL2,identity_residual";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.t, r.i, r.i0, r.i1n, r.isigma, r.i2, r.phi_l2, r.identity_residual
            )?;
        }
        Ok(())
    }

    /// Largest identity residual relative to the largest identity scale.
    pub fn relative_identity_residual(&self) -> f64 {
        let res = self.rows.iter().fold(0.0f64, |a, r| a.max(r.identity_residual.abs()));
        let scale = self.rows.iter().fold(0.0f64, |a, r| a.max(r.identity_scale));
        if scale == 0.0 {
            0.0
        } else {
            res / scale
        }
    }
}

/// Symmetrizer-weighted operator at one time, with the data the identity
/// needs.
struct LedgerFrame {
    snap: BasicSnapshot,
    geo: BasicGeometry,
    op: EffectiveOperator,
    lambda: LambdaField,
    d1_b1: Sided<CoeffField>,
    d2_b2: Sided<CoeffField>,
}

fn ledger_frame(basic: &BasicState, t: f64, eta: EtaProfile) -> Result<LedgerFrame> {
    let grid = basic.grid;
    let snap = basic.at(t).into_owned();
    let geo = snap.geometry(&grid);
    let eos = basic.eos.as_ref();
    let boundary = build_lambda_boundary(&grid, &snap.u, eos)?;
    let lambda = extend_lambda(&grid, &boundary, eta, &snap.u, eos)?;
    let op = assemble_snapshot(&grid, eos, &snap, &geo, Some(&lambda), f64::INFINITY)?;
    let b = |s: Side| op.sides.get(s).b.as_ref().expect("lambda supplied");
    let d1_b1 = Sided::from_fn(|s| b(s)[1].derivative(&grid, 0));
    let d2_b2 = Sided::from_fn(|s| b(s)[2].derivative(&grid, 1));
    Ok(LedgerFrame { snap, geo, op, lambda, d1_b1, d2_b2 })
}

struct FrameCache<'a> {
    basic: &'a BasicState,
    eta: EtaProfile,
    stationary: Option<LedgerFrame>,
}

impl<'a> FrameCache<'a> {
    fn new(basic: &'a BasicState, eta: EtaProfile) -> Result<Self> {
        let stationary = if basic.is_stationary() { Some(ledger_frame(basic, 0.0, eta)?) } else { None };
        Ok(Self { basic, eta, stationary })
    }

    fn with<R>(&self, t: f64, f: impl FnOnce(&LedgerFrame) -> R) -> Result<R> {
        match &self.stationary {
            Some(fr) => Ok(f(fr)),
            None => Ok(f(&ledger_frame(self.basic, t, self.eta)?)),
        }
    }
}

fn at(f: &StateField, i: usize, j: usize) -> Vec6 {
    Vec6::new(f[0][[i, j]], f[1][[i, j]], f[2][[i, j]], f[3][[i, j]], f[4][[i, j]], f[5][[i, j]])
}

fn sq_norm(grid: &Grid, f: &StateField, comps: &[usize]) -> f64 {
    comps.iter().map(|&k| grid.l2_sq(&f[k])).sum()
}

fn identity_terms(
    grid: &Grid,
    fr: &LedgerFrame,
    state: &LinearState,
    rate: &LinearState,
    forcing: Option<&Sided<StateField>>,
    traj: &Trajectory,
) -> (f64, f64) {
    let sigma_s: Vec<f64> = (0..=grid.n1).map(|i| traj.config.sponge(grid, grid.x1(i))).collect();
    let ko = traj.dissipation_rate;
    let (n1, h2) = (grid.n1, grid.h2());
    let mut terms = [0.0f64; 8];
    for side in Side::both() {
        let c = fr.op.sides.get(side);
        let b = c.b.as_ref().expect("lambda supplied");
        let js = c.jt_s.as_ref().expect("lambda supplied");
        let j_field = &c.j;
        let v = state.v.get(side);
        let dv = rate.v.get(side);
        let diss: [Array2<f64>; 6] = std::array::from_fn(|k| grid.ko6(&v[k]));
        let d1_phi = fr.geo.lifted.d1_phi.get(side);
        let uh = fr.snap.u.get(side);
        let lam = fr.lambda.values.get(side);
        // div h' with h' = (H'_n, d1 Phi H'_2).
        let h2_scaled = &v[4] * d1_phi;
        let div_h = grid.d1(&v[3]) + grid.d2(&h2_scaled);
        let (d1b1, d2b2) = (fr.d1_b1.get(side), fr.d2_b2.get(side));
        for i in 0..=n1 {
            let w = grid.weight(i);
            for jj in 0..grid.n2 {
                let vv = at(v, i, jj);
                let b0v = b[0].at(i, jj) * vv;
                terms[0] += w * 2.0 * b0v.dot(&at(dv, i, jj));
                let b3 = b[3].at(i, jj);
                let zero_order: Mat6 = d1b1.at(i, jj) + d2b2.at(i, jj) - b3 - b3.transpose();
                terms[1] += w * vv.dot(&(zero_order * vv));
                if let Some(f) = forcing {
                    terms[2] += w * 2.0 * (js.at(i, jj) * at(f.get(side), i, jj)).dot(&vv);
                }
                terms[3] -= w * 2.0 * sigma_s[i] * b0v.dot(&vv);
                terms[4] += w * 2.0 * ko * b0v.dot(&at(&diss, i, jj));
                let tv = t_vector(&at(uh, i, jj), lam[[i, jj]]);
                let coupling = j_field.at(i, jj).transpose() * tv * (div_h[[i, jj]] / d1_phi[[i, jj]]);
                terms[5] += w * 2.0 * coupling.dot(&vv);
            }
        }
        for jj in 0..grid.n2 {
            let v0 = at(v, 0, jj);
            let vl = at(v, n1, jj);
            terms[6] += h2 * v0.dot(&(b[1].at(0, jj) * v0));
            terms[7] -= h2 * vl.dot(&(b[1].at(n1, jj) * vl));
        }
    }
    let rhs: f64 = terms[1..].iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    (terms[0] - rhs, scale)
}

/// Ledger rows at every stored time of `traj`.
pub fn energy_ledger(basic: &BasicState, traj: &Trajectory, eta: EtaProfile) -> Result<EnergyLedger> {
    let grid = traj.grid;
    let cache = FrameCache::new(basic, eta)?;
    let sigma = SigmaWeight;
    let all = [0, 1, 2, 3, 4, 5];
    let mut rows = Vec::with_capacity(traj.times.len());
    for k in 0..traj.times.len() {
        let (t, state, rate) = (traj.times[k], &traj.states[k], &traj.rates[k]);
        let mut row = LedgerRow { t, i: 0.0, i0: 0.0, i1n: 0.0, isigma: 0.0, i2: 0.0, phi_l2: 0.0, identity_residual: 0.0, identity_scale: 0.0 };
        for side in Side::both() {
            let v = state.v.get(side);
            let d1: StateField = std::array::from_fn(|c| grid.d1(&v[c]));
            let d2: StateField = std::array::from_fn(|c| grid.d2(&v[c]));
            let sd1: StateField = std::array::from_fn(|c| {
                let mut a = d1[c].clone();
                for (i, mut r) in a.rows_mut().into_iter().enumerate() {
                    r *= sigma.value(grid.x1(i));
                }
                a
            });
            row.i += sq_norm(&grid, v, &all);
            row.i0 += sq_norm(&grid, rate.v.get(side), &all);
            row.i1n += sq_norm(&grid, &d1, &NONCHARACTERISTIC);
            row.isigma += sq_norm(&grid, &sd1, &all);
            row.i2 += sq_norm(&grid, &d2, &all);
        }
        row.phi_l2 = grid.boundary_inner(&state.phi, &state.phi).sqrt();
        let (res, scale) = cache.with(t, |fr| identity_terms(&grid, fr, state, rate, traj.forcing[k].as_ref(), traj))?;
        row.identity_residual = res;
        row.identity_scale = scale;
        rows.push(row);
    }
    Ok(EnergyLedger { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriReport {
    /// `||U'||_{1,*,T}` with `U' = J V`.
    pub solution: f64,
    /// `||phi||_{H^1(Gamma_T)}`.
    pub front: f64,
    /// `||F||_{1,*,T}`.
    pub forcing: f64,
    pub constant: f64,
}

fn stack(grid: &Grid, n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Array3<f64> {
    Array3::from_shape_fn((n, grid.n1 + 1, grid.n2), |(k, i, j)| f(k, i, j))
}

/// `C* = (||U'||_{1,*,T} + ||phi||_{H^1(Gamma_T)}) / ||F||_{1,*,T}`.
pub fn verify_apriori(basic: &BasicState, traj: &Trajectory) -> Result<AprioriReport> {
    let grid = traj.grid;
    let nt = traj.times.len();
    if nt < 3 {
        return Err(Error::Domain("a priori check needs at least three stored times".into()));
    }
    let dt = traj.snapshot_dt();
    let t0 = traj.times[0];
    // U' = J V at every stored time.
    let mut u_dot: Vec<Sided<StateField>> = Vec::with_capacity(nt);
    let mut j_cache: Option<Sided<CoeffField>> = None;
    for (k, &t) in traj.times.iter().enumerate() {
        let js = match (&j_cache, basic.is_stationary()) {
            (Some(j), true) => j.clone(),
            _ => {
                let snap = basic.at(t);
                let geo = snap.geometry(&grid);
                let op = assemble_snapshot(&grid, basic.eos.as_ref(), &snap, &geo, None, f64::INFINITY)?;
                let j = op.sides.map(|_, s| s.j.clone());
                j_cache = Some(j.clone());
                j
            }
        };
        let v = &traj.states[k].v;
        u_dot.push(Sided::from_fn(|side| {
            let mut out: StateField = std::array::from_fn(|_| grid.zeros());
            let vs = v.get(side);
            for i in 0..=grid.n1 {
                for j in 0..grid.n2 {
                    let u = js.get(side).at(i, j) * at(vs, i, j);
                    for c in 0..6 {
                        out[c][[i, j]] = u[c];
                    }
                }
            }
            out
        }));
    }
    let mut sol_sq = 0.0;
    let mut f_sq = 0.0;
    for side in Side::both() {
        for c in 0..6 {
            let g = GridFunction::space_time(grid, t0, dt, stack(&grid, nt, |k, i, j| u_dot[k].get(side)[c][[i, j]]));
            sol_sq += hm_star_norm(&g, 1, NormDomain::SpaceTime)?.total.powi(2);
            let g = GridFunction::space_time(
                grid,
                t0,
                dt,
                stack(&grid, nt, |k, i, j| traj.forcing[k].as_ref().map_or(0.0, |f| f.get(side)[c][[i, j]])),
            );
            f_sq += hm_star_norm(&g, 1, NormDomain::SpaceTime)?.total.powi(2);
        }
    }
    let phi = Array2::from_shape_fn((nt, grid.n2), |(k, j)| traj.states[k].phi[j]);
    let front = boundary_norm(&phi, &grid, dt, 1)?.total;
    let solution = sol_sq.sqrt();
    let forcing = f_sq.sqrt();
    if forcing == 0.0 {
        return Err(Error::Domain("a priori constant undefined for zero forcing".into()));
    }
    Ok(AprioriReport { solution, front, forcing, constant: (solution + front) / forcing })
}
