//! The six experiments. Each writes its artifacts through [`Artifacts`]
//! and draws all randomness from the seeded generator it is given.

use crate::artifacts::{csv, num, Artifacts};
use crate::config::{ForcingKind, RunConfig};
use crate::{Log, RunError};
use ndarray::{Array2, ArrayD, IxDyn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;
use vsheet_core::grid::write_binary;
use vsheet_core::ramp::EtaProfile;
use vsheet_core::symmetrizer::{build_lambda_vec, check_b0_positive, check_stability_vec};
use vsheet_core::{Eos, Grid, IdealGas, Side, Sided, Vec6};
use vsheet_linear::energy::DEFAULT_ETA;
use vsheet_linear::{constraint_monitor, energy_ledger, verify_apriori, AprioriReport, BasicState, FnForcing, Forcing, LinearSolver, SolverConfig, Trajectory, ZeroForcing};
use vsheet_nonlinear::compat::{build_approximate, bump_data, check_compatibility, forcing_fa, log_log_slope, time_jet, CompatReport, Smallness};
use vsheet_nonlinear::nash_moser::{run, toy_problem, NashMoserConfig, RunReport, ToySpec};
use vsheet_nonlinear::operator::MhdOperator;
use vsheet_nonlinear::spacetime::SpaceTimeGrid;

fn grid(cfg: &RunConfig) -> Result<Grid, RunError> {
    let g = &cfg.grid;
    Ok(Grid::new(g.n1, g.n2, g.l1, g.l2)?)
}

/// `|H2|` at which `a+|H2| + a-|H2| = [u2]` for equal states up to `u2`:
/// `4 h^2 = J^2 (rho + h^2 rho_p)`; infinite when no field stabilizes `J`.
pub fn critical_field(jump: f64, rho: f64, rho_p: f64) -> f64 {
    let d = 4.0 - jump * jump * rho_p;
    if d <= 0.0 {
        f64::INFINITY
    } else {
        jump * (rho / d).sqrt()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityMapSummary {
    pub points: usize,
    /// Lines of constant `[u2]` along which the margin changes sign.
    pub sign_changes: usize,
    /// Sign changes not bracketing the closed-form critical field.
    pub misplaced: usize,
}

pub fn stability_map(cfg: &RunConfig, art: &mut Artifacts) -> Result<StabilityMapSummary, RunError> {
    let eos = cfg.eos();
    let m = &cfg.stability_map;
    let (p, s) = (cfg.state.plus[0], cfg.state.plus[5]);
    let (rho, rho_p) = (eos.density(p, s), eos.density_dp(p, s));
    let mut rows = Vec::with_capacity(m.jump_samples * m.field_samples);
    let (mut sign_changes, mut misplaced) = (0, 0);
    for a in 0..m.jump_samples {
        let jump = m.jump_max * a as f64 / (m.jump_samples - 1) as f64;
        let crit = critical_field(jump, rho, rho_p);
        let mut prev: Option<(f64, f64)> = None;
        for b in 0..m.field_samples {
            let h = m.field_max * b as f64 / (m.field_samples - 1) as f64;
            let up = Vec6::new(p, 0.0, 0.5 * jump, 0.0, h, s);
            let um = Vec6::new(p, 0.0, -0.5 * jump, 0.0, h, s);
            let r = check_stability_vec(&up, &um, &eos, cfg.tolerances.stability_margin);
            if let Some((h0, m0)) = prev {
                if (m0 > 0.0) != (r.margin > 0.0) {
                    sign_changes += 1;
                    if !(h0..=h).contains(&crit) {
                        misplaced += 1;
                    }
                }
            }
            prev = Some((h, r.margin));
            rows.push(vec![num(jump), num(h), num(r.margin), num(crit), u8::from(r.margin > 0.0).to_string()]);
        }
    }
    let points = rows.len();
    art.write("stability_map.csv", csv(&["jump_u2", "field_h2", "margin", "critical_field", "stable"], rows).as_bytes())?;
    let summary = StabilityMapSummary { points, sign_changes, misplaced };
    art.write_json("stability_map.json", &summary)?;
    Ok(summary)
}

/// Random boundary states `(p, 0, u2, 0, H2, S)` on both sides whose
/// stability margin is at least `margin`.
pub fn sample_boundary_pair(rng: &mut impl Rng, eos: &dyn Eos, margin: f64) -> (Vec6, Vec6) {
    loop {
        let mut draw = || {
            let p = rng.random_range(0.5..2.0);
            let u2 = rng.random_range(-1.0..1.0);
            let h2 = rng.random_range(-2.0..2.0);
            let s = rng.random_range(-0.5..0.5);
            Vec6::new(p, 0.0, u2, 0.0, h2, s)
        };
        let (up, um) = (draw(), draw());
        if check_stability_vec(&up, &um, eos, margin).satisfied {
            return (up, um);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetrizeSummary {
    pub samples: usize,
    pub max_balance_residual: f64,
    /// Largest `|lambda+-| / a+-`; below one when the bound holds.
    pub max_lambda_ratio: f64,
    /// Pairs where the analytic criterion and the eigenvalue sign disagree.
    pub b0_disagreements: usize,
    pub min_b0_eigenvalue: f64,
    pub balance_within_tolerance: bool,
}

pub fn symmetrize(cfg: &RunConfig, art: &mut Artifacts, rng: &mut ChaCha8Rng) -> Result<SymmetrizeSummary, RunError> {
    let eos = cfg.eos();
    let mut rows = Vec::with_capacity(cfg.symmetrize.samples);
    let mut sum = SymmetrizeSummary {
        samples: cfg.symmetrize.samples,
        max_balance_residual: 0.0,
        max_lambda_ratio: 0.0,
        b0_disagreements: 0,
        min_b0_eigenvalue: f64::INFINITY,
        balance_within_tolerance: true,
    };
    for k in 0..cfg.symmetrize.samples {
        let (up, um) = sample_boundary_pair(rng, &eos, cfg.tolerances.stability_margin);
        let st = check_stability_vec(&up, &um, &eos, 0.0);
        let lam = build_lambda_vec(&up, &um, &eos)?;
        let balance = lam.balance_residual(&up, &um).abs();
        let bp = check_b0_positive(&up, lam.plus, &eos);
        let bm = check_b0_positive(&um, lam.minus, &eos);
        sum.max_balance_residual = sum.max_balance_residual.max(balance);
        sum.max_lambda_ratio = sum.max_lambda_ratio.max(lam.plus.abs() / st.a_plus).max(lam.minus.abs() / st.a_minus);
        sum.b0_disagreements += [bp, bm].iter().filter(|c| c.analytic != (c.min_eig > 0.0)).count();
        sum.min_b0_eigenvalue = sum.min_b0_eigenvalue.min(bp.min_eig).min(bm.min_eig);
        rows.push(
            [k as f64, up[0], up[2], up[4], up[5], um[0], um[2], um[4], um[5], st.margin, lam.plus, lam.minus, st.a_plus, st.a_minus, balance, bp.min_eig, bm.min_eig]
                .iter()
                .enumerate()
                .map(|(c, &v)| if c == 0 { k.to_string() } else { num(v) })
                .collect(),
        );
    }
    sum.balance_within_tolerance = sum.max_balance_residual <= cfg.tolerances.lambda_balance;
    let header = [
        "sample", "p_plus", "u2_plus", "h2_plus", "s_plus", "p_minus", "u2_minus", "h2_minus", "s_minus", "margin", "lambda_plus", "lambda_minus", "a_plus",
        "a_minus", "balance_residual", "b0_min_eig_plus", "b0_min_eig_minus",
    ];
    art.write("symmetrize.csv", csv(&header, rows).as_bytes())?;
    art.write_json("symmetrize.json", &sum)?;
    Ok(sum)
}

/// Pulse `sin^2(pi t / T_p)` for `t < T_p`, localized near the front, with
/// two `x2` modes whose phases come from the seed.
fn pulse_forcing(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> impl Fn(Side, f64, f64, f64) -> Vec6 + Sync {
    let e = cfg.evolve;
    let k2 = std::f64::consts::TAU / cfg.grid.l2;
    let phases: [f64; 2] = [rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.0..std::f64::consts::TAU)];
    move |_s: Side, t: f64, x1: f64, x2: f64| {
        if t <= 0.0 || t >= e.pulse_duration {
            return Vec6::zeros();
        }
        let w = (std::f64::consts::PI * t / e.pulse_duration).sin().powi(2);
        let a = e.amplitude * w * (-10.0 * (x1 - 0.6).powi(2)).exp() * ((k2 * x2 + phases[0]).cos() + 0.5 * (2.0 * k2 * x2 + phases[1]).sin());
        Vec6::new(a, 0.3 * a, 0.0, 0.0, 0.0, 0.0)
    }
}

fn evolve_linear(cfg: &RunConfig, rng: &mut ChaCha8Rng, log: &Log) -> Result<(BasicState, Trajectory), RunError> {
    let g = grid(cfg)?;
    let eos: Arc<dyn Eos> = Arc::new(IdealGas::new(cfg.eos.gamma));
    let basic = BasicState::constant(g, eos, cfg.state.vec(Side::Plus), cfg.state.vec(Side::Minus));
    let e = cfg.evolve;
    let sc = SolverConfig { cfl: e.cfl, t_end: e.t_end, snapshot_dt: e.snapshot_dt, dt: e.dt, ..SolverConfig::default() };
    let solver = LinearSolver::new(&basic, sc)?;
    let forcing: Box<dyn Forcing> = match e.forcing {
        ForcingKind::Zero => Box::new(ZeroForcing),
        ForcingKind::Pulse => Box::new(FnForcing { f: pulse_forcing(cfg, rng) }),
    };
    let traj = solver.evolve(forcing.as_ref())?;
    log.info(1, format!("evolved {} steps of dt = {:.3e} to t = {}", traj.steps, traj.dt, e.t_end));
    Ok((basic, traj))
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveSummary {
    pub steps: usize,
    pub dt: f64,
    pub snapshots: usize,
    pub final_max_abs: f64,
    pub max_ledger_entry: f64,
    pub relative_identity_residual: f64,
}

pub fn evolve(cfg: &RunConfig, art: &mut Artifacts, rng: &mut ChaCha8Rng, log: &Log) -> Result<EvolveSummary, RunError> {
    let (basic, traj) = evolve_linear(cfg, rng, log)?;
    let g = traj.grid;
    let ledger = energy_ledger(&basic, &traj, EtaProfile::new(DEFAULT_ETA))?;
    let mut buf = Vec::new();
    ledger.write_csv(&mut buf)?;
    art.write("energy_ledger.csv", &buf)?;
    let last = traj.states.last().expect("trajectory has its initial state");
    let body = ArrayD::from_shape_fn(IxDyn(&[2, 6, g.n1 + 1, g.n2]), |ix| {
        let side = if ix[0] == 0 { Side::Plus } else { Side::Minus };
        last.v.get(side)[ix[1]][[ix[2], ix[3]]]
    });
    let mut bin = Vec::new();
    write_binary(&mut bin, &body, &[1.0, 1.0, g.h1(), g.h2()])?;
    art.write("final_state.bin", &bin)?;
    let front = Array2::from_shape_fn((traj.states.len(), g.n2), |(k, j)| traj.states[k].phi[j]).into_dyn();
    let mut bin = Vec::new();
    write_binary(&mut bin, &front, &[traj.snapshot_dt(), g.h2()])?;
    art.write("front_history.bin", &bin)?;
    let max_ledger_entry = ledger.rows.iter().flat_map(|r| [r.i, r.i0, r.i1n, r.isigma, r.i2, r.phi_l2, r.identity_residual]).fold(0.0f64, |a, v| a.max(v.abs()));
    let summary = EvolveSummary {
        steps: traj.steps,
        dt: traj.dt,
        snapshots: traj.times.len(),
        final_max_abs: last.max_abs(),
        max_ledger_entry,
        relative_identity_residual: ledger.relative_identity_residual(),
    };
    art.write_json("evolve.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReportSummary {
    pub relative_identity_residual: f64,
    /// Absent when the forcing vanishes.
    pub apriori: Option<AprioriReport>,
    pub constraint_growth: f64,
}

pub fn energy_report(cfg: &RunConfig, art: &mut Artifacts, rng: &mut ChaCha8Rng, log: &Log) -> Result<EnergyReportSummary, RunError> {
    let (basic, traj) = evolve_linear(cfg, rng, log)?;
    let ledger = energy_ledger(&basic, &traj, EtaProfile::new(DEFAULT_ETA))?;
    let mut buf = Vec::new();
    ledger.write_csv(&mut buf)?;
    art.write("energy_ledger.csv", &buf)?;
    let series = constraint_monitor(&basic, &traj)?;
    let rows = series.samples.iter().map(|s| vec![num(s.t), num(s.divergence), num(s.relative_divergence()), num(s.boundary), num(s.relative_boundary())]);
    art.write("constraints.csv", csv(&["t", "divergence", "relative_divergence", "boundary", "relative_boundary"], rows).as_bytes())?;
    let apriori = verify_apriori(&basic, &traj)?;
    let summary = EnergyReportSummary {
        relative_identity_residual: ledger.relative_identity_residual(),
        apriori: (apriori.forcing > 0.0).then_some(apriori),
        constraint_growth: series.growth_factor(),
    };
    art.write_json("energy_report.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatSummary {
    pub report: CompatReport,
    pub compatible_order: Option<usize>,
    pub smallness: Smallness,
    /// Log-log slope of `|F^a(t)|` over the sampled times.
    pub forcing_slope: f64,
}

pub fn compat(cfg: &RunConfig, art: &mut Artifacts, log: &Log) -> Result<CompatSummary, RunError> {
    let g = grid(cfg)?;
    let op = MhdOperator::new(g, Arc::new(cfg.eos()));
    let c = cfg.compat;
    let bg = Sided::new(cfg.state.vec(Side::Plus), cfg.state.vec(Side::Minus));
    let data = bump_data(&g, bg.clone(), c.amplitude, c.centre, c.radius);
    data.validate(&op, cfg.tolerances.hyperbolicity_margin, cfg.tolerances.stability_margin)?;
    let jet = time_jet(&op, &data, c.order)?;
    let report = check_compatibility(&g, &jet, c.order);
    let compatible_order = report.compatible_order(cfg.tolerances.compatibility);
    let st = SpaceTimeGrid::new(g, 0.5 * c.t_max, 9)?;
    let (approx, smallness) = build_approximate(&op, jet, bg, c.t_max, c.delta, &st)?;
    let ts: Vec<f64> = (0..c.samples).map(|k| c.t_lo * (c.t_hi / c.t_lo).powf(k as f64 / (c.samples - 1) as f64)).collect();
    let mut norms = Vec::with_capacity(ts.len());
    for &t in &ts {
        let f = forcing_fa(&op, &approx, t)?;
        norms.push(Side::both().iter().flat_map(|&s| f.get(s).iter()).map(|x| g.l2_sq(x)).sum::<f64>().sqrt());
    }
    let forcing_slope = log_log_slope(&ts, &norms);
    log.info(1, format!("forcing slope {forcing_slope:.4}, compatible to order {compatible_order:?}"));
    let rows = ts.iter().zip(&norms).map(|(t, n)| vec![num(*t), num(*n)]);
    art.write("forcing.csv", csv(&["t", "forcing_l2"], rows).as_bytes())?;
    let summary = CompatSummary { report, compatible_order, smallness, forcing_slope };
    art.write_json("compat.json", &summary)?;
    Ok(summary)
}

pub fn nash_moser_demo(cfg: &RunConfig, art: &mut Artifacts, log: &Log) -> Result<RunReport, RunError> {
    let n = cfg.nash_moser;
    let spec = ToySpec { n1: n.n1, n2: n.n2, nt: n.nt, t_end: n.t_end, amplitude: n.amplitude, delta: n.delta, ..ToySpec::default() };
    let problem = toy_problem(&spec)?;
    let nm = NashMoserConfig { theta0: n.theta0, max_iter: n.max_iter, ..NashMoserConfig::default() };
    let mut lines = String::new();
    let report = run(&problem, &nm, |it| {
        let line = serde_json::to_string(it).expect("iterate serializes");
        log.info(2, line.clone());
        lines.push_str(&line);
        lines.push('\n');
    })?;
    log.info(1, format!("{} iterates, stop: {:?}, final residual {:.3e}", report.iterates.len(), report.stop, report.final_residual));
    art.write("iterates.jsonl", lines.as_bytes())?;
    art.write_json("nash_moser.json", &report)?;
    if report.steps.iter().any(|s| s.bookkeeping_residual > cfg.tolerances.bookkeeping) {
        return Err(RunError::Numerical("bookkeeping residual above tolerance".into()));
    }
    Ok(report)
}
