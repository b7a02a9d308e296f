//! Run configuration: a sectioned key-value file (TOML) whose sections all
//! reject unknown keys. Every key has a default, so an experiment needs
//! only `[experiment] kind = "..."`.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use vsheet_core::{IdealGas, PhysState, Side, Vec6};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    StabilityMap,
    Symmetrize,
    Evolve,
    EnergyReport,
    Compat,
    NashMoserDemo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::StabilityMap => "stability-map",
            Self::Symmetrize => "symmetrize",
            Self::Evolve => "evolve",
            Self::EnergyReport => "energy-report",
            Self::Compat => "compat",
            Self::NashMoserDemo => "nash-moser-demo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n1: usize,
    pub n2: usize,
    pub l1: f64,
    pub l2: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n1: 32, n2: 32, l1: 4.0, l2: std::f64::consts::TAU }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EosSection {
    pub gamma: f64,
}

impl Default for EosSection {
    fn default() -> Self {
        Self { gamma: IdealGas::default().gamma }
    }
}

/// Piecewise-constant basic state, `(p, u1, u2, H1, H2, S)` per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateSection {
    pub plus: [f64; 6],
    pub minus: [f64; 6],
}

impl Default for StateSection {
    fn default() -> Self {
        Self { plus: [1.0, 0.0, 0.2, 0.0, 1.0, 0.0], minus: [1.0, 0.0, -0.2, 0.0, 1.0, 0.0] }
    }
}

impl StateSection {
    pub fn vec(&self, side: Side) -> Vec6 {
        match side {
            Side::Plus => Vec6::from_column_slice(&self.plus),
            Side::Minus => Vec6::from_column_slice(&self.minus),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForcingKind {
    Zero,
    Pulse,
}

/// Linear evolution (used by `evolve` and `energy-report`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub t_end: f64,
    pub snapshot_dt: f64,
    pub cfl: f64,
    /// Fixed time step; checked against the CFL limit.
    pub dt: Option<f64>,
    pub forcing: ForcingKind,
    pub amplitude: f64,
    /// The pulse is switched off after this time.
    pub pulse_duration: f64,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self { t_end: 2.0, snapshot_dt: 0.1, cfl: 0.4, dt: None, forcing: ForcingKind::Pulse, amplitude: 1.0, pulse_duration: 1.0 }
    }
}

/// Margin over `([u2], |H2|)` with `u2 = +-[u2]/2`, `H2+ = H2- = |H2|`, and
/// `p`, `S` from the `+` state on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityMapSection {
    pub jump_max: f64,
    pub field_max: f64,
    pub jump_samples: usize,
    pub field_samples: usize,
}

impl Default for StabilityMapSection {
    fn default() -> Self {
        Self { jump_max: 2.0, field_max: 2.0, jump_samples: 41, field_samples: 41 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymmetrizeSection {
    pub samples: usize,
}

impl Default for SymmetrizeSection {
    fn default() -> Self {
        Self { samples: 1000 }
    }
}

/// Bump data around the basic state, the approximate solution with a time
/// cutoff at `t_max` (size at most `delta` on `[0, t_max/2]`) and its
/// forcing sampled on `[t_lo, t_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompatSection {
    pub order: usize,
    pub amplitude: f64,
    pub centre: f64,
    pub radius: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub samples: usize,
    pub t_max: f64,
    pub delta: f64,
}

impl Default for CompatSection {
    fn default() -> Self {
        Self { order: 2, amplitude: 0.05, centre: 2.0, radius: 1.0, t_lo: 1e-3, t_hi: 1e-1, samples: 9, t_max: 1.0, delta: 10.0 }
    }
}

/// Toy Nash-Moser problem around the fixed toy background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NashMoserSection {
    pub n1: usize,
    pub n2: usize,
    pub nt: usize,
    pub t_end: f64,
    pub amplitude: f64,
    pub delta: f64,
    pub theta0: f64,
    pub max_iter: usize,
}

impl Default for NashMoserSection {
    fn default() -> Self {
        let t = vsheet_nonlinear::nash_moser::ToySpec::default();
        Self { n1: t.n1, n2: t.n2, nt: t.nt, t_end: t.t_end, amplitude: t.amplitude, delta: t.delta, theta0: 2.0, max_iter: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Required `a+|H2+| + a-|H2-| - |[u2]|` for sampled states.
    pub stability_margin: f64,
    /// Hyperbolicity margin for initial data.
    pub hyperbolicity_margin: f64,
    /// Compatibility residual counted as zero.
    pub compatibility: f64,
    /// `lambda` balance residual counted as zero.
    pub lambda_balance: f64,
    /// Bookkeeping residual of the Nash-Moser sources.
    pub bookkeeping: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { stability_margin: 1e-3, hyperbolicity_margin: 0.1, compatibility: 1e-10, lambda_balance: 1e-12, bookkeeping: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub eos: EosSection,
    #[serde(default)]
    pub state: StateSection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub stability_map: StabilityMapSection,
    #[serde(default)]
    pub symmetrize: SymmetrizeSection,
    #[serde(default)]
    pub compat: CompatSection,
    #[serde(default)]
    pub nash_moser: NashMoserSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSection,
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive and finite, got {v}"))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<(), String> {
    if v >= min {
        Ok(())
    } else {
        Err(format!("{name} must be at least {min}, got {v}"))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text of the configuration, as hashed and written next to
    /// the artifacts.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn eos(&self) -> IdealGas {
        IdealGas::new(self.eos.gamma)
    }

    pub fn validate(&self) -> Result<(), String> {
        let g = &self.grid;
        at_least("grid.n1", g.n1, 8)?;
        at_least("grid.n2", g.n2, 8)?;
        positive("grid.l1", g.l1)?;
        positive("grid.l2", g.l2)?;
        if !(self.eos.gamma > 1.0 && self.eos.gamma.is_finite()) {
            return Err(format!("eos.gamma must exceed 1, got {}", self.eos.gamma));
        }
        let eos = self.eos();
        for side in Side::both() {
            let v = self.state.vec(side);
            let name = if side == Side::Plus { "state.plus" } else { "state.minus" };
            if v.iter().any(|x| !x.is_finite()) {
                return Err(format!("{name} has a non-finite entry"));
            }
            PhysState::from_vec(&v, side).ensure_admissible(&eos, 0.0).map_err(|e| format!("{name}: {e}"))?;
        }
        let e = &self.evolve;
        positive("evolve.t_end", e.t_end)?;
        positive("evolve.snapshot_dt", e.snapshot_dt)?;
        positive("evolve.cfl", e.cfl)?;
        if e.snapshot_dt > e.t_end {
            return Err("evolve.snapshot_dt exceeds evolve.t_end".into());
        }
        if let Some(dt) = e.dt {
            positive("evolve.dt", dt)?;
        }
        positive("evolve.pulse_duration", e.pulse_duration)?;
        if !e.amplitude.is_finite() {
            return Err("evolve.amplitude must be finite".into());
        }
        let m = &self.stability_map;
        positive("stability_map.jump_max", m.jump_max)?;
        positive("stability_map.field_max", m.field_max)?;
        at_least("stability_map.jump_samples", m.jump_samples, 2)?;
        at_least("stability_map.field_samples", m.field_samples, 2)?;
        at_least("symmetrize.samples", self.symmetrize.samples, 1)?;
        let c = &self.compat;
        at_least("compat.order", c.order, 1)?;
        positive("compat.radius", c.radius)?;
        positive("compat.t_lo", c.t_lo)?;
        if c.t_hi <= c.t_lo {
            return Err("compat.t_hi must exceed compat.t_lo".into());
        }
        at_least("compat.samples", c.samples, 2)?;
        positive("compat.t_max", c.t_max)?;
        positive("compat.delta", c.delta)?;
        let n = &self.nash_moser;
        at_least("nash_moser.n1", n.n1, 8)?;
        at_least("nash_moser.n2", n.n2, 8)?;
        at_least("nash_moser.nt", n.nt, 5)?;
        positive("nash_moser.t_end", n.t_end)?;
        positive("nash_moser.delta", n.delta)?;
        if n.theta0 < 1.0 {
            return Err(format!("nash_moser.theta0 must be at least 1, got {}", n.theta0));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.stability_margin", t.stability_margin),
            ("tolerances.hyperbolicity_margin", t.hyperbolicity_margin),
            ("tolerances.compatibility", t.compatibility),
            ("tolerances.lambda_balance", t.lambda_balance),
            ("tolerances.bookkeeping", t.bookkeeping),
        ] {
            positive(name, v)?;
        }
        Ok(())
    }
}
