//! Batch front-end: configuration, experiment dispatch and artifact output
//! with a manifest per run.

pub mod artifacts;
pub mod config;
pub mod experiments;

use artifacts::{Artifacts, Manifest};
use config::{ExperimentKind, RunConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// Failure of a run, split by exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    /// Invalid configuration, inadmissible input or I/O failure.
    Validation(String),
    /// Non-finite values, CFL violation or divergence.
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Validation(m) => write!(f, "validation failed: {m}"),
            Self::Numerical(m) => write!(f, "numerical abort: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<vsheet_core::Error> for RunError {
    fn from(e: vsheet_core::Error) -> Self {
        if e.is_numerical() {
            Self::Numerical(e.to_string())
        } else {
            Self::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        Self::Validation(format!("io: {e}"))
    }
}

/// Progress messages on stderr up to a verbosity level.
#[derive(Debug, Clone, Copy)]
pub struct Log {
    pub verbosity: u8,
}

impl Log {
    pub fn info(&self, level: u8, msg: impl AsRef<str>) {
        if level <= self.verbosity {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Run the configured experiment, writing its artifacts, `config.toml` and
/// `manifest.json` to `out`.
pub fn run_experiment(cfg: &RunConfig, out: &Path, log: Log) -> Result<Manifest, RunError> {
    cfg.validate().map_err(RunError::Validation)?;
    let mut art = Artifacts::create(out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.experiment.seed);
    log.info(1, format!("{} -> {}", cfg.experiment.kind.name(), out.display()));
    match cfg.experiment.kind {
        ExperimentKind::StabilityMap => {
            experiments::stability_map(cfg, &mut art)?;
        }
        ExperimentKind::Symmetrize => {
            experiments::symmetrize(cfg, &mut art, &mut rng)?;
        }
        ExperimentKind::Evolve => {
            experiments::evolve(cfg, &mut art, &mut rng, &log)?;
        }
        ExperimentKind::EnergyReport => {
            experiments::energy_report(cfg, &mut art, &mut rng, &log)?;
        }
        ExperimentKind::Compat => {
            experiments::compat(cfg, &mut art, &log)?;
        }
        ExperimentKind::NashMoserDemo => {
            experiments::nash_moser_demo(cfg, &mut art, &log)?;
        }
    }
    Ok(art.finish(cfg)?)
}
