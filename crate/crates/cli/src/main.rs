use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use vsheet_cli::config::RunConfig;
use vsheet_cli::{run_experiment, Log, RunError};

/// Run one current-vortex sheet experiment from a configuration file.
#[derive(Parser, Debug)]
#[command(name = "vsheet", version)]
struct Args {
    /// Sectioned key-value (TOML) configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir` without entering the recorded config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides `[experiment] seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=2))]
    verbosity: u8,
}

fn load(args: &Args) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| RunError::Validation(format!("{}: {e}", args.config.display())))?;
    let mut cfg = RunConfig::parse(&text).map_err(RunError::Validation)?;
    if let Some(seed) = args.seed {
        cfg.experiment.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let log = Log { verbosity: args.verbosity };
    let result = load(&args).and_then(|cfg| {
        let out = args.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        run_experiment(&cfg, &out, log)
    });
    match result {
        Ok(m) => {
            log.info(1, format!("wrote {} artifacts, config {}", m.artifacts.len(), &m.config_sha256[..12]));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
