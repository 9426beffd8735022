use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::error;

use dicke_squeeze::cli::run;
use dicke_squeeze::config::parse_config;

/// Geometric-phase spin-squeezing simulator.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent sweep rows; overrides `workers` in the config.
    #[arg(long, env = "DICKE_SQUEEZE_WORKERS")]
    workers: Option<usize>,
    /// Only report warnings and errors.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            error!("cannot read {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(1);
        }
    };
    if let Some(out) = args.out {
        cfg.output = out;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Err(e) = cfg.validate() {
        error!("{e}");
        return ExitCode::from(1);
    }
    match run(&cfg) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            error!("{e}");
            ExitCode::from(1)
        }
    }
}
