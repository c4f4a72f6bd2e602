use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xprob_cli::{parse_config, resolve_workers, run, ConfigError, ExperimentKind, OutputFormat, RunConfig};

/// Spin dynamics with a stochastic energy-conserving jump channel.
#[derive(Parser)]
#[command(name = "xprob", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-reversal echo, optionally over a ladder of jump rates.
    Echo(RunArgs),
    /// Relaxation of energy-shell occupations toward uniform.
    Equilibrate(RunArgs),
    /// Single-spin level populations against the canonical law.
    BoltzmannCheck(RunArgs),
    /// Time correlation functions along long trajectories.
    Correlate(RunArgs),
    /// Time average against the energy-shell average of an observable.
    Ergodicity(RunArgs),
    /// Partition functions and occupation profiles, no dynamics.
    Ensemble(RunArgs),
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed_base`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `n_trajectories`.
    #[arg(long)]
    trajectories: Option<usize>,
    /// Overrides `output_path`; stdout when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Worker threads; defaults to XPROB_WORKERS, then the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn load(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e: ConfigError| format!("{}: {e}", path.display()))
}

fn execute(kind: ExperimentKind, args: RunArgs) -> Result<(), (u8, String)> {
    let config_err = |m: String| (EXIT_CONFIG, m);
    let mut config = load(&args.config).map_err(config_err)?;
    if config.experiment.kind() != kind {
        return Err(config_err(format!(
            "{}: config describes a `{}` run, not `{kind}`",
            args.config.display(),
            config.experiment.kind()
        )));
    }
    if let Some(seed) = args.seed {
        config.seed_base = seed;
    }
    if let Some(n) = args.trajectories {
        if n == 0 {
            return Err(config_err("--trajectories must be >= 1".into()));
        }
        config.n_trajectories = n;
    }
    if let Some(out) = args.out {
        config.output_path = Some(out);
    }
    if let Some(f) = args.format {
        config.output_format = f.parse::<OutputFormat>().map_err(config_err)?;
    }
    let workers = resolve_workers(args.workers).map_err(config_err)?;
    log::info!("running {kind} with {} trajectories on {workers} workers", config.n_trajectories);

    let record = run(&config, workers).map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
    for note in &record.notes {
        log::warn!("{note}");
    }
    record
        .emit(config.output_format, config.output_path.as_deref())
        .map_err(|e| (EXIT_RUNTIME, format!("cannot write output: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Validate { config } => {
            return match load(&config) {
                Ok(c) => {
                    println!(
                        "{}: valid `{}` run, {} trajectories, fingerprint {}",
                        config.display(),
                        c.experiment.kind(),
                        c.n_trajectories,
                        xprob_cli::record::fingerprint(&c)
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CONFIG)
                }
            };
        }
        Command::Echo(a) => (ExperimentKind::Echo, a),
        Command::Equilibrate(a) => (ExperimentKind::Equilibrate, a),
        Command::BoltzmannCheck(a) => (ExperimentKind::BoltzmannCheck, a),
        Command::Correlate(a) => (ExperimentKind::Correlate, a),
        Command::Ergodicity(a) => (ExperimentKind::Ergodicity, a),
        Command::Ensemble(a) => (ExperimentKind::Ensemble, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
