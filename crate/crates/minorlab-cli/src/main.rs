//! `minorlab` — reproducible Monte Carlo experiments on the Wigner minor
//! process. Each subcommand selects an experiment kind; parameters come from
//! a JSON config whose `kind` field must match the subcommand. Exit codes:
//! 0 success, 1 invariant violation or runtime failure, 2 config error.

use clap::{Args, Parser, Subcommand};
use minorlab::harness::{run_experiment, ExperimentConfig, ExperimentKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "minorlab", version, about = "Monte Carlo laboratory for Wigner minor processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker count override (default: MINORLAB_WORKERS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (only `csv` is supported).
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Incremental minor-process trajectories with Tracy-Widom scaling.
    Simulate(Common),
    /// Moderate-deviation tail curves and exponent fits.
    Tails(Common),
    /// Joint tail-event factorization across nested minor pairs.
    Decorrelate(Common),
    /// Coupled Ornstein-Uhlenbeck / Dyson Brownian motion flows.
    Flow(Common),
    /// Normalized extrema traces with fractional-logarithm reference marks.
    Lfl(Common),
    /// Self-consistent density of states for deformed ensembles.
    Dyson(Common),
    /// Engine-vs-oracle invariant battery; exits nonzero on any violation.
    OracleCheck(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Simulate(c)
            | Command::Tails(c)
            | Command::Decorrelate(c)
            | Command::Flow(c)
            | Command::Lfl(c)
            | Command::Dyson(c)
            | Command::OracleCheck(c) => c,
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "trajectories",
            Command::Tails(_) => "tails",
            Command::Decorrelate(_) => "decorrelate",
            Command::Flow(_) => "flow",
            Command::Lfl(_) => "lfl",
            Command::Dyson(_) => "dyson",
            Command::OracleCheck(_) => "oracle-check",
        }
    }
}

/// Built-in config for `oracle-check` when none is supplied.
fn default_oracle_config() -> ExperimentConfig {
    ExperimentConfig {
        schema_version: minorlab::harness::SCHEMA_VERSION,
        kind: ExperimentKind::OracleCheck { sizes: vec![8, 16, 32, 64, 128], instances: 10 },
        ensemble: minorlab::harness::EnsembleParams::gaussian(minorlab::Beta::One),
        seed: 1,
        workers: 0,
        out_dir: PathBuf::from("out/oracle-check"),
    }
}

fn load_config(cmd: &Command) -> Result<ExperimentConfig, String> {
    let common = cmd.common();
    if common.format != "csv" {
        return Err(format!("unsupported --format {:?} (only csv)", common.format));
    }
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            ExperimentConfig::from_json(&text).map_err(|e| e.to_string())?
        }
        None if matches!(cmd, Command::OracleCheck(_)) => default_oracle_config(),
        None => return Err("--config is required for this subcommand".into()),
    };
    if cfg.kind.name() != cmd.kind_name() {
        return Err(format!(
            "config kind {:?} does not match subcommand {:?}",
            cfg.kind.name(),
            cmd.kind_name()
        ));
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = common.workers {
        cfg.workers = workers;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli.command) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(2);
        }
    };
    match run_experiment(&cfg) {
        Ok(summary) => {
            println!("wrote {}", summary.manifest_path.display());
            for (k, v) in &summary.metrics {
                println!("  {k} = {v:.6}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
