//! `freqcache` — analyze, optimize, and simulate joint frequency reuse
//! and edge caching in backhaul-limited small-cell networks.

use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use freqcache_cli::{
    apply_overrides, load_config, CliError, ExperimentConfig, Overrides, RunOutput,
};

#[derive(Parser)]
#[command(
    name = "freqcache",
    about = "Joint frequency reuse and cache optimization for backhaul-limited small cells",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Flat key=value configuration file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for all random streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per data point.
    #[arg(long)]
    trials: Option<u32>,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sweep axis: B_C, B_B, gamma, or none.
    #[arg(long)]
    axis: Option<String>,
    /// Inclusive sweep range start:stop:step.
    #[arg(long)]
    range: Option<String>,
    /// Comma-separated schemes: proposed, mpc, gcp, mpc-reuse, gcp-reuse.
    #[arg(long)]
    schemes: Option<String>,
    /// Freeze the trial-zero geometry and redraw requests/fading only.
    #[arg(long)]
    fixed_ppp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form success report at the optimized plan.
    Analytic(CommonArgs),
    /// Optimize the number of subbands and the cache storage allocation.
    Optimize(CommonArgs),
    /// Monte Carlo estimate at the current operating point.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Write the trial-zero realization (CSV points) here.
        #[arg(long)]
        dump_realization: Option<PathBuf>,
    },
    /// Sweep an axis over the configured schemes, emitting CSV.
    Sweep(CommonArgs),
    /// Approximation-gap table: closed form vs simulation per sweep value.
    CompareApprox(CommonArgs),
}

fn build_config(common: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = load_config(common.config.as_deref())?;
    let overrides = Overrides {
        seed: common.seed,
        trials: common.trials,
        out: common.out.clone(),
        axis: common.axis.clone(),
        range: common.range.clone(),
        schemes: common.schemes.clone(),
        fixed_ppp: common.fixed_ppp,
    };
    apply_overrides(&mut cfg, &overrides)?;
    Ok(cfg)
}

fn emit(cfg: &ExperimentConfig, output: RunOutput) -> Result<(), CliError> {
    for warning in &output.warnings {
        eprintln!("warning: {warning}");
    }
    match &cfg.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
            file.write_all(output.text.as_bytes())
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", output.text),
    }
    Ok(())
}

fn run(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Analytic(common) => {
            let cfg = build_config(common)?;
            let out = freqcache_cli::run_analytic(&cfg)?;
            emit(&cfg, out)
        }
        Command::Optimize(common) => {
            let cfg = build_config(common)?;
            let out = freqcache_cli::run_optimize(&cfg)?;
            emit(&cfg, out)
        }
        Command::Simulate {
            common,
            dump_realization,
        } => {
            let cfg = build_config(common)?;
            let out = freqcache_cli::run_simulate(&cfg, dump_realization.as_deref())?;
            emit(&cfg, out)
        }
        Command::Sweep(common) => {
            let cfg = build_config(common)?;
            let out = freqcache_cli::run_sweep(&cfg)?;
            emit(&cfg, out)
        }
        Command::CompareApprox(common) => {
            let cfg = build_config(common)?;
            let out = freqcache_cli::compare_approximation(&cfg)?;
            emit(&cfg, out)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                let _ = err.print();
                std::process::exit(0);
            }
            let _ = err.print();
            std::process::exit(1);
        }
    };
    if let Err(err) = run(&cli.command) {
        eprintln!("{err}");
        std::process::exit(err.exit_code());
    }
}
