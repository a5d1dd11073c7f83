//! Command-line entry point.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::run::{run, RunError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "optimist", version, about = "Loss-calibrated optimistic bandit and RL experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run ℓ-UCB on a logistic bandit and write traces, summary and plot.
    BanditRun(Common),
    /// Run ℓ-GOLF on the episodic fixture.
    RlRun(Common),
    /// Check the loss conditions on grids and random draws.
    VerifyLosses(Common),
    /// Build and verify the eluder lower-bound certificate.
    EluderWitness(Common),
    /// Monte-Carlo coverage of the uniform Bernstein inequality.
    BernsteinTest(Common),
    /// Rebuild summary.csv and the plot from existing trace CSVs.
    Report(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment file; the subcommand's defaults are used without it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed, overriding the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 2 when the experiment's checks fail.
    #[arg(long)]
    check: bool,
}

fn effective_config(kind: ExperimentKind, c: &Common) -> Result<ExperimentConfig, RunError> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default_for(kind),
    };
    if cfg.kind != kind {
        return Err(crate::config::ConfigError {
            key: "kind".into(),
            message: format!("`{}` does not match this subcommand, which expects `{}`", cfg.kind.name(), kind.name()),
        }
        .into());
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parse `argv`, run the experiment and return the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (kind, common) = match &cli.command {
        Command::BanditRun(c) => (ExperimentKind::Bandit, c),
        Command::RlRun(c) => (ExperimentKind::Rl, c),
        Command::VerifyLosses(c) => (ExperimentKind::Losses, c),
        Command::EluderWitness(c) => (ExperimentKind::Eluder, c),
        Command::BernsteinTest(c) => (ExperimentKind::Bernstein, c),
        Command::Report(c) => (ExperimentKind::Report, c),
    };
    let outcome = effective_config(kind, common).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(o) => {
            for m in &o.messages {
                println!("{m}");
            }
            println!("wrote {} files", o.files.len());
            if common.check && !o.check_pass {
                eprintln!("check failed");
                EXIT_CHECK_FAILED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
