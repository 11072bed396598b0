//! Command-line front end: run experiments, audit traces and aggregate reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cfbandit::config::{Check, ExperimentConfig};
use cfbandit::harness::{audit_trace, report, run_experiment};

#[derive(Parser)]
#[command(
    name = "cfb",
    version,
    about = "Optimistic contextual bandit experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment config and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of replications, overriding the config.
        #[arg(long)]
        seeds: Option<usize>,
        /// Worker threads for running seeds concurrently.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Check a logged trace; exits non-zero when any check fails.
    Audit {
        #[arg(long)]
        trace: PathBuf,
        /// Comma-separated subset of lemma2, elliptical, replay, prop1.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "lemma2,elliptical,replay,prop1"
        )]
        checks: Vec<String>,
        /// Experiment config; defaults to config.json next to the trace.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Aggregate a run directory into a regret-curve CSV.
    Report {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CFB_LOG", "warn")).init();
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> cfbandit::Result<bool> {
    match command {
        Command::Run {
            config,
            out,
            seeds,
            parallel,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out =
                out.or_else(|| cfg.output_dir.clone())
                    .ok_or_else(|| cfbandit::Error::Config {
                        path: "output_dir".into(),
                        message: "no --out given and the config has no output_dir".into(),
                    })?;
            let summary = run_experiment(&cfg, &out, seeds, parallel)?;
            println!("{}", serde_json::to_string_pretty(&summary.bound)?);
            Ok(summary.audits_pass())
        }
        Command::Audit {
            trace,
            checks,
            config,
        } => {
            let checks = checks
                .iter()
                .map(|c| c.parse())
                .collect::<cfbandit::Result<Vec<Check>>>()?;
            let result = audit_trace(&trace, &checks, config.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&result)?);
            Ok(result.pass)
        }
        Command::Report { runs, out } => {
            let curve = report(&runs, &out)?;
            if let Some(last) = curve.last() {
                println!(
                    "t={} seeds={} mean pseudo-regret {:.3} (q10 {:.3}, q90 {:.3})",
                    last.t, last.n, last.mean_pseudo, last.q10_pseudo, last.q90_pseudo
                );
            }
            Ok(true)
        }
    }
}
