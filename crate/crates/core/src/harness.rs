//! Experiment runner: seeded replications, on-disk artifacts, audits and aggregate reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{
    allocation_audit, contextual_potential_audit, falcon_reports, potential_audit, replay_falcon,
    replay_ia, replay_uccb, AllocationStats, ContextualPotentialReport, PotentialReport,
    ReplayReport,
};
use crate::bounds::RegretBound;
use crate::config::{build_agent, AgentSpec, Check, ExperimentConfig};
use crate::env::{run_episode, Environment, Episode, EpisodeConfig, RoundReport};
use crate::error::{Error, Result};
use crate::falcon::ActionGeometry;
use crate::geometry::context_kernels;
use crate::model::{Problem, Record};
use crate::trace::{
    read_reports, read_summary, read_trace, subroutine_file_name, summary_rows, trace_file_name,
    write_jsonl, write_summary,
};

pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const BOUND_REPORT_FILE: &str = "bound_report.json";
pub const SPANNERS_FILE: &str = "spanners.json";

/// Runs one replication in memory.
pub fn run_seed(config: &ExperimentConfig, problem: Arc<Problem>, seed: u64) -> Result<Episode> {
    let env = Environment::new(problem.clone(), config.reward)?;
    let mut agent = build_agent(config, problem)?;
    log::debug!(
        "seed {seed}: running {} for {} rounds",
        agent.name(),
        config.horizon
    );
    run_episode(
        &EpisodeConfig::new(config.horizon, seed)?,
        agent.as_mut(),
        &env,
    )
}

/// Final numbers of one replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub final_pathwise: f64,
    pub final_pseudo: f64,
    pub oracle_calls: usize,
    pub within_bound: Option<bool>,
    /// Outcome of the configured audits on this seed's trace.
    pub audit: Option<AuditReport>,
}

/// Contents of `bound_report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub agent: String,
    /// Greedy and ε-greedy are controls with no regret guarantee.
    pub control: bool,
    pub horizon: usize,
    pub bound: RegretBound,
    pub bound_at_horizon: Option<f64>,
    pub runs: Vec<SeedOutcome>,
    /// Share of seeds whose pathwise regret at the horizon is below the bound.
    pub fraction_within_bound: Option<f64>,
}

/// Spanner used to initialize one context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpannerEntry {
    pub context: usize,
    pub dim: usize,
    pub kappa: f64,
    pub spanner: Vec<usize>,
}

/// Everything [`run_experiment`] produced.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub bound: BoundReport,
}

impl RunSummary {
    /// Whether every configured audit passed on every seed.
    pub fn audits_pass(&self) -> bool {
        self.bound
            .runs
            .iter()
            .all(|r| r.audit.as_ref().is_none_or(|a| a.pass))
    }
}

fn spanner_entries(config: &ExperimentConfig, problem: &Problem) -> Result<Vec<SpannerEntry>> {
    Ok(match &config.agent {
        AgentSpec::UccbIa { .. } => {
            let opts = config.agent.ia_options().unwrap_or_default();
            context_kernels(problem, opts.kappa_mode)?
                .into_iter()
                .map(|k| SpannerEntry {
                    context: k.context,
                    dim: k.dim,
                    kappa: k.kappa,
                    spanner: k.spanner,
                })
                .collect()
        }
        AgentSpec::Falcon { .. } => {
            let geom = ActionGeometry::new(problem.actions.vectors())?;
            let spanner = geom.spanner.indices.clone();
            (0..problem.contexts.len())
                .map(|x| SpannerEntry {
                    context: x,
                    dim: spanner.len(),
                    kappa: 1.0,
                    spanner: spanner.clone(),
                })
                .collect()
        }
        AgentSpec::Uccb { .. } => (0..problem.contexts.len())
            .map(|x| SpannerEntry {
                context: x,
                dim: problem.actions.len(),
                kappa: 1.0,
                spanner: (0..problem.actions.len()).collect(),
            })
            .collect(),
        AgentSpec::Greedy | AgentSpec::EpsilonGreedy { .. } => Vec::new(),
    })
}

/// Runs every seed, writing traces, allocation reports, the regret summary
/// and the bound report (with audit outcomes when configured) into `out_dir`.
///
/// `replications` overrides the config's count; `threads` runs seeds on a pool of that size.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    replications: Option<usize>,
    threads: Option<usize>,
) -> Result<RunSummary> {
    let mut config = config.clone();
    if let Some(n) = replications {
        config.replications = n;
    }
    let config = &config;
    let problem = Arc::new(config.validate()?);
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join(CONFIG_FILE), config.to_json()?)?;
    std::fs::write(
        out_dir.join(SPANNERS_FILE),
        serde_json::to_string_pretty(&spanner_entries(config, &problem)?)?,
    )?;
    let seeds = config.seeds();
    let bound = config.regret_bound(&problem)?;
    let bound_at_horizon = bound.at(config.horizon);

    let one = |seed: u64| -> Result<(Episode, Option<AuditReport>)> {
        let ep = run_seed(config, problem.clone(), seed)?;
        write_jsonl(
            &out_dir.join(trace_file_name(seed)),
            ep.trajectory.records(),
        )?;
        if matches!(config.agent, AgentSpec::Falcon { .. }) {
            write_jsonl(&out_dir.join(subroutine_file_name(seed)), &ep.reports)?;
        }
        let audit = if config.audits.is_empty() {
            None
        } else {
            let reports: Vec<_> = ep.reports.iter().map(|r| r.report.clone()).collect();
            Some(audit_records(
                config,
                &problem,
                ep.trajectory.records(),
                Some(&reports),
                &config.audits,
            )?)
        };
        log::info!(
            "seed {seed}: pathwise {:.3}, pseudo {:.3}",
            ep.regret.final_pathwise(),
            ep.regret.final_pseudo()
        );
        Ok((ep, audit))
    };
    let results: Vec<(Episode, Option<AuditReport>)> = match threads {
        Some(n) if n > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Model(format!("thread pool: {e}")))?
            .install(|| seeds.par_iter().map(|s| one(*s)).collect::<Result<_>>())?,
        _ => seeds.iter().map(|s| one(*s)).collect::<Result<_>>()?,
    };

    write_summary(
        &out_dir.join(SUMMARY_FILE),
        seeds
            .iter()
            .zip(&results)
            .flat_map(|(s, (ep, _))| summary_rows(*s, &ep.regret).collect::<Vec<_>>()),
    )?;
    let runs: Vec<SeedOutcome> = seeds
        .iter()
        .zip(results)
        .map(|(s, (ep, audit))| SeedOutcome {
            seed: *s,
            final_pathwise: ep.regret.final_pathwise(),
            final_pseudo: ep.regret.final_pseudo(),
            oracle_calls: ep.oracle_calls,
            within_bound: bound_at_horizon.map(|b| ep.regret.final_pathwise() < b),
            audit,
        })
        .collect();
    let fraction_within_bound = bound_at_horizon.map(|_| {
        runs.iter().filter(|r| r.within_bound == Some(true)).count() as f64 / runs.len() as f64
    });
    let report = BoundReport {
        name: config.name.clone(),
        agent: config.agent.name().into(),
        control: matches!(
            config.agent,
            AgentSpec::Greedy | AgentSpec::EpsilonGreedy { .. }
        ),
        horizon: config.horizon,
        bound,
        bound_at_horizon,
        runs,
        fraction_within_bound,
    };
    std::fs::write(
        out_dir.join(BOUND_REPORT_FILE),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        bound: report,
    })
}

/// Results of the requested checks on one trace; checks that do not apply to the agent are listed in `skipped`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub rounds: usize,
    pub contextual_potential: Option<ContextualPotentialReport>,
    pub replay: Option<ReplayReport>,
    pub elliptical: Option<PotentialReport>,
    pub allocation: Option<AllocationStats>,
    pub skipped: Vec<Check>,
    pub pass: bool,
}

/// Runs `checks` on in-memory records. FALCON allocation statistics come from
/// `reports` when given, and are otherwise recomputed from the trace.
pub fn audit_records(
    config: &ExperimentConfig,
    problem: &Problem,
    records: &[Record],
    reports: Option<&[crate::falcon::SubroutineReport]>,
    checks: &[Check],
) -> Result<AuditReport> {
    let mut out = AuditReport {
        rounds: records.len(),
        ..AuditReport::default()
    };
    let k = problem.actions.len();
    let ia_kernels = match config.agent.ia_options() {
        Some(opts)
            if checks
                .iter()
                .any(|c| matches!(c, Check::Replay | Check::Elliptical)) =>
        {
            Some(context_kernels(problem, opts.kappa_mode)?)
        }
        _ => None,
    };
    for &check in checks {
        match (check, &config.agent) {
            (Check::ContextualPotential, AgentSpec::Uccb { .. }) => {
                out.contextual_potential = Some(contextual_potential_audit(problem, k, records))
            }
            (Check::Replay, AgentSpec::Uccb { .. }) => {
                out.replay = Some(replay_uccb(problem, k, records))
            }
            (Check::Replay, AgentSpec::UccbIa { .. }) => {
                out.replay = Some(replay_ia(
                    problem,
                    ia_kernels.as_deref().unwrap_or_default(),
                    records,
                ))
            }
            (Check::Replay, AgentSpec::Falcon { rescale, step }) => {
                let opts = crate::falcon::SubroutineOptions {
                    rescale: *rescale,
                    step: *step,
                };
                out.replay = Some(replay_falcon(problem, opts, records)?)
            }
            (Check::Elliptical, AgentSpec::UccbIa { .. }) => {
                out.elliptical = Some(potential_audit(
                    problem,
                    ia_kernels.as_deref().unwrap_or_default(),
                    records,
                ))
            }
            (Check::Allocation, AgentSpec::Falcon { rescale, step }) => {
                let stats = match reports {
                    Some(r) => allocation_audit(r),
                    None => {
                        let opts = crate::falcon::SubroutineOptions {
                            rescale: *rescale,
                            step: *step,
                        };
                        allocation_audit(&falcon_reports(problem, opts, records)?)
                    }
                };
                out.allocation = Some(stats)
            }
            _ => out.skipped.push(check),
        }
    }
    out.pass = out.contextual_potential.as_ref().is_none_or(|r| r.pass)
        && out.replay.as_ref().is_none_or(|r| r.pass)
        && out.elliptical.as_ref().is_none_or(|r| r.pass)
        && out.allocation.as_ref().is_none_or(|r| r.pass);
    Ok(out)
}

/// Audits a trace file. Without an explicit config, `config.json` next to the trace is used,
/// and a sibling `subroutine_seed*.jsonl` supplies FALCON allocation statistics when present.
pub fn audit_trace(trace: &Path, checks: &[Check], config: Option<&Path>) -> Result<AuditReport> {
    let config_path = match config {
        Some(p) => p.to_path_buf(),
        None => trace.parent().unwrap_or(Path::new(".")).join(CONFIG_FILE),
    };
    let config = ExperimentConfig::load(&config_path)?;
    let problem = config.validate()?;
    let records = read_trace(trace)?;
    let reports_path = trace
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(|n| n.strip_prefix("trace_"))
        .map(|rest| trace.with_file_name(format!("subroutine_{rest}")));
    let reports: Option<Vec<_>> = match reports_path {
        Some(p) if p.exists() => Some(
            read_reports(&p)?
                .into_iter()
                .map(|r: RoundReport| r.report)
                .collect(),
        ),
        _ => None,
    };
    audit_records(&config, &problem, &records, reports.as_deref(), checks)
}

/// One row of the aggregated regret curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub t: usize,
    pub n: usize,
    pub mean_pseudo: f64,
    pub q10_pseudo: f64,
    pub q90_pseudo: f64,
    pub mean_pathwise: f64,
    pub q10_pathwise: f64,
    pub q90_pathwise: f64,
    pub bound: Option<f64>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Aggregates `summary.csv` across seeds into mean and 10%/90% quantile curves.
pub fn aggregate(runs_dir: &Path) -> Result<Vec<CurveRow>> {
    let rows = read_summary(&runs_dir.join(SUMMARY_FILE))?;
    let config_path = runs_dir.join(CONFIG_FILE);
    let bound = if config_path.exists() {
        let config = ExperimentConfig::load(&config_path)?;
        let problem = config.validate()?;
        config.regret_bound(&problem)?
    } else {
        RegretBound::None
    };
    let mut by_t: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let e = by_t.entry(r.t).or_default();
        e.0.push(r.cum_pseudo_regret);
        e.1.push(r.cum_pathwise_regret);
    }
    if by_t.is_empty() {
        return Err(Error::Model(format!(
            "{} has no rows",
            runs_dir.join(SUMMARY_FILE).display()
        )));
    }
    Ok(by_t
        .into_iter()
        .map(|(t, (mut pseudo, mut path))| {
            pseudo.sort_by(f64::total_cmp);
            path.sort_by(f64::total_cmp);
            CurveRow {
                t,
                n: pseudo.len(),
                mean_pseudo: mean(&pseudo),
                q10_pseudo: quantile(&pseudo, 0.1),
                q90_pseudo: quantile(&pseudo, 0.9),
                mean_pathwise: mean(&path),
                q10_pathwise: quantile(&path, 0.1),
                q90_pathwise: quantile(&path, 0.9),
                bound: bound.at(t),
            }
        })
        .collect())
}

/// Writes the aggregated curve of `runs_dir` to `out` as CSV.
pub fn report(runs_dir: &Path, out: &Path) -> Result<Vec<CurveRow>> {
    let curve = aggregate(runs_dir)?;
    let mut w = csv::Writer::from_path(out)?;
    for row in &curve {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(curve)
}
