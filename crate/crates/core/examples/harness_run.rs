//! Drives the experiment harness from a JSON config: seeded replications on a
//! thread pool, bound report, audits and the aggregated regret curve.
//!
//! Run with `cargo run --release --example harness_run`.

use cfbandit::config::ExperimentConfig;
use cfbandit::harness::{report, run_experiment};

const CONFIG: &str = r#"{
    "name": "tabular-demo",
    "problem": {"generated": {"generator": "random-tabular", "contexts": 5, "actions": 3, "members": 10, "instance_seed": 1}},
    "agent": {"kind": "uccb", "memoize": true},
    "horizon": 1000,
    "replications": 8,
    "audits": ["lemma2", "replay"]
}"#;

fn main() -> cfbandit::Result<()> {
    let config = ExperimentConfig::from_json(CONFIG)?;
    let dir = std::env::temp_dir().join("cfbandit-harness-run");
    let summary = run_experiment(&config, &dir, None, Some(4))?;
    let b = &summary.bound;
    println!(
        "{} on {} seeds, bound at T = {:?}",
        b.agent,
        b.runs.len(),
        b.bound_at_horizon
    );
    for r in &b.runs {
        println!(
            "  seed {}: pathwise {:.0}, pseudo {:.2}, audits pass {}",
            r.seed,
            r.final_pathwise,
            r.final_pseudo,
            r.audit.as_ref().is_some_and(|a| a.pass)
        );
    }
    let curve = report(&dir, &dir.join("curve.csv"))?;
    for row in curve.iter().filter(|r| r.t % 250 == 0) {
        println!(
            "t = {:>4}: mean {:.2}, q10 {:.2}, q90 {:.2}",
            row.t, row.mean_pseudo, row.q10_pseudo, row.q90_pseudo
        );
    }
    println!("artifacts in {}", dir.display());
    Ok(())
}
