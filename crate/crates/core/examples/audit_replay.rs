//! Writes a UCCB trace to disk, audits it from the file alone, then flips one
//! logged action and shows the replay check pointing at that round.
//!
//! Run with `cargo run --release --example audit_replay`.

use cfbandit::config::{AgentSpec, Check, ExperimentConfig, ProblemSpec};
use cfbandit::env::RewardModel;
use cfbandit::harness::{audit_trace, run_experiment};
use cfbandit::model::Record;
use cfbandit::scenarios::Scenario;
use cfbandit::trace::{read_trace, trace_file_name, write_jsonl};
use cfbandit::uccb::BetaSchedule;

fn main() -> cfbandit::Result<()> {
    let dir = std::env::temp_dir().join("cfbandit-audit-replay");
    let config = ExperimentConfig {
        name: "audit-demo".into(),
        problem: ProblemSpec::Generated(Scenario::RandomTabular {
            contexts: 4,
            actions: 3,
            members: 8,
            instance_seed: 2,
        }),
        agent: AgentSpec::Uccb {
            beta: BetaSchedule::Constant { beta: 0.5 },
            memoize: true,
        },
        reward: RewardModel::Bernoulli,
        delta: 0.05,
        horizon: 600,
        seed_base: 0,
        replications: 1,
        audits: Vec::new(),
        output_dir: None,
    };
    run_experiment(&config, &dir, None, None)?;
    let trace = dir.join(trace_file_name(0));
    let checks = [Check::ContextualPotential, Check::Replay];
    let clean = audit_trace(&trace, &checks, None)?;
    println!("clean trace passes: {}", clean.pass);

    let mut records: Vec<Record> = read_trace(&trace)?;
    let t = 250;
    records[t - 1].a = (records[t - 1].a + 1) % 3;
    let tampered = dir.join("trace_tampered.jsonl");
    write_jsonl(&tampered, &records)?;
    let report = audit_trace(&tampered, &checks, Some(&dir.join("config.json")))?;
    let replay = report.replay.expect("replay ran");
    println!(
        "tampered trace passes: {}; mismatched rounds {:?}",
        report.pass, replay.mismatches
    );
    Ok(())
}
