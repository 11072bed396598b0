//! FALCON on a linear action model: doubling epochs, one oracle call per epoch
//! and sampled allocations that concentrate on the greedy action.
//!
//! Run with `cargo run --release --example falcon_linear`.

use std::sync::Arc;

use cfbandit::bounds::falcon_regret_bound;
use cfbandit::env::{run_episode, Environment, EpisodeConfig, RewardModel};
use cfbandit::falcon::{epoch_end, FalconAgent, SubroutineOptions};
use cfbandit::scenarios::linear_grid;

fn main() -> cfbandit::Result<()> {
    let horizon = 4096;
    let problem = Arc::new(linear_grid(2, 12, 3, 16, 11)?);
    let env = Environment::new(problem.clone(), RewardModel::Bernoulli)?;
    let mut agent = FalconAgent::new(problem.clone(), 0.05, SubroutineOptions::default())?;
    let ep = run_episode(&EpisodeConfig::new(horizon, 5)?, &mut agent, &env)?;

    let records = ep.trajectory.records();
    for m in 1..=12u32 {
        let t = epoch_end(m).min(horizon);
        let r = &records[t - 1];
        println!(
            "epoch {m:>2} ends at t = {t:>4}: f_hat = {:>2}, beta = {:.4}",
            r.fhat, r.beta
        );
        if t == horizon {
            break;
        }
    }
    println!("oracle calls: {}", ep.oracle_calls);
    println!("allocation invocations: {}", ep.reports.len());
    let worst = ep
        .reports
        .iter()
        .map(|r| r.report.descent_steps)
        .max()
        .unwrap_or(0);
    println!("most descent steps in one invocation: {worst}");
    for x in 0..problem.contexts.len() {
        let p = agent.allocation(x)?;
        let atoms: Vec<String> = p.atoms().map(|(a, w)| format!("{a}:{w:.3}")).collect();
        println!("final allocation at context {x}: [{}]", atoms.join(", "));
    }
    println!(
        "pseudo-regret {:.2}, pathwise {:.1}, bound {:.1}",
        ep.regret.final_pseudo(),
        ep.regret.final_pathwise(),
        falcon_regret_bound(horizon, 2, problem.class.len(), 0.05)
    );
    Ok(())
}
