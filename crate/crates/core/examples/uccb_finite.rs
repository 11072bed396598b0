//! Finite-action UCCB on a random tabular instance, followed by the
//! contextual potential audit and a from-scratch replay of every action.
//!
//! Run with `cargo run --release --example uccb_finite`.

use std::sync::Arc;

use cfbandit::audit::{contextual_potential_audit, replay_uccb};
use cfbandit::bounds::uccb_regret_bound;
use cfbandit::env::{run_episode, Environment, EpisodeConfig, RewardModel};
use cfbandit::scenarios::random_tabular;
use cfbandit::uccb::{BetaSchedule, UccbAgent};

fn main() -> cfbandit::Result<()> {
    let (k, class_size, delta, horizon) = (3, 10, 0.05, 3000);
    let problem = Arc::new(random_tabular(5, k, class_size, 1)?);
    let env = Environment::new(problem.clone(), RewardModel::Bernoulli)?;
    let mut agent = UccbAgent::new(problem.clone(), BetaSchedule::Finite, delta, horizon)?
        .with_memoization(true);
    let ep = run_episode(&EpisodeConfig::new(horizon, 7)?, &mut agent, &env)?;

    println!(
        "beta_1 = {:.3}, beta_T = {:.3}",
        agent.beta(1),
        agent.beta(horizon)
    );
    for t in [100, 750, 1500, 3000] {
        println!(
            "t = {t:>4}: pseudo-regret {:>8.2}, pathwise {:>8.1}",
            ep.regret.cum_pseudo[t - 1],
            ep.regret.cum_pathwise[t - 1]
        );
    }
    println!(
        "regret bound at T: {:.1}",
        uccb_regret_bound(horizon, k, class_size, delta)
    );

    let records = ep.trajectory.records();
    let potential = contextual_potential_audit(&problem, k, records);
    println!(
        "potential sum {:.4} <= {:.4}: {}",
        potential.sum, potential.bound, potential.pass
    );
    let replay = replay_uccb(&problem, k, records);
    println!(
        "replayed {} rounds, {} mismatches, {} prefix violations",
        replay.checked,
        replay.mismatches.len(),
        replay.prefix_violations.len()
    );
    Ok(())
}
