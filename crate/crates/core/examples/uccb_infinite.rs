//! UCCB-IA on a linear action grid and on heterogeneous per-context subspaces,
//! with decision entropy, spanner initialization and potential audits.
//!
//! Run with `cargo run --release --example uccb_infinite`.

use std::sync::Arc;

use cfbandit::audit::potential_audit;
use cfbandit::bounds::uccb_ia_regret_bound;
use cfbandit::env::{run_episode, Environment, EpisodeConfig, RewardModel};
use cfbandit::model::Problem;
use cfbandit::scenarios::{hetero_subspaces, linear_grid};
use cfbandit::uccb::BetaSchedule;
use cfbandit::uccb_ia::{IaOptions, UccbIaAgent};

fn run(label: &str, problem: Problem, horizon: usize) -> cfbandit::Result<()> {
    let problem = Arc::new(problem);
    let env = Environment::new(problem.clone(), RewardModel::Bernoulli)?;
    let options = IaOptions {
        memoize: true,
        ..IaOptions::default()
    };
    let mut agent = UccbIaAgent::new(
        problem.clone(),
        BetaSchedule::Finite,
        0.05,
        horizon,
        options,
    )?;
    println!("{label}: decision entropy E = {}", agent.entropy());
    for k in agent.kernels() {
        println!(
            "  context {}: d_x = {}, kappa = {}, spanner {:?}",
            k.context, k.dim, k.kappa, k.spanner
        );
    }
    let kernels = agent.kernels().to_vec();
    let ep = run_episode(&EpisodeConfig::new(horizon, 3)?, &mut agent, &env)?;
    println!(
        "  pseudo-regret {:.2}, pathwise {:.1}, bound {:.1}",
        ep.regret.final_pseudo(),
        ep.regret.final_pathwise(),
        uccb_ia_regret_bound(horizon, agent.entropy(), problem.class.len(), 0.05)
    );
    for c in potential_audit(&problem, &kernels, ep.trajectory.records()).contexts {
        println!(
            "  context {} potential {:.3} <= {:.3}: {}",
            c.context, c.sum, c.bound, c.pass
        );
    }
    Ok(())
}

fn main() -> cfbandit::Result<()> {
    run("linear grid", linear_grid(2, 12, 3, 16, 11)?, 2048)?;
    run(
        "heterogeneous subspaces",
        hetero_subspaces(&[1, 2, 3], 3, 6, 12, 5)?,
        1024,
    )?;
    Ok(())
}
