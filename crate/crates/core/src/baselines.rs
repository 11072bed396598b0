//! Control agents that are not part of the optimistic family: greedy,
//! ε-greedy, the ground-truth policy and a fixed arm.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::Agent;
use crate::error::{invalid, Result};
use crate::model::{optimal_action, ActionId, ContextId, EstimatorSnapshot, Problem};
use crate::oracle::SseTable;

/// Plays the argmax of the current least-squares estimate every round.
#[derive(Clone, Debug)]
pub struct GreedyAgent {
    problem: Arc<Problem>,
    oracle: SseTable,
    current: EstimatorSnapshot,
    oracle_calls: usize,
}

impl GreedyAgent {
    pub fn new(problem: Arc<Problem>) -> Self {
        Self {
            oracle: SseTable::new(problem.class.len()),
            problem,
            current: EstimatorSnapshot { fhat: 0, beta: 0.0 },
            oracle_calls: 0,
        }
    }

    fn refit(&mut self) -> usize {
        self.oracle_calls += 1;
        let fhat = self.oracle.least_squares();
        self.current = EstimatorSnapshot { fhat, beta: 0.0 };
        fhat
    }
}

impl Agent for GreedyAgent {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn select(&mut self, _t: usize, x: ContextId, _rng: &mut ChaCha8Rng) -> Result<ActionId> {
        let fhat = self.refit();
        Ok(optimal_action(
            &self.problem.class,
            fhat,
            x,
            &self.problem.actions,
        ))
    }

    fn snapshot(&self) -> EstimatorSnapshot {
        self.current
    }

    fn update(&mut self, _t: usize, x: ContextId, a: ActionId, r: f64) -> Result<()> {
        self.oracle.update(&self.problem.class, x, a, r);
        Ok(())
    }

    fn oracle_calls(&self) -> usize {
        self.oracle_calls
    }
}

/// Greedy with probability `1 − ε`, otherwise a uniformly random admissible action.
#[derive(Clone, Debug)]
pub struct EpsilonGreedyAgent {
    greedy: GreedyAgent,
    epsilon: f64,
}

impl EpsilonGreedyAgent {
    pub fn new(problem: Arc<Problem>, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(invalid("epsilon", format!("{epsilon} is not in [0, 1]")));
        }
        Ok(Self {
            greedy: GreedyAgent::new(problem),
            epsilon,
        })
    }
}

impl Agent for EpsilonGreedyAgent {
    fn name(&self) -> &'static str {
        "epsilon-greedy"
    }

    fn select(&mut self, t: usize, x: ContextId, rng: &mut ChaCha8Rng) -> Result<ActionId> {
        let explore = rng.gen::<f64>() < self.epsilon;
        let pick = rng.gen::<f64>();
        let greedy = self.greedy.select(t, x, rng)?;
        if explore {
            let admissible = self.greedy.problem.actions.admissible(x);
            let i = ((pick * admissible.len() as f64) as usize).min(admissible.len() - 1);
            Ok(admissible[i])
        } else {
            Ok(greedy)
        }
    }

    fn snapshot(&self) -> EstimatorSnapshot {
        EstimatorSnapshot {
            beta: self.epsilon,
            ..self.greedy.snapshot()
        }
    }

    fn update(&mut self, t: usize, x: ContextId, a: ActionId, r: f64) -> Result<()> {
        self.greedy.update(t, x, a, r)
    }

    fn oracle_calls(&self) -> usize {
        self.greedy.oracle_calls()
    }
}

/// Always plays the ground-truth optimal action.
#[derive(Clone, Debug)]
pub struct OracleAgent {
    problem: Arc<Problem>,
}

impl OracleAgent {
    pub fn new(problem: Arc<Problem>) -> Self {
        Self { problem }
    }
}

impl Agent for OracleAgent {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn select(&mut self, _t: usize, x: ContextId, _rng: &mut ChaCha8Rng) -> Result<ActionId> {
        Ok(self.problem.optimal_action(x))
    }

    fn snapshot(&self) -> EstimatorSnapshot {
        EstimatorSnapshot {
            fhat: self.problem.truth.f_star_index,
            beta: 0.0,
        }
    }

    fn update(&mut self, _t: usize, _x: ContextId, _a: ActionId, _r: f64) -> Result<()> {
        Ok(())
    }
}

/// Always plays the same action id.
#[derive(Clone, Copy, Debug)]
pub struct FixedActionAgent {
    action: ActionId,
}

impl FixedActionAgent {
    pub fn new(action: ActionId) -> Self {
        Self { action }
    }
}

impl Agent for FixedActionAgent {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn select(&mut self, _t: usize, _x: ContextId, _rng: &mut ChaCha8Rng) -> Result<ActionId> {
        Ok(self.action)
    }

    fn snapshot(&self) -> EstimatorSnapshot {
        EstimatorSnapshot { fhat: 0, beta: 0.0 }
    }

    fn update(&mut self, _t: usize, _x: ContextId, _a: ActionId, _r: f64) -> Result<()> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{run_episode, Environment, EpisodeConfig, RewardModel};
    use crate::scenarios::deceptive_two_arm;

    #[test]
    fn greedy_locks_onto_inferior_arm() {
        let p = Arc::new(deceptive_two_arm().unwrap());
        let env = Environment::new(p.clone(), RewardModel::Bernoulli).unwrap();
        let mut agent = GreedyAgent::new(p);
        let ep = run_episode(&EpisodeConfig::new(1000, 1).unwrap(), &mut agent, &env).unwrap();
        assert!(ep.trajectory.records().iter().all(|r| r.a == 0));
        assert!((ep.regret.final_pseudo() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn epsilon_greedy_explores() {
        let p = Arc::new(deceptive_two_arm().unwrap());
        let env = Environment::new(p.clone(), RewardModel::Bernoulli).unwrap();
        let mut agent = EpsilonGreedyAgent::new(p, 0.2).unwrap();
        let ep = run_episode(&EpisodeConfig::new(2000, 1).unwrap(), &mut agent, &env).unwrap();
        assert!(ep.trajectory.records().iter().any(|r| r.a == 1));
        assert!(EpsilonGreedyAgent::new(Arc::new(deceptive_two_arm().unwrap()), 1.5).is_err());
    }
}
