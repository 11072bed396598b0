//! Realizable stochastic contextual-bandit simulator and the episode loop.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::falcon::SubroutineReport;
use crate::model::{
    accumulate_regret, ActionId, ContextId, ContextSpace, EstimatorSnapshot, Problem, Record,
    RegretRecord, Trajectory,
};
use crate::rng::{stream, Purpose};

/// Reward noise model. Every kind has conditional mean `f*(x, a)` and support in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RewardModel {
    #[default]
    Bernoulli,
    /// Gaussian restricted to `[0, 1]`, relocated so the truncated mean hits the target.
    TruncatedGaussian { sigma: f64 },
}

/// Truncation masses below this are considered unattainable for a mean.
const MIN_TRUNCATION_MASS: f64 = 1e-3;
const MEAN_MATCH_TOL: f64 = 1e-9;

/// A Gaussian location whose `[0, 1]` truncation has a prescribed mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedGaussian {
    location: f64,
    sigma: f64,
    lo_cdf: f64,
    hi_cdf: f64,
}

impl TruncatedGaussian {
    /// Solves for the location by bisection; means 0 and 1 collapse to point masses.
    pub fn with_mean(mean: f64, sigma: f64) -> Result<Option<Self>> {
        if !(sigma > 0.0 && sigma <= 0.25) {
            return Err(invalid("sigma", format!("{sigma} is not in (0, 0.25]")));
        }
        check_mean(mean)?;
        if mean == 0.0 || mean == 1.0 {
            return Ok(None);
        }
        let (mut lo, mut hi) = (-1.0 - 10.0 * sigma, 2.0 + 10.0 * sigma);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if truncated_mean(mid, sigma) < mean {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let location = 0.5 * (lo + hi);
        let std = Normal::new(0.0, 1.0).expect("standard normal");
        let lo_cdf = std.cdf(-location / sigma);
        let hi_cdf = std.cdf((1.0 - location) / sigma);
        if hi_cdf - lo_cdf < MIN_TRUNCATION_MASS {
            return Err(invalid(
                "reward",
                format!("mean {mean} is too close to the boundary for sigma {sigma}"),
            ));
        }
        let got = truncated_mean(location, sigma);
        if (got - mean).abs() > MEAN_MATCH_TOL {
            return Err(invalid(
                "reward",
                format!("truncated mean {got} does not match target {mean}"),
            ));
        }
        Ok(Some(Self {
            location,
            sigma,
            lo_cdf,
            hi_cdf,
        }))
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    /// Inverse-CDF draw restricted to `[0, 1]`.
    pub fn sample(&self, u: f64) -> f64 {
        let std = Normal::new(0.0, 1.0).expect("standard normal");
        let p = self.lo_cdf + u * (self.hi_cdf - self.lo_cdf);
        (self.location + self.sigma * std.inverse_cdf(p)).clamp(0.0, 1.0)
    }
}

/// Mean of `N(location, sigma²)` truncated to `[0, 1]`.
pub fn truncated_mean(location: f64, sigma: f64) -> f64 {
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let alpha = -location / sigma;
    let beta = (1.0 - location) / sigma;
    let z = std.cdf(beta) - std.cdf(alpha);
    if z <= 0.0 {
        return if location < 0.5 { 0.0 } else { 1.0 };
    }
    location + sigma * (std.pdf(alpha) - std.pdf(beta)) / z
}

fn check_mean(mean: f64) -> Result<()> {
    if (0.0..=1.0).contains(&mean) {
        Ok(())
    } else {
        Err(Error::MeanOutOfRange(mean))
    }
}

/// Draws a categorical context from `contexts`.
pub fn sample_context(contexts: &ContextSpace, rng: &mut ChaCha8Rng) -> ContextId {
    contexts.draw(rng.gen::<f64>())
}

/// Draws one reward with the given mean.
pub fn sample_reward(model: RewardModel, mean: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    check_mean(mean)?;
    let u = rng.gen::<f64>();
    match model {
        RewardModel::Bernoulli => Ok(bernoulli(mean, u)),
        RewardModel::TruncatedGaussian { sigma } => {
            Ok(match TruncatedGaussian::with_mean(mean, sigma)? {
                Some(tg) => tg.sample(u),
                None => mean,
            })
        }
    }
}

fn bernoulli(mean: f64, u: f64) -> f64 {
    if u < mean {
        1.0
    } else {
        0.0
    }
}

/// The simulator: a problem, a reward model and precomputed per-(x, a) samplers.
#[derive(Clone, Debug)]
pub struct Environment {
    problem: Arc<Problem>,
    reward: RewardModel,
    samplers: Vec<Option<TruncatedGaussian>>,
}

impl Environment {
    pub fn new(problem: Arc<Problem>, reward: RewardModel) -> Result<Self> {
        let na = problem.actions.len();
        let mut samplers = vec![None; problem.contexts.len() * na];
        if let RewardModel::TruncatedGaussian { sigma } = reward {
            for x in 0..problem.contexts.len() {
                for &a in problem.actions.admissible(x) {
                    samplers[x * na + a] =
                        TruncatedGaussian::with_mean(problem.f_star(x, a), sigma)?;
                }
            }
        }
        Ok(Self {
            problem,
            reward,
            samplers,
        })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn shared_problem(&self) -> Arc<Problem> {
        Arc::clone(&self.problem)
    }

    pub fn reward_model(&self) -> RewardModel {
        self.reward
    }

    /// The context of round `t` under `seed`.
    pub fn context(&self, seed: u64, t: usize) -> ContextId {
        sample_context(
            &self.problem.contexts,
            &mut stream(seed, Purpose::Context, 0, t as u64),
        )
    }

    /// The reward arm `a` pays at round `t`, from that arm's own substream.
    pub fn reward(&self, seed: u64, t: usize, x: ContextId, a: ActionId) -> f64 {
        let u = stream(seed, Purpose::Reward, a as u64, t as u64).gen::<f64>();
        let mean = self.problem.f_star(x, a);
        match self.reward {
            RewardModel::Bernoulli => bernoulli(mean, u),
            RewardModel::TruncatedGaussian { .. } => {
                match &self.samplers[x * self.problem.actions.len() + a] {
                    Some(tg) => tg.sample(u),
                    None => mean,
                }
            }
        }
    }
}

/// A learner driven by [`run_episode`].
pub trait Agent: Send {
    fn name(&self) -> &'static str;

    /// Chooses the action for round `t` at context `x`.
    fn select(&mut self, t: usize, x: ContextId, rng: &mut ChaCha8Rng) -> Result<ActionId>;

    /// The `(f̂, β)` pair that was in force for the most recent selection.
    fn snapshot(&self) -> EstimatorSnapshot;

    /// Feeds back the observed reward for round `t`.
    fn update(&mut self, t: usize, x: ContextId, a: ActionId, r: f64) -> Result<()>;

    /// Allocation diagnostics from the most recent selection, if the agent produces any.
    fn take_report(&mut self) -> Option<SubroutineReport> {
        None
    }

    /// Number of least-squares oracle invocations so far.
    fn oracle_calls(&self) -> usize {
        0
    }
}

/// Horizon and seed of one episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub horizon: usize,
    pub seed: u64,
}

impl EpisodeConfig {
    pub fn new(horizon: usize, seed: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon", "T must be at least 1"));
        }
        Ok(Self { horizon, seed })
    }
}

/// Subroutine diagnostics tagged with the round that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub t: usize,
    #[serde(flatten)]
    pub report: SubroutineReport,
}

/// Everything an episode produces.
#[derive(Clone, Debug)]
pub struct Episode {
    pub trajectory: Trajectory,
    pub regret: RegretRecord,
    /// Realized reward of the optimal arm at each round (the pathwise comparator).
    pub optimal_rewards: Vec<f64>,
    pub reports: Vec<RoundReport>,
    pub oracle_calls: usize,
}

/// Runs `T` rounds: context draw, agent selection, reward draw, agent update.
pub fn run_episode(
    config: &EpisodeConfig,
    agent: &mut dyn Agent,
    env: &Environment,
) -> Result<Episode> {
    let problem = env.problem();
    let mut trajectory = Trajectory::new();
    let mut optimal_rewards = Vec::with_capacity(config.horizon);
    let mut reports = Vec::new();
    for t in 1..=config.horizon {
        let x = env.context(config.seed, t);
        let mut agent_rng = stream(config.seed, Purpose::Agent, 0, t as u64);
        let a = agent.select(t, x, &mut agent_rng)?;
        if !problem.actions.is_admissible(x, a) {
            log::error!(
                "{} chose inadmissible action {a} at round {t} (context {x})",
                agent.name()
            );
            return Err(Error::InadmissibleAction {
                context: x,
                action: a,
            });
        }
        let snap = agent.snapshot();
        let r = env.reward(config.seed, t, x, a);
        let best = problem.optimal_action(x);
        optimal_rewards.push(env.reward(config.seed, t, x, best));
        if let Some(report) = agent.take_report() {
            reports.push(RoundReport { t, report });
        }
        trajectory.push(Record {
            t,
            x,
            a,
            r,
            fhat: snap.fhat,
            beta: snap.beta,
        });
        agent.update(t, x, a, r)?;
    }
    let regret = accumulate_regret(&trajectory, problem, &optimal_rewards);
    Ok(Episode {
        trajectory,
        regret,
        optimal_rewards,
        reports,
        oracle_calls: agent.oracle_calls(),
    })
}
