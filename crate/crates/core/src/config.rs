//! Experiment configuration: problem, agent, environment and seeds, loaded from JSON.

use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::baselines::{EpsilonGreedyAgent, GreedyAgent};
use crate::bounds::RegretBound;
use crate::env::{Agent, RewardModel};
use crate::error::{Error, Result};
use crate::falcon::{FalconAgent, RescaleRule, StepRule, SubroutineOptions};
use crate::geometry::{context_kernels, KappaMode};
use crate::linalg::Matrix;
use crate::model::{
    ActionKind, ActionSpace, ClassForm, ContextSpace, FeatureMap, FunctionClass, GroundTruth, Link,
    Member, Problem,
};
use crate::scenarios::Scenario;
use crate::uccb::{BetaSchedule, UccbAgent};
use crate::uccb_ia::{kernel_entropy, IaOptions, UccbIaAgent};

/// Which learner a run uses, with its tuning knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AgentSpec {
    Uccb {
        #[serde(default)]
        beta: BetaSchedule,
        #[serde(default)]
        memoize: bool,
    },
    UccbIa {
        #[serde(default)]
        beta: BetaSchedule,
        #[serde(default)]
        kappa_mode: KappaMode,
        #[serde(default)]
        entropy: Option<f64>,
        #[serde(default)]
        memoize: bool,
    },
    Falcon {
        #[serde(default)]
        rescale: RescaleRule,
        #[serde(default)]
        step: StepRule,
    },
    Greedy,
    EpsilonGreedy {
        epsilon: f64,
    },
}

impl AgentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AgentSpec::Uccb { .. } => "uccb",
            AgentSpec::UccbIa { .. } => "uccb-ia",
            AgentSpec::Falcon { .. } => "falcon",
            AgentSpec::Greedy => "greedy",
            AgentSpec::EpsilonGreedy { .. } => "epsilon-greedy",
        }
    }

    pub fn subroutine_options(&self) -> Option<SubroutineOptions> {
        match *self {
            AgentSpec::Falcon { rescale, step } => Some(SubroutineOptions { rescale, step }),
            _ => None,
        }
    }

    pub fn ia_options(&self) -> Option<IaOptions> {
        match *self {
            AgentSpec::UccbIa {
                kappa_mode,
                entropy,
                memoize,
                ..
            } => Some(IaOptions {
                kappa_mode,
                entropy,
                memoize,
            }),
            _ => None,
        }
    }
}

/// Functional form of an explicitly listed class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ClassSpec {
    Tabular,
    Linear,
    Glm {
        links: Vec<Link>,
        /// One row-major feature matrix per context; identity features when absent.
        #[serde(default)]
        features: Option<Vec<Vec<Vec<f64>>>>,
    },
    Hetero {
        links: Vec<Link>,
    },
}

impl ClassSpec {
    fn to_form(&self) -> ClassForm {
        match self {
            ClassSpec::Tabular => ClassForm::Tabular,
            ClassSpec::Linear => ClassForm::Linear,
            ClassSpec::Glm { links, features } => ClassForm::Glm {
                links: links.clone(),
                features: match features {
                    None => FeatureMap::Identity,
                    Some(ms) => {
                        FeatureMap::PerContext(ms.iter().map(|m| Matrix::from_rows(m)).collect())
                    }
                },
            },
            ClassSpec::Hetero { links } => ClassForm::Hetero {
                links: links.clone(),
            },
        }
    }
}

/// A problem written out in full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitProblem {
    /// Context probabilities; labels default to `x0, x1, …`.
    pub context_probabilities: Vec<f64>,
    #[serde(default)]
    pub context_labels: Option<Vec<String>>,
    pub actions: ActionKind,
    /// Admissible action ids per context; every action everywhere when absent.
    #[serde(default)]
    pub restrictions: Option<Vec<Vec<usize>>>,
    pub class: ClassSpec,
    pub members: Vec<Member>,
    pub f_star_index: usize,
}

impl ExplicitProblem {
    pub fn build(&self) -> Result<Problem> {
        let labels = self.context_labels.clone().unwrap_or_else(|| {
            (0..self.context_probabilities.len())
                .map(|i| format!("x{i}"))
                .collect()
        });
        let cs = ContextSpace::new(labels, self.context_probabilities.clone())?;
        let acts = ActionSpace::new(self.actions.clone(), self.restrictions.clone())?;
        let class = FunctionClass::new(self.class.to_form(), self.members.clone(), &cs, &acts)?;
        Problem::new(
            cs,
            acts,
            class,
            GroundTruth {
                f_star_index: self.f_star_index,
            },
        )
    }
}

/// Where the problem instance comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemSpec {
    Generated(Scenario),
    Explicit(ExplicitProblem),
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem> {
        match self {
            ProblemSpec::Generated(s) => s.build(),
            ProblemSpec::Explicit(p) => p.build(),
        }
    }
}

/// Post-hoc checks the harness and the `audit` command know how to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// Contextual potential sum of a finite-action UCCB run.
    #[serde(rename = "lemma2")]
    ContextualPotential,
    /// Per-context potential sums of a UCCB-IA run.
    Elliptical,
    /// Recompute every logged action from the logged snapshots.
    Replay,
    /// Allocation-routine statistics of a FALCON run.
    #[serde(rename = "prop1")]
    Allocation,
}

impl Check {
    pub const ALL: [Check; 4] = [
        Check::ContextualPotential,
        Check::Elliptical,
        Check::Replay,
        Check::Allocation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::ContextualPotential => "lemma2",
            Check::Elliptical => "elliptical",
            Check::Replay => "replay",
            Check::Allocation => "prop1",
        }
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config {
                path: "checks".into(),
                message: format!(
                    "unknown check `{s}` (expected lemma2, elliptical, replay or prop1)"
                ),
            })
    }
}

fn default_delta() -> f64 {
    0.05
}

fn default_replications() -> usize {
    1
}

fn default_name() -> String {
    "experiment".into()
}

/// One experiment: a problem, an agent and the seeds to run it under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub problem: ProblemSpec,
    pub agent: AgentSpec,
    #[serde(default)]
    pub reward: RewardModel,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub horizon: usize,
    /// Replication `r` runs with seed `seed_base + r`.
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub audits: Vec<Check>,
    /// Default destination of `run` artifacts.
    #[serde(default)]
    pub output_dir: Option<std::path::PathBuf>,
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses JSON, reporting the offending field path on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.replications as u64)
            .map(|r| self.seed_base + r)
            .collect()
    }

    /// Checks scalar fields, builds the problem and confirms the agent accepts it.
    pub fn validate(&self) -> Result<Problem> {
        if self.horizon == 0 {
            return Err(config_error("horizon", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(config_error(
                "delta",
                format!("{} is not in (0, 1)", self.delta),
            ));
        }
        if self.replications == 0 {
            return Err(config_error("replications", "must be at least 1"));
        }
        if let AgentSpec::EpsilonGreedy { epsilon } = self.agent {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(config_error(
                    "agent.epsilon",
                    format!("{epsilon} is not in [0, 1]"),
                ));
            }
        }
        let problem = self
            .problem
            .build()
            .map_err(|e| config_error("problem", e.to_string()))?;
        build_agent(self, Arc::new(problem.clone()))
            .map_err(|e| config_error("agent", e.to_string()))?;
        Ok(problem)
    }

    /// The regret bound matching this agent, or [`RegretBound::None`] for controls.
    pub fn regret_bound(&self, problem: &Problem) -> Result<RegretBound> {
        let class_size = problem.class.len();
        let delta = self.delta;
        Ok(match &self.agent {
            AgentSpec::Uccb { .. } => RegretBound::Uccb {
                k: problem.actions.len(),
                class_size,
                delta,
            },
            AgentSpec::UccbIa { .. } => {
                let opts = self.agent.ia_options().unwrap_or_default();
                let entropy = match opts.entropy {
                    Some(e) => e,
                    None => kernel_entropy(problem, &context_kernels(problem, opts.kappa_mode)?),
                };
                RegretBound::UccbIa {
                    entropy,
                    class_size,
                    delta,
                }
            }
            AgentSpec::Falcon { .. } => RegretBound::Falcon {
                d: problem.actions.dim(),
                class_size,
                delta,
            },
            AgentSpec::Greedy | AgentSpec::EpsilonGreedy { .. } => RegretBound::None,
        })
    }
}

/// Instantiates the configured agent on a problem.
pub fn build_agent(config: &ExperimentConfig, problem: Arc<Problem>) -> Result<Box<dyn Agent>> {
    Ok(match &config.agent {
        AgentSpec::Uccb { beta, memoize } => Box::new(
            UccbAgent::new(problem, *beta, config.delta, config.horizon)?
                .with_memoization(*memoize),
        ),
        AgentSpec::UccbIa { beta, .. } => Box::new(UccbIaAgent::new(
            problem,
            *beta,
            config.delta,
            config.horizon,
            config.agent.ia_options().unwrap_or_default(),
        )?),
        AgentSpec::Falcon { rescale, step } => Box::new(FalconAgent::new(
            problem,
            config.delta,
            SubroutineOptions {
                rescale: *rescale,
                step: *step,
            },
        )?),
        AgentSpec::Greedy => Box::new(GreedyAgent::new(problem)),
        AgentSpec::EpsilonGreedy { epsilon } => {
            Box::new(EpsilonGreedyAgent::new(problem, *epsilon)?)
        }
    })
}
