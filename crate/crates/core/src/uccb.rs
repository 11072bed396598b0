//! Finite-action UCCB: initialization pulls, least-squares estimates and
//! optimism along the counterfactual action trajectory.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::Agent;
use crate::error::{check_delta, invalid, Result};
use crate::model::{ActionId, ActionSpace, ContextId, EstimatorSnapshot, FunctionClass, Problem};
use crate::oracle::SseTable;

/// `β_t = √(17 t ln(2|F|t³/δ) / K)`.
pub fn beta_finite(t: usize, k: usize, class_size: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    check_positive(t, "t")?;
    check_positive(k, "K")?;
    check_positive(class_size, "class_size")?;
    let t = t as f64;
    Ok((17.0 * t * (2.0 * class_size as f64 * t.powi(3) / delta).ln() / k as f64).sqrt())
}

/// `β_t = √(34t/K) · √(d ln(2 + ΔLt) + ln(2t³/δ) + 1)` for a `d`-parameter class.
pub fn beta_parametric(
    t: usize,
    k: usize,
    d: f64,
    diameter: f64,
    lipschitz: f64,
    delta: f64,
) -> Result<f64> {
    check_delta(delta)?;
    check_positive(t, "t")?;
    check_positive(k, "K")?;
    for (name, v) in [("d", d), ("diameter", diameter), ("lipschitz", lipschitz)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(name, format!("{v} must be positive")));
        }
    }
    let t = t as f64;
    let inner = d * (2.0 + diameter * lipschitz * t).ln() + (2.0 * t.powi(3) / delta).ln() + 1.0;
    Ok((34.0 * t / k as f64).sqrt() * inner.sqrt())
}

/// Constant `β = √(TK) · B` where `B` is a supplied covering-number bound.
pub fn beta_covering(horizon: usize, k: usize, bound: f64) -> Result<f64> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(invalid("bound", format!("{bound} must be positive")));
    }
    Ok(((horizon * k) as f64).sqrt() * bound)
}

fn check_positive(v: usize, name: &'static str) -> Result<()> {
    if v == 0 {
        Err(invalid(name, "must be at least 1"))
    } else {
        Ok(())
    }
}

/// Which confidence-width formula feeds `β_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BetaSchedule {
    /// Finite-class width with `|F|` taken from the class.
    #[default]
    Finite,
    Parametric {
        d: f64,
        diameter: f64,
        lipschitz: f64,
    },
    Covering {
        bound: f64,
    },
    Constant {
        beta: f64,
    },
}

/// Everything a schedule may depend on besides the round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleInputs {
    /// `K` for the finite agent, the decision entropy `E` for UCCB-IA.
    pub width: f64,
    pub class_size: usize,
    pub delta: f64,
    pub horizon: usize,
}

impl BetaSchedule {
    /// `β_t`, validated on first use by [`BetaSchedule::check`].
    pub fn value(&self, t: usize, inputs: &ScheduleInputs) -> f64 {
        let t = t as f64;
        let w = inputs.width;
        match *self {
            BetaSchedule::Finite => {
                (17.0 * t * (2.0 * inputs.class_size as f64 * t.powi(3) / inputs.delta).ln() / w)
                    .sqrt()
            }
            BetaSchedule::Parametric {
                d,
                diameter,
                lipschitz,
            } => {
                let inner = d * (2.0 + diameter * lipschitz * t).ln()
                    + (2.0 * t.powi(3) / inputs.delta).ln()
                    + 1.0;
                (34.0 * t / w).sqrt() * inner.sqrt()
            }
            BetaSchedule::Covering { bound } => (inputs.horizon as f64 * w).sqrt() * bound,
            BetaSchedule::Constant { beta } => beta,
        }
    }

    pub fn check(&self, inputs: &ScheduleInputs) -> Result<()> {
        check_delta(inputs.delta)?;
        if !(inputs.width > 0.0) {
            return Err(invalid(
                "width",
                format!("{} must be positive", inputs.width),
            ));
        }
        match *self {
            BetaSchedule::Finite => Ok(()),
            BetaSchedule::Parametric {
                d,
                diameter,
                lipschitz,
            } => beta_parametric(1, 1, d, diameter, lipschitz, inputs.delta).map(|_| ()),
            BetaSchedule::Covering { bound } => beta_covering(inputs.horizon, 1, bound).map(|_| ()),
            BetaSchedule::Constant { beta } => {
                if beta > 0.0 && beta.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("beta", format!("{beta} must be positive")))
                }
            }
        }
    }
}

/// Incremental state of one context's counterfactual trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CounterfactualCursor {
    counts: Vec<u64>,
    actions: Vec<ActionId>,
}

impl CounterfactualCursor {
    pub fn new(n_actions: usize) -> Self {
        Self {
            counts: vec![0; n_actions],
            actions: Vec::new(),
        }
    }

    /// Trajectory entries so far.
    pub fn actions(&self) -> &[ActionId] {
        &self.actions
    }

    /// Appends `ã_i = argmax_a f̂_i(x, a) + β_i / (count(a) + 1)`.
    pub fn extend(
        &mut self,
        class: &FunctionClass,
        admissible: &[ActionId],
        x: ContextId,
        snap: EstimatorSnapshot,
    ) -> ActionId {
        let row = class.row(snap.fhat, x);
        let mut best = admissible[0];
        let mut best_v = f64::NEG_INFINITY;
        for &a in admissible {
            let v = row[a] + snap.beta / (self.counts[a] as f64 + 1.0);
            if v > best_v {
                best_v = v;
                best = a;
            }
        }
        self.counts[best] += 1;
        self.actions.push(best);
        best
    }
}

/// The counterfactual actions `ã_{K+1}, …, ã_i` at `x` for snapshots of rounds `K+1..i`.
pub fn counterfactual_trajectory(
    class: &FunctionClass,
    actions: &ActionSpace,
    x: ContextId,
    snapshots: &[EstimatorSnapshot],
) -> Vec<ActionId> {
    let mut cursor = CounterfactualCursor::new(actions.len());
    let admissible = actions.admissible(x);
    for s in snapshots {
        cursor.extend(class, admissible, x, *s);
    }
    cursor.actions
}

/// Finite-action UCCB agent state.
#[derive(Clone, Debug)]
pub struct UccbAgent {
    problem: Arc<Problem>,
    k: usize,
    schedule: BetaSchedule,
    inputs: ScheduleInputs,
    oracle: SseTable,
    snapshots: Vec<EstimatorSnapshot>,
    current: EstimatorSnapshot,
    memo: Option<Vec<(usize, CounterfactualCursor)>>,
    oracle_calls: usize,
}

impl UccbAgent {
    /// `K` is the number of actions; every action must be admissible in every context.
    pub fn new(
        problem: Arc<Problem>,
        schedule: BetaSchedule,
        delta: f64,
        horizon: usize,
    ) -> Result<Self> {
        if problem.actions.is_restricted() {
            return Err(invalid(
                "actions",
                "finite UCCB needs the full action set in every context",
            ));
        }
        let k = problem.actions.len();
        let inputs = ScheduleInputs {
            width: k as f64,
            class_size: problem.class.len(),
            delta,
            horizon,
        };
        schedule.check(&inputs)?;
        Ok(Self {
            oracle: SseTable::new(problem.class.len()),
            problem,
            k,
            schedule,
            inputs,
            snapshots: Vec::new(),
            current: EstimatorSnapshot { fhat: 0, beta: 0.0 },
            memo: None,
            oracle_calls: 0,
        })
    }

    /// Reuses each context's trajectory across visits instead of replaying from scratch.
    pub fn with_memoization(mut self, on: bool) -> Self {
        self.memo = on.then(|| {
            (0..self.problem.contexts.len())
                .map(|_| (0, CounterfactualCursor::new(self.problem.actions.len())))
                .collect()
        });
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Snapshots of rounds `K+1, …` recorded so far.
    pub fn snapshots(&self) -> &[EstimatorSnapshot] {
        &self.snapshots
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.schedule.value(t, &self.inputs)
    }
}

impl Agent for UccbAgent {
    fn name(&self) -> &'static str {
        "uccb"
    }

    fn select(&mut self, t: usize, x: ContextId, _rng: &mut ChaCha8Rng) -> Result<ActionId> {
        self.current = EstimatorSnapshot {
            fhat: self.oracle.least_squares(),
            beta: self.beta(t),
        };
        self.oracle_calls += 1;
        if t <= self.k {
            return Ok(t - 1);
        }
        self.snapshots.push(self.current);
        let problem = &self.problem;
        let admissible = problem.actions.admissible(x);
        match &mut self.memo {
            Some(memo) => {
                let (done, cursor) = &mut memo[x];
                let mut last = 0;
                for s in &self.snapshots[*done..] {
                    last = cursor.extend(&problem.class, admissible, x, *s);
                }
                *done = self.snapshots.len();
                Ok(last)
            }
            None => {
                let traj =
                    counterfactual_trajectory(&problem.class, &problem.actions, x, &self.snapshots);
                Ok(*traj.last().expect("at least one snapshot"))
            }
        }
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
