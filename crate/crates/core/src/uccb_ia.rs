//! UCCB for structured (possibly large) action sets: spanner-initialized
//! counterfactual trajectories with divergence-based optimism.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::Agent;
use crate::error::{check_delta, invalid, Result};
use crate::geometry::{context_kernels, ContextKernel, DivergenceKind, DivergenceState, KappaMode};
use crate::model::{ActionId, ContextId, EstimatorSnapshot, FunctionClass, Problem};
use crate::oracle::SseTable;
use crate::uccb::{BetaSchedule, ScheduleInputs};

/// `β_t = √(17 t ln(2|F|t³/δ) / E)`.
pub fn beta_infinite(t: usize, entropy: f64, class_size: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(entropy > 0.0) {
        return Err(invalid("entropy", format!("{entropy} must be positive")));
    }
    if t == 0 || class_size == 0 {
        return Err(invalid("t", "round and class size must be at least 1"));
    }
    let t = t as f64;
    Ok((17.0 * t * (2.0 * class_size as f64 * t.powi(3) / delta).ln() / entropy).sqrt())
}

/// Per-context decision entropy `E_x`: `d` (linear), `κ_x² d` (GLM), `κ_x² d_x` (heterogeneous), `K` (finite).
pub fn context_entropy(kind: DivergenceKind, kappa: f64, dim: usize) -> f64 {
    match kind {
        DivergenceKind::Finite | DivergenceKind::Linear => dim as f64,
        DivergenceKind::Glm | DivergenceKind::Hetero => kappa * kappa * dim as f64,
    }
}

/// `E = E_x[E_x]` over a finite context distribution.
pub fn decision_entropy(
    kind: DivergenceKind,
    probabilities: &[f64],
    kappas: &[f64],
    dims: &[usize],
) -> f64 {
    probabilities
        .iter()
        .zip(kappas)
        .zip(dims)
        .map(|((p, k), d)| p * context_entropy(kind, *k, *d))
        .sum()
}

/// Decision entropy of a problem's kernels.
pub fn kernel_entropy(problem: &Problem, kernels: &[ContextKernel]) -> f64 {
    let kind = kernels[0].kind;
    let kappas: Vec<f64> = kernels.iter().map(|k| k.kappa).collect();
    let dims: Vec<usize> = kernels.iter().map(|k| k.dim).collect();
    decision_entropy(kind, problem.contexts.probabilities(), &kappas, &dims)
}

/// Incremental counterfactual trajectory at one context.
#[derive(Clone, Debug, PartialEq)]
pub struct IaCursor {
    state: DivergenceState,
    actions: Vec<ActionId>,
    scratch: Vec<f64>,
}

impl IaCursor {
    pub fn new(kernel: &ContextKernel, n_actions: usize) -> Self {
        Self {
            state: kernel.empty_state(),
            actions: Vec::new(),
            scratch: vec![f64::NAN; n_actions],
        }
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.actions
    }

    pub fn state(&self) -> &DivergenceState {
        &self.state
    }

    /// Appends the next slot: a spanner action while slots remain, else the optimistic argmax.
    pub fn extend(
        &mut self,
        kernel: &ContextKernel,
        class: &FunctionClass,
        admissible: &[ActionId],
        snap: EstimatorSnapshot,
    ) -> ActionId {
        let i = self.actions.len();
        let a = if i < kernel.dim {
            kernel.spanner[i]
        } else {
            kernel.values(&self.state, admissible, &mut self.scratch);
            let row = class.row(snap.fhat, kernel.context);
            let mut best = admissible[0];
            let mut best_v = f64::NEG_INFINITY;
            for &a in admissible {
                let v = row[a] + snap.beta * self.scratch[a];
                if v > best_v {
                    best_v = v;
                    best = a;
                }
            }
            best
        };
        kernel.push(&mut self.state, a);
        self.actions.push(a);
        a
    }
}

/// Slots `1..=snapshots.len()` of the counterfactual trajectory at the kernel's context.
pub fn ia_counterfactual_trajectory(
    kernel: &ContextKernel,
    problem: &Problem,
    snapshots: &[EstimatorSnapshot],
) -> Vec<ActionId> {
    let mut cursor = IaCursor::new(kernel, problem.actions.len());
    let admissible = problem.actions.admissible(kernel.context);
    for s in snapshots {
        cursor.extend(kernel, &problem.class, admissible, *s);
    }
    cursor.actions
}

/// Configuration knobs for [`UccbIaAgent`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct IaOptions {
    #[serde(default)]
    pub kappa_mode: KappaMode,
    /// Overrides the computed decision entropy in `β_t`.
    #[serde(default)]
    pub entropy: Option<f64>,
    #[serde(default)]
    pub memoize: bool,
}

/// UCCB-IA agent state.
#[derive(Clone, Debug)]
pub struct UccbIaAgent {
    problem: Arc<Problem>,
    kernels: Vec<ContextKernel>,
    entropy: f64,
    schedule: BetaSchedule,
    inputs: ScheduleInputs,
    oracle: SseTable,
    snapshots: Vec<EstimatorSnapshot>,
    current: EstimatorSnapshot,
    memo: Option<Vec<IaCursor>>,
    oracle_calls: usize,
}

impl UccbIaAgent {
    pub fn new(
        problem: Arc<Problem>,
        schedule: BetaSchedule,
        delta: f64,
        horizon: usize,
        options: IaOptions,
    ) -> Result<Self> {
        let kernels = context_kernels(&problem, options.kappa_mode)?;
        let entropy = match options.entropy {
            Some(e) => e,
            None => kernel_entropy(&problem, &kernels),
        };
        let inputs = ScheduleInputs {
            width: entropy,
            class_size: problem.class.len(),
            delta,
            horizon,
        };
        schedule.check(&inputs)?;
        let memo = options.memoize.then(|| {
            kernels
                .iter()
                .map(|k| IaCursor::new(k, problem.actions.len()))
                .collect()
        });
        Ok(Self {
            oracle: SseTable::new(problem.class.len()),
            problem,
            kernels,
            entropy,
            schedule,
            inputs,
            snapshots: Vec::new(),
            current: EstimatorSnapshot { fhat: 0, beta: 0.0 },
            memo,
            oracle_calls: 0,
        })
    }

    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    pub fn kernels(&self) -> &[ContextKernel] {
        &self.kernels
    }

    pub fn snapshots(&self) -> &[EstimatorSnapshot] {
        &self.snapshots
    }
}

impl Agent for UccbIaAgent {
    fn name(&self) -> &'static str {
        "uccb-ia"
    }

    fn select(&mut self, t: usize, x: ContextId, _rng: &mut ChaCha8Rng) -> Result<ActionId> {
        self.current = EstimatorSnapshot {
            fhat: self.oracle.least_squares(),
            beta: self.schedule.value(t, &self.inputs),
        };
        self.oracle_calls += 1;
        self.snapshots.push(self.current);
        let kernel = &self.kernels[x];
        let problem = &self.problem;
        let admissible = problem.actions.admissible(x);
        match &mut self.memo {
            Some(memo) => {
                let cursor = &mut memo[x];
                let mut last = 0;
                let done = cursor.actions().len();
                for s in &self.snapshots[done..] {
                    last = cursor.extend(kernel, &problem.class, admissible, *s);
                }
                Ok(last)
            }
            None => {
                let traj = ia_counterfactual_trajectory(kernel, problem, &self.snapshots);
                Ok(*traj.last().expect("nonempty"))
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
