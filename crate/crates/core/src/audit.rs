//! Post-hoc checks on logged runs: counterfactual replay, the contextual
//! potential sum, elliptical potentials and allocation-routine statistics.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bounds::{contextual_potential_bound, elliptical_bound};
use crate::error::Result;
use crate::falcon::{
    optimistic_subroutine, ActionGeometry, SubroutineOptions, SubroutineReport, CHECK_TOL,
};
use crate::geometry::{action_maximize, ContextKernel};
use crate::model::{ActionId, EstimatorSnapshot, Problem, Record};
use crate::uccb::counterfactual_trajectory;
use crate::uccb_ia::{context_entropy, IaCursor};

/// Arithmetic slack allowed on every bound comparison.
pub const AUDIT_SLACK: f64 = 1e-9;

/// The contextual potential sum of a finite-action UCCB run and its bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextualPotentialReport {
    pub sum: f64,
    pub bound: f64,
    /// Every per-(context, action) harmonic sum is at most `1 + ln(visits)`.
    pub harmonic_ok: bool,
    pub pass: bool,
}

/// `Σ_{t=K+1}^T E_x[1 / Σ_{j<t} 1{π_t(x) = π_j(x)}]` with `π_j` the constant
/// initialization policies for `j ≤ K` and the replayed counterfactual policies after.
pub fn contextual_potential_audit(
    problem: &Problem,
    k: usize,
    records: &[Record],
) -> ContextualPotentialReport {
    let horizon = records.len();
    let snaps: Vec<EstimatorSnapshot> = records.iter().skip(k).map(Record::snapshot).collect();
    let mut sum = 0.0;
    let mut harmonic_ok = true;
    for x in 0..problem.contexts.len() {
        let p = problem.contexts.probability(x);
        let traj = counterfactual_trajectory(&problem.class, &problem.actions, x, &snaps);
        let mut counts = vec![0u64; problem.actions.len()];
        for c in counts.iter_mut().take(k) {
            *c = 1;
        }
        let mut per_action = vec![0.0; problem.actions.len()];
        let mut ctx_sum = 0.0;
        for &a in &traj {
            let term = 1.0 / counts[a] as f64;
            ctx_sum += term;
            per_action[a] += term;
            counts[a] += 1;
        }
        for (a, s) in per_action.iter().enumerate() {
            let visits = counts[a].saturating_sub(1);
            if visits > 0 && *s > 1.0 + (visits as f64).ln() + AUDIT_SLACK {
                harmonic_ok = false;
            }
        }
        sum += p * ctx_sum;
    }
    let bound = if horizon > k {
        contextual_potential_bound(horizon, k)
    } else {
        0.0
    };
    ContextualPotentialReport {
        sum,
        bound,
        harmonic_ok,
        pass: harmonic_ok && sum <= bound + AUDIT_SLACK,
    }
}

/// Result of recomputing logged actions from logged snapshots.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    /// Rounds whose action was recomputed.
    pub checked: usize,
    /// Rounds whose logged action differs from the replay.
    pub mismatches: Vec<usize>,
    /// `(s, t)` pairs at the same context whose trajectory prefixes disagree.
    pub prefix_violations: Vec<(usize, usize)>,
    pub pass: bool,
}

impl ReplayReport {
    fn finish(mut self) -> Self {
        self.pass = self.mismatches.is_empty() && self.prefix_violations.is_empty();
        self
    }
}

/// Replays finite-action UCCB from scratch at every round `t > K`.
pub fn replay_uccb(problem: &Problem, k: usize, records: &[Record]) -> ReplayReport {
    let snaps: Vec<EstimatorSnapshot> = records.iter().skip(k).map(Record::snapshot).collect();
    let mut report = ReplayReport::default();
    let mut last: HashMap<usize, (usize, Vec<ActionId>)> = HashMap::new();
    for (i, rec) in records.iter().enumerate().skip(k) {
        let traj =
            counterfactual_trajectory(&problem.class, &problem.actions, rec.x, &snaps[..i + 1 - k]);
        check_round(&mut report, &mut last, rec, traj);
    }
    report.finish()
}

/// Replays UCCB-IA from scratch at every round.
pub fn replay_ia(problem: &Problem, kernels: &[ContextKernel], records: &[Record]) -> ReplayReport {
    let snaps: Vec<EstimatorSnapshot> = records.iter().map(Record::snapshot).collect();
    let mut report = ReplayReport::default();
    let mut last: HashMap<usize, (usize, Vec<ActionId>)> = HashMap::new();
    for (i, rec) in records.iter().enumerate() {
        let kernel = &kernels[rec.x];
        let mut cursor = IaCursor::new(kernel, problem.actions.len());
        let admissible = problem.actions.admissible(rec.x);
        for s in &snaps[..=i] {
            cursor.extend(kernel, &problem.class, admissible, *s);
        }
        check_round(&mut report, &mut last, rec, cursor.actions().to_vec());
    }
    report.finish()
}

fn check_round(
    report: &mut ReplayReport,
    last: &mut HashMap<usize, (usize, Vec<ActionId>)>,
    rec: &Record,
    traj: Vec<ActionId>,
) {
    report.checked += 1;
    if traj.last() != Some(&rec.a) {
        report.mismatches.push(rec.t);
    }
    if let Some((s, prev)) = last.get(&rec.x) {
        if traj.len() < prev.len() || traj[..prev.len()] != prev[..] {
            report.prefix_violations.push((*s, rec.t));
        }
    }
    last.insert(rec.x, (rec.t, traj));
}

/// Checks that every logged FALCON action lies in the support of the
/// allocation recomputed from the logged `(f̂, β)`.
pub fn replay_falcon(
    problem: &Problem,
    options: SubroutineOptions,
    records: &[Record],
) -> Result<ReplayReport> {
    let geom = ActionGeometry::new(problem.actions.vectors())?;
    let mut cache = HashMap::new();
    let mut report = ReplayReport::default();
    for rec in records {
        let key = (rec.x, rec.fhat, rec.beta.to_bits());
        let p = match cache.entry(key) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => {
                let h = problem.class.row(rec.fhat, rec.x).to_vec();
                e.insert(
                    optimistic_subroutine(&geom, action_maximize(&h), &h, rec.beta, options)?.0,
                )
            }
        };
        report.checked += 1;
        if !(p.weight(rec.a) > 0.0) {
            report.mismatches.push(rec.t);
        }
    }
    Ok(report.finish())
}

/// Recomputes subroutine diagnostics for every distinct `(x, f̂, β)` in a FALCON trace.
pub fn falcon_reports(
    problem: &Problem,
    options: SubroutineOptions,
    records: &[Record],
) -> Result<Vec<SubroutineReport>> {
    let geom = ActionGeometry::new(problem.actions.vectors())?;
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for rec in records {
        if seen.insert((rec.x, rec.fhat, rec.beta.to_bits())) {
            let h = problem.class.row(rec.fhat, rec.x).to_vec();
            out.push(optimistic_subroutine(&geom, action_maximize(&h), &h, rec.beta, options)?.1);
        }
    }
    Ok(out)
}

/// Potential sum of one context's counterfactual trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextPotential {
    pub context: usize,
    pub sum: f64,
    pub bound: f64,
    /// Every admissible action has finite divergence once the spanner slots are filled.
    pub finite_after_init: bool,
    pub pass: bool,
}

/// Per-context potential sums `Σ_t [1 ∧ V_x(ã_t ‖ ã_{<t})]` against `E_x · 3 ln T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialReport {
    pub contexts: Vec<ContextPotential>,
    pub pass: bool,
}

/// Builds every context's full-length trajectory from the run's snapshots and sums its potential.
pub fn potential_audit(
    problem: &Problem,
    kernels: &[ContextKernel],
    records: &[Record],
) -> PotentialReport {
    let horizon = records.len();
    let snaps: Vec<EstimatorSnapshot> = records.iter().map(Record::snapshot).collect();
    let mut contexts = Vec::new();
    for kernel in kernels {
        let admissible = problem.actions.admissible(kernel.context);
        let mut cursor = IaCursor::new(kernel, problem.actions.len());
        let mut sum = 0.0;
        let mut finite_after_init = true;
        for (i, s) in snaps.iter().enumerate() {
            if i == kernel.dim {
                finite_after_init = admissible
                    .iter()
                    .all(|a| kernel.value(cursor.state(), *a).is_finite());
            }
            let before = cursor.state().clone();
            let a = cursor.extend(kernel, &problem.class, admissible, *s);
            sum += kernel.value(&before, a).min(1.0);
        }
        let e_x = context_entropy(kernel.kind, kernel.kappa, kernel.dim);
        let bound = elliptical_bound(horizon.max(2), e_x);
        contexts.push(ContextPotential {
            context: kernel.context,
            sum,
            bound,
            finite_after_init,
            pass: finite_after_init && sum <= bound + AUDIT_SLACK,
        });
    }
    let pass = contexts.iter().all(|c| c.pass);
    PotentialReport { contexts, pass }
}

/// Aggregate statistics over allocation-routine invocations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AllocationStats {
    pub invocations: usize,
    pub max_descent_steps: usize,
    pub cap_violations: usize,
    pub slack_violations: usize,
    pub descent_violations: usize,
    pub rescale_violations: usize,
    pub normalizations: usize,
    pub pass: bool,
}

pub fn allocation_audit(reports: &[SubroutineReport]) -> AllocationStats {
    let mut out = AllocationStats {
        invocations: reports.len(),
        ..AllocationStats::default()
    };
    for r in reports {
        out.max_descent_steps = out.max_descent_steps.max(r.descent_steps);
        out.cap_violations += usize::from(r.descent_steps > r.cap);
        out.slack_violations += usize::from(!(r.worst_slack <= CHECK_TOL));
        out.descent_violations +=
            usize::from(r.descent_steps > 0 && r.min_descent_drop() < 0.25 - CHECK_TOL);
        out.rescale_violations += usize::from(r.max_rescale_increase() > CHECK_TOL);
        out.normalizations += usize::from(r.normalized);
    }
    out.pass = out.cap_violations == 0
        && out.slack_violations == 0
        && out.descent_violations == 0
        && out.rescale_violations == 0
        && out.normalizations == 0;
    out
}
