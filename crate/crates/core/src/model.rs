//! Domain types shared by agents, the simulator and the audits: context
//! distributions, action sets, finite function classes, trajectories and
//! regret accounting.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, Matrix};

pub type ContextId = usize;
pub type ActionId = usize;

/// Finite context space with an explicit distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextSpace {
    labels: Vec<String>,
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ContextSpace {
    pub fn new(labels: Vec<String>, probabilities: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid("contexts", "at least one context is required"));
        }
        if labels.len() != probabilities.len() {
            return Err(invalid(
                "probabilities",
                format!(
                    "{} labels but {} probabilities",
                    labels.len(),
                    probabilities.len()
                ),
            ));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(invalid(
                    "contexts",
                    format!("duplicate context label {l:?}"),
                ));
            }
        }
        if let Some(p) = probabilities
            .iter()
            .find(|p| !(**p >= 0.0) || !p.is_finite())
        {
            return Err(invalid(
                "probabilities",
                format!("{p} is not a probability"),
            ));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(
                "probabilities",
                format!("sum is {total}, expected 1"),
            ));
        }
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            labels,
            probabilities,
            cumulative,
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        let labels = (0..n).map(|i| format!("x{i}")).collect();
        Self::new(labels, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, x: ContextId) -> f64 {
        self.probabilities[x]
    }

    /// Inverse-CDF lookup for a uniform draw `u ∈ [0, 1)`.
    pub fn draw(&self, u: f64) -> ContextId {
        let target = u * self.cumulative[self.cumulative.len() - 1];
        let idx = self.cumulative.partition_point(|c| *c <= target);
        let mut idx = idx.min(self.len() - 1);
        // Zero-probability contexts are never drawn.
        while self.probabilities[idx] == 0.0 && idx + 1 < self.len() {
            idx += 1;
        }
        idx
    }
}

/// The shape of the action set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ActionKind {
    /// `K` unstructured arms, embedded as unit vectors `e_a` when geometry is needed.
    Finite { k: usize },
    /// A finite list of `d`-dimensional action vectors.
    Grid { points: Vec<Vec<f64>> },
}

/// Action set with optional per-context restrictions `A(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSpace {
    kind: ActionKind,
    all: Vec<ActionId>,
    restrictions: Option<Vec<Vec<ActionId>>>,
}

impl ActionSpace {
    pub fn finite(k: usize) -> Result<Self> {
        Self::new(ActionKind::Finite { k }, None)
    }

    pub fn grid(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(ActionKind::Grid { points }, None)
    }

    /// `restrictions[x]` lists the admissible grid indices for context `x`, in grid order.
    pub fn new(kind: ActionKind, restrictions: Option<Vec<Vec<ActionId>>>) -> Result<Self> {
        let n = match &kind {
            ActionKind::Finite { k } => {
                if *k == 0 {
                    return Err(invalid("k", "need at least one action"));
                }
                *k
            }
            ActionKind::Grid { points } => {
                let d = points.first().map_or(0, Vec::len);
                if points.is_empty() || d == 0 {
                    return Err(invalid(
                        "points",
                        "grid needs at least one vector of dimension >= 1",
                    ));
                }
                if points.iter().any(|p| p.len() != d) {
                    return Err(invalid("points", "grid vectors have different dimensions"));
                }
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(invalid("points", "grid vectors must be finite"));
                }
                points.len()
            }
        };
        let restrictions = match restrictions {
            None => None,
            Some(r) => {
                let mut out = Vec::with_capacity(r.len());
                for (x, mut set) in r.into_iter().enumerate() {
                    set.sort_unstable();
                    set.dedup();
                    if set.is_empty() {
                        return Err(invalid(
                            "restrictions",
                            format!("context {x} has an empty action set"),
                        ));
                    }
                    if let Some(a) = set.iter().find(|a| **a >= n) {
                        return Err(invalid(
                            "restrictions",
                            format!("context {x} lists action {a} but only {n} exist"),
                        ));
                    }
                    out.push(set);
                }
                Some(out)
            }
        };
        Ok(Self {
            kind,
            all: (0..n).collect(),
            restrictions,
        })
    }

    pub fn kind(&self) -> &ActionKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }

    /// Dimension of the action embedding (`K` for finite actions).
    pub fn dim(&self) -> usize {
        match &self.kind {
            ActionKind::Finite { k } => *k,
            ActionKind::Grid { points } => points[0].len(),
        }
    }

    pub fn is_restricted(&self) -> bool {
        self.restrictions.is_some()
    }

    pub fn restrictions(&self) -> Option<&[Vec<ActionId>]> {
        self.restrictions.as_deref()
    }

    /// Admissible actions at `x`, ascending.
    pub fn admissible(&self, x: ContextId) -> &[ActionId] {
        match &self.restrictions {
            Some(r) => &r[x],
            None => &self.all,
        }
    }

    pub fn is_admissible(&self, x: ContextId, a: ActionId) -> bool {
        match &self.restrictions {
            Some(r) => r.get(x).is_some_and(|s| s.binary_search(&a).is_ok()),
            None => a < self.all.len(),
        }
    }

    /// The vector of action `a` (`e_a` for finite actions).
    pub fn vector(&self, a: ActionId) -> Vec<f64> {
        match &self.kind {
            ActionKind::Finite { k } => {
                let mut e = vec![0.0; *k];
                e[a] = 1.0;
                e
            }
            ActionKind::Grid { points } => points[a].clone(),
        }
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.all.iter().map(|a| self.vector(*a)).collect()
    }
}

/// Strictly increasing link functions with analytic derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Link {
    Logistic,
    IdentityClipped,
    Probit,
}

impl Link {
    pub fn value(self, z: f64) -> f64 {
        match self {
            Link::Logistic => 1.0 / (1.0 + (-z).exp()),
            Link::IdentityClipped => z.clamp(0.0, 1.0),
            Link::Probit => 0.5 * erfc(-z / std::f64::consts::SQRT_2),
        }
    }

    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Link::Logistic => {
                let s = self.value(z);
                s * (1.0 - s)
            }
            Link::IdentityClipped => {
                if (0.0..=1.0).contains(&z) {
                    1.0
                } else {
                    0.0
                }
            }
            Link::Probit => (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt(),
        }
    }

    /// Location of the derivative's maximum; every registered link is unimodal in σ′.
    pub(crate) fn derivative_mode(self) -> f64 {
        match self {
            Link::Logistic | Link::Probit => 0.0,
            Link::IdentityClipped => 0.5,
        }
    }
}

/// Feature map `φ(x, a)` of the generalized linear model.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureMap {
    /// `φ(x, a) = a`.
    Identity,
    /// `φ(x, a) = M_x a` with one matrix per context.
    PerContext(Vec<Matrix>),
}

impl FeatureMap {
    pub fn apply(&self, x: ContextId, a: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::Identity => a.to_vec(),
            FeatureMap::PerContext(ms) => ms[x].mul_vec(a),
        }
    }

    pub fn out_dim(&self, action_dim: usize) -> usize {
        match self {
            FeatureMap::Identity => action_dim,
            FeatureMap::PerContext(ms) => ms.first().map_or(action_dim, Matrix::rows),
        }
    }
}

/// Structural form shared by all members of a class.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassForm {
    /// `f(x, a) = table[x][a]`.
    Tabular,
    /// `f(x, a) = g(x)ᵀ a`.
    Linear,
    /// `f(x, a) = σ_x(g(x)ᵀ φ(x, a))`.
    Glm {
        links: Vec<Link>,
        features: FeatureMap,
    },
    /// `f(x, a) = σ_x(g(x)ᵀ a)` on `a ∈ A(x)`.
    Hetero { links: Vec<Link> },
}

impl ClassForm {
    pub fn name(&self) -> &'static str {
        match self {
            ClassForm::Tabular => "tabular",
            ClassForm::Linear => "linear",
            ClassForm::Glm { .. } => "glm",
            ClassForm::Hetero { .. } => "hetero",
        }
    }

    pub fn link(&self, x: ContextId) -> Option<Link> {
        match self {
            ClassForm::Glm { links, .. } | ClassForm::Hetero { links } => Some(links[x]),
            _ => None,
        }
    }
}

/// Parameters of one member: a value table, or one `g(x)` vector per context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Member {
    Table(Vec<Vec<f64>>),
    Vectors(Vec<Vec<f64>>),
}

impl Member {
    fn rows(&self) -> &[Vec<f64>] {
        match self {
            Member::Table(r) | Member::Vectors(r) => r,
        }
    }
}

/// A finite, indexed family of reward functions with every value precomputed.
///
/// Member order is the tie-break order of the least-squares oracle.
#[derive(Clone, Debug)]
pub struct FunctionClass {
    form: ClassForm,
    members: Vec<Member>,
    n_contexts: usize,
    n_actions: usize,
    /// `values[(m * n_contexts + x) * n_actions + a]`; NaN where inadmissible.
    values: Vec<f64>,
    admissible: Vec<Vec<bool>>,
}

/// Values within this distance outside `[0, 1]` are clamped rather than rejected.
const RANGE_SLACK: f64 = 1e-12;

impl FunctionClass {
    pub fn new(
        form: ClassForm,
        members: Vec<Member>,
        contexts: &ContextSpace,
        actions: &ActionSpace,
    ) -> Result<Self> {
        let nx = contexts.len();
        let na = actions.len();
        if members.is_empty() {
            return Err(Error::Model("function class has no members".into()));
        }
        if let Some(r) = actions.restrictions() {
            if r.len() != nx {
                return Err(Error::Model(format!(
                    "{} action restrictions for {nx} contexts",
                    r.len()
                )));
            }
        }
        match &form {
            ClassForm::Glm { links, features } => {
                if links.len() != nx {
                    return Err(Error::Model(format!(
                        "{} links for {nx} contexts",
                        links.len()
                    )));
                }
                if let FeatureMap::PerContext(ms) = features {
                    if ms.len() != nx || ms.iter().any(|m| m.cols() != actions.dim()) {
                        return Err(Error::Model(
                            "feature matrices must be one per context with action-dimension columns".into(),
                        ));
                    }
                }
            }
            ClassForm::Hetero { links } if links.len() != nx => {
                return Err(Error::Model(format!(
                    "{} links for {nx} contexts",
                    links.len()
                )));
            }
            _ => {}
        }
        let admissible: Vec<Vec<bool>> = (0..nx)
            .map(|x| (0..na).map(|a| actions.is_admissible(x, a)).collect())
            .collect();
        let vectors = actions.vectors();
        let mut values = vec![f64::NAN; members.len() * nx * na];
        for (m, member) in members.iter().enumerate() {
            let rows = member.rows();
            if rows.len() != nx {
                return Err(Error::Model(format!(
                    "member {m} has {} rows for {nx} contexts",
                    rows.len()
                )));
            }
            for x in 0..nx {
                let row = &rows[x];
                let want = match &form {
                    ClassForm::Tabular => na,
                    ClassForm::Glm { features, .. } => features.out_dim(actions.dim()),
                    _ => actions.dim(),
                };
                if row.len() != want {
                    return Err(Error::Model(format!(
                        "member {m} context {x}: expected {want} entries, got {}",
                        row.len()
                    )));
                }
                for a in 0..na {
                    if !admissible[x][a] {
                        continue;
                    }
                    let v = match &form {
                        ClassForm::Tabular => row[a],
                        ClassForm::Linear => dot(row, &vectors[a]),
                        ClassForm::Glm { links, features } => {
                            links[x].value(dot(row, &features.apply(x, &vectors[a])))
                        }
                        ClassForm::Hetero { links } => links[x].value(dot(row, &vectors[a])),
                    };
                    if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v) {
                        return Err(Error::Model(format!(
                            "member {m} maps (context {x}, action {a}) to {v}, outside [0, 1]"
                        )));
                    }
                    values[(m * nx + x) * na + a] = v.clamp(0.0, 1.0);
                }
            }
        }
        Ok(Self {
            form,
            members,
            n_contexts: nx,
            n_actions: na,
            values,
            admissible,
        })
    }

    pub fn form(&self) -> &ClassForm {
        &self.form
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn n_contexts(&self) -> usize {
        self.n_contexts
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Mean reward of member `m` at `(x, a)`.
    pub fn evaluate(&self, m: usize, x: ContextId, a: ActionId) -> Result<f64> {
        if m >= self.members.len() {
            return Err(Error::MemberIndex {
                index: m,
                len: self.members.len(),
            });
        }
        if x >= self.n_contexts {
            return Err(Error::ContextIndex {
                index: x,
                len: self.n_contexts,
            });
        }
        if a >= self.n_actions || !self.admissible[x][a] {
            return Err(Error::InadmissibleAction {
                context: x,
                action: a,
            });
        }
        Ok(self.value(m, x, a))
    }

    /// Unchecked lookup; NaN for inadmissible actions.
    #[inline]
    pub fn value(&self, m: usize, x: ContextId, a: ActionId) -> f64 {
        self.values[(m * self.n_contexts + x) * self.n_actions + a]
    }

    /// All action values of member `m` at `x` (NaN where inadmissible).
    #[inline]
    pub fn row(&self, m: usize, x: ContextId) -> &[f64] {
        let start = (m * self.n_contexts + x) * self.n_actions;
        &self.values[start..start + self.n_actions]
    }

    /// `g(x)` of a vector-form member.
    pub fn member_vector(&self, m: usize, x: ContextId) -> Option<&[f64]> {
        match (&self.form, &self.members[m]) {
            (ClassForm::Tabular, _) => None,
            (_, member) => Some(&member.rows()[x]),
        }
    }

    /// Feature vector `φ(x, a)` used inside the link (the action itself for linear and hetero forms).
    pub fn feature(&self, actions: &ActionSpace, x: ContextId, a: ActionId) -> Vec<f64> {
        let v = actions.vector(a);
        match &self.form {
            ClassForm::Glm { features, .. } => features.apply(x, &v),
            _ => v,
        }
    }
}

/// Index of the realizable mean-reward function inside the class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub f_star_index: usize,
}

/// A complete realizable problem instance.
#[derive(Clone, Debug)]
pub struct Problem {
    pub contexts: ContextSpace,
    pub actions: ActionSpace,
    pub class: FunctionClass,
    pub truth: GroundTruth,
}

impl Problem {
    pub fn new(
        contexts: ContextSpace,
        actions: ActionSpace,
        class: FunctionClass,
        truth: GroundTruth,
    ) -> Result<Self> {
        if truth.f_star_index >= class.len() {
            return Err(Error::MemberIndex {
                index: truth.f_star_index,
                len: class.len(),
            });
        }
        if class.n_contexts() != contexts.len() || class.n_actions() != actions.len() {
            return Err(Error::Model(
                "class was built for a different problem".into(),
            ));
        }
        Ok(Self {
            contexts,
            actions,
            class,
            truth,
        })
    }

    pub fn f_star(&self, x: ContextId, a: ActionId) -> f64 {
        self.class.value(self.truth.f_star_index, x, a)
    }

    pub fn optimal_action(&self, x: ContextId) -> ActionId {
        optimal_action(&self.class, self.truth.f_star_index, x, &self.actions)
    }
}

/// Smallest-index maximizer of `f_m(x, ·)` over the admissible actions at `x`.
pub fn optimal_action(
    class: &FunctionClass,
    m: usize,
    x: ContextId,
    actions: &ActionSpace,
) -> ActionId {
    let row = class.row(m, x);
    let mut best = actions.admissible(x)[0];
    for &a in actions.admissible(x) {
        if row[a] > row[best] {
            best = a;
        }
    }
    best
}

/// The `(f̂ index, β)` pair in force at one round.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSnapshot {
    pub fhat: usize,
    pub beta: f64,
}

/// One logged round; serializes to `{"t","x","a","r","fhat","beta"}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: usize,
    pub x: ContextId,
    pub a: ActionId,
    pub r: f64,
    pub fhat: usize,
    pub beta: f64,
}

impl Record {
    pub fn snapshot(&self) -> EstimatorSnapshot {
        EstimatorSnapshot {
            fhat: self.fhat,
            beta: self.beta,
        }
    }
}

/// Append-only interaction history.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    records: Vec<Record>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<Record>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if r.t != i + 1 {
                return Err(Error::Model(format!(
                    "record {i} has round {} (rounds must be consecutive from 1)",
                    r.t
                )));
            }
        }
        Ok(Self { records })
    }

    pub fn push(&mut self, record: Record) {
        debug_assert_eq!(record.t, self.records.len() + 1);
        self.records.push(record);
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn snapshots(&self) -> Vec<EstimatorSnapshot> {
        self.records.iter().map(Record::snapshot).collect()
    }

    /// Checks round numbering and admissibility against a problem.
    pub fn validate(&self, problem: &Problem) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if r.t != i + 1 {
                return Err(Error::Model(format!(
                    "round {} logged at position {}",
                    r.t,
                    i + 1
                )));
            }
            if r.x >= problem.contexts.len() {
                return Err(Error::ContextIndex {
                    index: r.x,
                    len: problem.contexts.len(),
                });
            }
            if !problem.actions.is_admissible(r.x, r.a) {
                return Err(Error::InadmissibleAction {
                    context: r.x,
                    action: r.a,
                });
            }
            if !(0.0..=1.0).contains(&r.r) {
                return Err(Error::MeanOutOfRange(r.r));
            }
        }
        Ok(())
    }
}

/// Per-round and cumulative regret of one episode.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegretRecord {
    pub pathwise: Vec<f64>,
    pub pseudo: Vec<f64>,
    pub cum_pathwise: Vec<f64>,
    pub cum_pseudo: Vec<f64>,
}

impl RegretRecord {
    pub fn final_pathwise(&self) -> f64 {
        self.cum_pathwise.last().copied().unwrap_or(0.0)
    }

    pub fn final_pseudo(&self) -> f64 {
        self.cum_pseudo.last().copied().unwrap_or(0.0)
    }
}

/// Regret of a trajectory under the ground truth.
///
/// `optimal_rewards[t - 1]` is the realized reward the optimal arm would have
/// paid at round `t`; the pathwise column uses it, the pseudo column uses means.
pub fn accumulate_regret(
    trajectory: &Trajectory,
    problem: &Problem,
    optimal_rewards: &[f64],
) -> RegretRecord {
    assert_eq!(optimal_rewards.len(), trajectory.len());
    let mut out = RegretRecord::default();
    let (mut cp, mut cq) = (0.0, 0.0);
    for (rec, r_opt) in trajectory.records().iter().zip(optimal_rewards) {
        let best = problem.optimal_action(rec.x);
        let gap = (problem.f_star(rec.x, best) - problem.f_star(rec.x, rec.a)).max(0.0);
        let path = r_opt - rec.r;
        cp += path;
        cq += gap;
        out.pathwise.push(path);
        out.pseudo.push(gap);
        out.cum_pathwise.push(cp);
        out.cum_pseudo.push(cq);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tabular(tables: Vec<Vec<Vec<f64>>>) -> (ContextSpace, ActionSpace, FunctionClass) {
        let nx = tables[0].len();
        let k = tables[0][0].len();
        let cs = ContextSpace::uniform(nx).unwrap();
        let acts = ActionSpace::finite(k).unwrap();
        let class = FunctionClass::new(
            ClassForm::Tabular,
            tables.into_iter().map(Member::Table).collect(),
            &cs,
            &acts,
        )
        .unwrap();
        (cs, acts, class)
    }

    #[test]
    fn evaluate_tabular_lookup() {
        let (_, _, class) = tabular(vec![vec![vec![0.2, 0.8]]]);
        assert_eq!(class.evaluate(0, 0, 1).unwrap(), 0.8);
    }

    #[test]
    fn evaluate_linear_dot_product() {
        let cs = ContextSpace::uniform(1).unwrap();
        let acts = ActionSpace::grid(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let class = FunctionClass::new(
            ClassForm::Linear,
            vec![Member::Vectors(vec![vec![0.5, 0.5]])],
            &cs,
            &acts,
        )
        .unwrap();
        assert_eq!(class.evaluate(0, 0, 0).unwrap(), 0.5);
    }

    #[test]
    fn evaluate_glm_logistic_at_zero() {
        let cs = ContextSpace::uniform(1).unwrap();
        let acts = ActionSpace::grid(vec![vec![1.0, -1.0]]).unwrap();
        let class = FunctionClass::new(
            ClassForm::Glm {
                links: vec![Link::Logistic],
                features: FeatureMap::Identity,
            },
            vec![Member::Vectors(vec![vec![0.7, 0.7]])],
            &cs,
            &acts,
        )
        .unwrap();
        assert!((class.evaluate(0, 0, 0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn evaluate_rejects_inadmissible_action() {
        let cs = ContextSpace::uniform(2).unwrap();
        let acts = ActionSpace::new(
            ActionKind::Grid {
                points: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
            Some(vec![vec![0], vec![0, 1]]),
        )
        .unwrap();
        let class = FunctionClass::new(
            ClassForm::Hetero {
                links: vec![Link::IdentityClipped; 2],
            },
            vec![Member::Vectors(vec![vec![0.3, 0.3], vec![0.3, 0.6]])],
            &cs,
            &acts,
        )
        .unwrap();
        match class.evaluate(0, 0, 1) {
            Err(Error::InadmissibleAction {
                context: 0,
                action: 1,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(class.evaluate(0, 1, 1).unwrap(), 0.6);
    }

    #[test]
    fn out_of_range_members_are_rejected() {
        let cs = ContextSpace::uniform(1).unwrap();
        let acts = ActionSpace::grid(vec![vec![2.0]]).unwrap();
        let err = FunctionClass::new(
            ClassForm::Linear,
            vec![Member::Vectors(vec![vec![0.9]])],
            &cs,
            &acts,
        );
        assert!(err.is_err());
    }

    #[test]
    fn optimal_action_breaks_ties_by_index() {
        let (_, acts, class) = tabular(vec![vec![vec![0.3, 0.7, 0.7]]]);
        assert_eq!(optimal_action(&class, 0, 0, &acts), 1);
        let (_, acts, class) = tabular(vec![vec![vec![0.9]]]);
        assert_eq!(optimal_action(&class, 0, 0, &acts), 0);
    }

    #[test]
    fn optimal_action_on_linear_grid() {
        let cs = ContextSpace::uniform(1).unwrap();
        let grid = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]];
        let acts = ActionSpace::grid(grid.clone()).unwrap();
        let class = FunctionClass::new(
            ClassForm::Linear,
            vec![Member::Vectors(vec![vec![1.0, 0.0]])],
            &cs,
            &acts,
        )
        .unwrap();
        // Brute force over the grid.
        let brute = (0..grid.len())
            .max_by(|i, j| {
                grid[*i][0]
                    .partial_cmp(&grid[*j][0])
                    .unwrap()
                    .then(j.cmp(i))
            })
            .unwrap();
        assert_eq!(optimal_action(&class, 0, 0, &acts), brute);
        assert_eq!(brute, 1);
    }

    #[test]
    fn context_space_validation() {
        assert!(ContextSpace::new(vec!["a".into(), "a".into()], vec![0.5, 0.5]).is_err());
        assert!(ContextSpace::new(vec!["a".into(), "b".into()], vec![0.6, 0.5]).is_err());
        assert!(ContextSpace::new(vec!["a".into()], vec![-0.0 + 1.0]).is_ok());
        let cs = ContextSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0.5, 0.0, 0.5],
        )
        .unwrap();
        assert_eq!(cs.draw(0.0), 0);
        assert_eq!(cs.draw(0.4999), 0);
        assert_eq!(cs.draw(0.5), 2);
        assert_eq!(cs.draw(0.9999), 2);
    }

    fn one_context_problem(values: Vec<f64>) -> Problem {
        let (cs, acts, class) = tabular(vec![vec![values]]);
        Problem::new(cs, acts, class, GroundTruth { f_star_index: 0 }).unwrap()
    }

    fn rec(t: usize, a: usize, r: f64) -> Record {
        Record {
            t,
            x: 0,
            a,
            r,
            fhat: 0,
            beta: 1.0,
        }
    }

    #[test]
    fn pseudo_regret_single_round() {
        let p = one_context_problem(vec![0.9, 0.4]);
        let traj = Trajectory::from_records(vec![rec(1, 1, 0.0)]).unwrap();
        let reg = accumulate_regret(&traj, &p, &[1.0]);
        assert!((reg.pseudo[0] - 0.5).abs() < 1e-15);
        assert_eq!(reg.pathwise[0], 1.0);
    }

    #[test]
    fn pseudo_regret_prefix_sums() {
        let p = one_context_problem(vec![0.5, 0.4, 0.5, 0.3]);
        // gaps 0.1, 0, 0.2
        let traj =
            Trajectory::from_records(vec![rec(1, 1, 0.0), rec(2, 0, 1.0), rec(3, 3, 1.0)]).unwrap();
        let reg = accumulate_regret(&traj, &p, &[0.0, 1.0, 1.0]);
        let expect = [0.1, 0.1, 0.3];
        for (c, e) in reg.cum_pseudo.iter().zip(expect) {
            assert!((c - e).abs() < 1e-12);
        }
    }

    #[test]
    fn optimal_play_has_zero_pseudo_regret() {
        let p = one_context_problem(vec![0.2, 0.6]);
        let recs: Vec<_> = (1..=5).map(|t| rec(t, 1, 1.0)).collect();
        let traj = Trajectory::from_records(recs).unwrap();
        let reg = accumulate_regret(&traj, &p, &[1.0; 5]);
        assert!(reg.cum_pseudo.iter().all(|c| *c == 0.0));
        assert!(reg.cum_pathwise.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn record_json_field_names() {
        let s = serde_json::to_string(&rec(3, 1, 1.0)).unwrap();
        assert_eq!(s, r#"{"t":3,"x":0,"a":1,"r":1.0,"fhat":0,"beta":1.0}"#);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn argmax_invariant_under_constant_shift(vals in prop::collection::vec(0.0f64..0.5, 1..8), c in 0.0f64..0.5) {
                let (_, acts, class) = tabular(vec![vec![vals.clone()]]);
                let shifted: Vec<f64> = vals.iter().map(|v| v + c).collect();
                let (_, acts2, class2) = tabular(vec![vec![shifted]]);
                prop_assert_eq!(optimal_action(&class, 0, 0, &acts), optimal_action(&class2, 0, 0, &acts2));
            }

            #[test]
            fn cumulative_pseudo_regret_is_nondecreasing(vals in prop::collection::vec(0.0f64..=1.0, 2..5), plays in prop::collection::vec(0usize..4, 1..30)) {
                let k = vals.len();
                let p = one_context_problem(vals);
                let recs: Vec<_> = plays.iter().enumerate().map(|(i, a)| rec(i + 1, a % k, 0.0)).collect();
                let n = recs.len();
                let traj = Trajectory::from_records(recs).unwrap();
                let reg = accumulate_regret(&traj, &p, &vec![0.0; n]);
                for w in reg.cum_pseudo.windows(2) {
                    prop_assert!(w[1] >= w[0]);
                }
                prop_assert!(reg.pseudo.iter().all(|g| (0.0..=1.0).contains(g)));
            }
        }
    }
}
