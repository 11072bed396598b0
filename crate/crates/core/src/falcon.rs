//! Epoch-based randomized agent for the linear action model and the
//! coordinate-descent allocation routine it calls every round.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::Agent;
use crate::error::{check_delta, invalid, Error, Result};
use crate::geometry::{action_maximize, barycentric_spanner, coefficients_in_basis, Spanner};
use crate::linalg::Gram;
use crate::model::{ActionId, ClassForm, ContextId, EstimatorSnapshot, Problem};
use crate::oracle::SseTable;

/// Slack used by every numerical check in this module.
pub const CHECK_TOL: f64 = 1e-9;

/// `τ_m = 2^m` for `m ≥ 1`, `τ_0 = 0`.
pub fn epoch_end(m: u32) -> usize {
    if m == 0 {
        0
    } else {
        1usize << m
    }
}

/// The epoch containing round `t ≥ 1`: the smallest `m ≥ 1` with `τ_m ≥ t`.
pub fn epoch_of(t: usize) -> u32 {
    let mut m = 1;
    while epoch_end(m) < t {
        m += 1;
    }
    m
}

/// `β_1 = 1`, `β_m = 30 √(ln(|F| τ_{m−1} / δ) / (2 d τ_{m−1}))`.
pub fn beta_falcon(m: u32, class_size: usize, delta: f64, d: usize) -> Result<f64> {
    check_delta(delta)?;
    if m == 0 {
        return Err(invalid("m", "epochs are numbered from 1"));
    }
    if m == 1 {
        return Ok(1.0);
    }
    let tau = epoch_end(m - 1) as f64;
    Ok(30.0 * ((class_size as f64 * tau / delta).ln() / (2.0 * d as f64 * tau)).sqrt())
}

/// `⌈4/β + 8d(ln d + 1)⌉`, the bound on descent steps.
pub fn iteration_cap(beta: f64, d: usize) -> usize {
    let d = d as f64;
    (4.0 / beta + 8.0 * d * (d.ln() + 1.0)).ceil() as usize
}

/// Nonnegative weights on grid actions; total mass in `(0, 1]` for iterates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseActionDistribution {
    atoms: BTreeMap<ActionId, f64>,
}

impl SparseActionDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (ActionId, f64)>) -> Self {
        let mut out = Self::new();
        for (a, w) in atoms {
            out.add(a, w);
        }
        out
    }

    pub fn add(&mut self, a: ActionId, weight: f64) {
        *self.atoms.entry(a).or_insert(0.0) += weight;
    }

    pub fn weight(&self, a: ActionId) -> f64 {
        self.atoms.get(&a).copied().unwrap_or(0.0)
    }

    pub fn atoms(&self) -> impl Iterator<Item = (ActionId, f64)> + '_ {
        self.atoms.iter().map(|(a, w)| (*a, *w))
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.atoms.values().sum()
    }

    pub fn scale(&mut self, c: f64) {
        for w in self.atoms.values_mut() {
            *w *= c;
        }
    }

    /// `E_q[f(a)]` under the (possibly improper) weights.
    pub fn expect(&self, f: impl Fn(ActionId) -> f64) -> f64 {
        self.atoms.iter().map(|(a, w)| w * f(*a)).sum()
    }

    /// `E_q[v_a v_aᵀ]`.
    pub fn gram(&self, vectors: &[Vec<f64>]) -> Gram {
        let mut g = Gram::new(vectors[0].len());
        for (a, w) in &self.atoms {
            g.add(&vectors[*a], *w);
        }
        g
    }

    /// Inverse-CDF draw in atom order for `u ∈ [0, 1)`.
    pub fn sample(&self, u: f64) -> ActionId {
        let target = u * self.mass();
        let mut acc = 0.0;
        let mut last = 0;
        for (a, w) in &self.atoms {
            if *w <= 0.0 {
                continue;
            }
            acc += w;
            last = *a;
            if target < acc {
                return *a;
            }
        }
        last
    }
}

/// The action set with its spanner and every action's spanner coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionGeometry {
    pub vectors: Vec<Vec<f64>>,
    pub spanner: Spanner,
    pub coefficients: Vec<Vec<f64>>,
}

impl ActionGeometry {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let spanner = barycentric_spanner(&vectors)?;
        let coefficients = vectors
            .iter()
            .map(|v| coefficients_in_basis(v, &spanner.vectors))
            .collect::<Result<_>>()?;
        Ok(Self {
            vectors,
            spanner,
            coefficients,
        })
    }

    pub fn dim(&self) -> usize {
        self.spanner.dim()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// `Φ(q) = −2 ln det(E_q[b bᵀ]) + E_q[2d + (ĥ(â) − ĥ(a))/β]` with `b` the spanner coefficients.
pub fn potential_phi(
    q: &SparseActionDistribution,
    h: &[f64],
    a_hat: ActionId,
    beta: f64,
    geom: &ActionGeometry,
) -> Result<f64> {
    let d = geom.dim() as f64;
    let det = q
        .gram(&geom.coefficients)
        .factor()
        .ok_or(Error::SingularGram)?
        .det();
    if !(det > 0.0) {
        return Err(Error::SingularGram);
    }
    Ok(-2.0 * det.ln() + q.expect(|a| 2.0 * d + (h[a_hat] - h[a]) / beta))
}

/// How the iterate is shrunk before each argmax.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RescaleRule {
    /// `c = min{2d / E_q[2d + w], 1}`, the minimizer of `Φ` along the ray through `q`.
    #[default]
    RayMinimizer,
    /// `c = min{2d / (2d + E_q[w]), 1}`, which ignores the iterate's current mass.
    AsPrinted,
}

/// Step length of the coordinate-descent update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// `Δ = (2V − 2d − w) / (2V²)`, the maximizer of the second-order decrease.
    #[default]
    Derived,
    /// `Δ = (−2V + 2d + w) / V²`.
    AsPrinted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SubroutineOptions {
    #[serde(default)]
    pub rescale: RescaleRule,
    #[serde(default)]
    pub step: StepRule,
}

/// Diagnostics of one subroutine invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubroutineReport {
    /// Descent steps taken (non-halting iterations).
    pub descent_steps: usize,
    pub cap: usize,
    /// `Φ(q₀)`, then alternately the value after each rescale and after each descent step.
    pub phi_trace: Vec<f64>,
    /// Mass of the iterate at the halting test, before the deficit is filled.
    pub final_mass: f64,
    /// Largest violation of the allocation constraints by the output (≤ 0 means satisfied).
    pub worst_slack: f64,
    /// Whether the output had to be renormalized because the iterate's mass exceeded 1.
    pub normalized: bool,
}

impl SubroutineReport {
    /// Largest `Φ` increase across a rescale (≤ 0 when rescaling never hurts).
    pub fn max_rescale_increase(&self) -> f64 {
        self.phi_trace
            .windows(2)
            .step_by(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest `Φ` decrease over a descent step, or `+∞` without descent steps.
    pub fn min_descent_drop(&self) -> f64 {
        self.phi_trace
            .windows(2)
            .skip(1)
            .step_by(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Finds an allocation `p` over the grid with `E_p[ĥ(â) − ĥ(a)] ≤ 2βd` and
/// `ĥ(a) + β aᵀ(E_p[ããᵀ])⁻¹a ≤ ĥ(â) + 2βd` for every action.
pub fn optimistic_subroutine(
    geom: &ActionGeometry,
    a_hat: ActionId,
    h: &[f64],
    beta: f64,
    options: SubroutineOptions,
) -> Result<(SparseActionDistribution, SubroutineReport)> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid("beta", format!("{beta} must be positive")));
    }
    if h.len() != geom.len() || a_hat >= geom.len() {
        return Err(invalid(
            "h",
            "ĥ must cover the grid and â must be a grid index",
        ));
    }
    let h_max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if h[a_hat] < h_max {
        return Err(invalid("a_hat", "â must maximize ĥ"));
    }
    let d = geom.dim();
    let df = d as f64;
    let cap = iteration_cap(beta, d);
    let w: Vec<f64> = h.iter().map(|v| (h[a_hat] - v) / beta).collect();
    let mut q =
        SparseActionDistribution::from_atoms(geom.spanner.indices.iter().map(|i| (*i, 1.0 / df)));
    let mut phi_trace = vec![potential_phi(&q, h, a_hat, beta, geom)?];
    let mut descent_steps = 0;
    loop {
        let ew = q.expect(|a| w[a]);
        let c = match options.rescale {
            RescaleRule::RayMinimizer => 2.0 * df / (2.0 * df * q.mass() + ew),
            RescaleRule::AsPrinted => 2.0 * df / (2.0 * df + ew),
        }
        .min(1.0);
        q.scale(c);
        phi_trace.push(potential_phi(&q, h, a_hat, beta, geom)?);

        let factor = q.gram(&geom.vectors).factor().ok_or(Error::SingularGram)?;
        let quad: Vec<f64> = geom.vectors.iter().map(|a| factor.quadratic(a)).collect();
        let objective: Vec<f64> = h.iter().zip(&quad).map(|(hv, v)| hv + beta * v).collect();
        let at = action_maximize(&objective);
        if objective[at] <= h[a_hat] + 2.0 * beta * df {
            break;
        }
        if descent_steps == cap {
            return Err(Error::IterationCap { cap, phi_trace });
        }
        let v = quad[at];
        let delta = match options.step {
            StepRule::Derived => (2.0 * v - 2.0 * df - w[at]) / (2.0 * v * v),
            StepRule::AsPrinted => (-2.0 * v + 2.0 * df + w[at]) / (v * v),
        };
        q.add(at, delta);
        descent_steps += 1;
        if q.atoms().any(|(_, wt)| !(wt >= 0.0)) {
            log::debug!("descent step produced a negative weight at action {at}");
            return Err(Error::IterationCap { cap, phi_trace });
        }
        phi_trace.push(potential_phi(&q, h, a_hat, beta, geom)?);
    }
    let final_mass = q.mass();
    let mut normalized = false;
    if final_mass > 1.0 + CHECK_TOL {
        log::warn!("subroutine iterate has mass {final_mass} > 1; renormalizing");
        q.scale(1.0 / final_mass);
        normalized = true;
    } else if final_mass < 1.0 {
        q.add(a_hat, 1.0 - final_mass);
    }
    let check = verify_allocation(&q, h, a_hat, beta, d, &geom.vectors);
    Ok((
        q,
        SubroutineReport {
            descent_steps,
            cap,
            phi_trace,
            final_mass,
            worst_slack: check.worst_slack,
            normalized,
        },
    ))
}

/// Outcome of checking an allocation against both constraints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationCheck {
    pub pass: bool,
    /// Largest constraint violation; `+∞` if the Gram is singular.
    pub worst_slack: f64,
    pub mass: f64,
}

/// Checks `E_p[ĥ(â) − ĥ(a)] ≤ 2βd` and `ĥ(a) + β aᵀ(E_p[ããᵀ])⁻¹a ≤ ĥ(â) + 2βd` at tolerance.
pub fn verify_allocation(
    p: &SparseActionDistribution,
    h: &[f64],
    a_hat: ActionId,
    beta: f64,
    d: usize,
    grid: &[Vec<f64>],
) -> AllocationCheck {
    let rhs = 2.0 * beta * d as f64;
    let mass = p.mass();
    let mut worst = p.expect(|a| h[a_hat] - h[a]) - rhs;
    match p.gram(grid).factor() {
        Some(f) => {
            for (a, v) in grid.iter().enumerate() {
                worst = worst.max(h[a] + beta * f.quadratic(v) - h[a_hat] - rhs);
            }
        }
        None => worst = f64::INFINITY,
    }
    AllocationCheck {
        pass: (mass - 1.0).abs() <= CHECK_TOL && worst <= CHECK_TOL,
        worst_slack: worst,
        mass,
    }
}

/// Epoch-based randomized agent for the linear action model.
#[derive(Clone, Debug)]
pub struct FalconAgent {
    problem: Arc<Problem>,
    geom: ActionGeometry,
    delta: f64,
    options: SubroutineOptions,
    oracle: SseTable,
    epoch: u32,
    current: EstimatorSnapshot,
    cache: HashMap<ContextId, SparseActionDistribution>,
    pending: Option<SubroutineReport>,
    oracle_calls: usize,
}

impl FalconAgent {
    pub fn new(problem: Arc<Problem>, delta: f64, options: SubroutineOptions) -> Result<Self> {
        check_delta(delta)?;
        if !matches!(problem.class.form(), ClassForm::Linear) {
            return Err(invalid("class", "FALCON needs a linear class"));
        }
        if problem.actions.is_restricted() {
            return Err(invalid(
                "actions",
                "FALCON needs one action set shared by every context",
            ));
        }
        let geom = ActionGeometry::new(problem.actions.vectors())?;
        Ok(Self {
            oracle: SseTable::new(problem.class.len()),
            problem,
            geom,
            delta,
            options,
            epoch: 0,
            current: EstimatorSnapshot { fhat: 0, beta: 1.0 },
            cache: HashMap::new(),
            pending: None,
            oracle_calls: 0,
        })
    }

    pub fn geometry(&self) -> &ActionGeometry {
        &self.geom
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    /// The allocation at `x` under the current estimate, computing it if needed.
    pub fn allocation(&mut self, x: ContextId) -> Result<&SparseActionDistribution> {
        if !self.cache.contains_key(&x) {
            let h = self.problem.class.row(self.current.fhat, x).to_vec();
            let a_hat = action_maximize(&h);
            let (p, report) =
                optimistic_subroutine(&self.geom, a_hat, &h, self.current.beta, self.options)?;
            self.pending = Some(report);
            self.cache.insert(x, p);
        }
        Ok(&self.cache[&x])
    }
}

impl Agent for FalconAgent {
    fn name(&self) -> &'static str {
        "falcon"
    }

    fn select(&mut self, t: usize, x: ContextId, rng: &mut ChaCha8Rng) -> Result<ActionId> {
        let m = epoch_of(t);
        if m != self.epoch {
            self.epoch = m;
            let fhat = if m >= 2 {
                self.oracle_calls += 1;
                self.oracle.least_squares()
            } else {
                0
            };
            let beta = beta_falcon(m, self.problem.class.len(), self.delta, self.geom.dim())?;
            self.current = EstimatorSnapshot { fhat, beta };
            self.cache.clear();
        }
        let u = rng.gen::<f64>();
        Ok(self.allocation(x)?.sample(u))
    }

    fn snapshot(&self) -> EstimatorSnapshot {
        self.current
    }

    fn update(&mut self, _t: usize, x: ContextId, a: ActionId, r: f64) -> Result<()> {
        self.oracle.update(&self.problem.class, x, a, r);
        Ok(())
    }

    fn take_report(&mut self) -> Option<SubroutineReport> {
        self.pending.take()
    }

    fn oracle_calls(&self) -> usize {
        self.oracle_calls
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{run_episode, Environment, EpisodeConfig, RewardModel};
    use crate::model::{ActionSpace, ContextSpace, FunctionClass, GroundTruth, Member};
    use crate::rng::{stream, Purpose};

    fn geom(grid: Vec<Vec<f64>>) -> ActionGeometry {
        ActionGeometry::new(grid).unwrap()
    }

    #[test]
    fn epoch_boundaries() {
        assert_eq!(epoch_end(0), 0);
        assert_eq!(epoch_end(3), 8);
        let firsts: Vec<usize> = (2..=5).map(|m| epoch_end(m - 1) + 1).collect();
        assert_eq!(firsts, vec![3, 5, 9, 17]);
        for t in 1..200 {
            let m = epoch_of(t);
            assert!(epoch_end(m - 1) < t && t <= epoch_end(m));
        }
    }

    #[test]
    fn beta_falcon_values() {
        assert_eq!(beta_falcon(1, 16, 0.1, 2).unwrap(), 1.0);
        let b2 = beta_falcon(2, 16, 0.1, 2).unwrap();
        assert!((b2 - 25.47422446369662).abs() < 1e-9 * b2);
        let b3 = beta_falcon(3, 16, 0.1, 2).unwrap();
        assert!((b3 - 19.064563591121).abs() < 1e-9 * b3);
    }

    #[test]
    fn cap_value() {
        assert_eq!(iteration_cap(1.0, 2), 32);
    }

    #[test]
    fn phi_examples() {
        let g = geom(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let q = SparseActionDistribution::from_atoms([(0, 0.5), (1, 0.5)]);
        let v = potential_phi(&q, &[0.5, 0.5], 0, 1.0, &g).unwrap();
        assert!((v - 6.772588722239781).abs() < 1e-12);

        let g1 = geom(vec![vec![1.0]]);
        let q = SparseActionDistribution::from_atoms([(0, 1.0)]);
        assert!((potential_phi(&q, &[0.3], 0, 1.0, &g1).unwrap() - 2.0).abs() < 1e-15);
        for c in [0.1, 0.5, 0.9] {
            let q = SparseActionDistribution::from_atoms([(0, c)]);
            let want = -2.0 * f64::ln(c) + 2.0 * c;
            assert!((potential_phi(&q, &[0.3], 0, 1.0, &g1).unwrap() - want).abs() < 1e-12);
        }
        let empty = SparseActionDistribution::new();
        assert!(matches!(
            potential_phi(&empty, &[0.3], 0, 1.0, &g1),
            Err(Error::SingularGram)
        ));
    }

    #[test]
    fn constant_h_returns_uniform_spanner() {
        let g = geom(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let (p, report) =
            optimistic_subroutine(&g, 0, &[0.4, 0.4, 0.4], 0.5, SubroutineOptions::default())
                .unwrap();
        assert_eq!(
            p,
            SparseActionDistribution::from_atoms([(0, 0.5), (1, 0.5)])
        );
        assert_eq!(report.descent_steps, 0);
        assert!(verify_allocation(&p, &[0.4; 3], 0, 0.5, 2, &g.vectors).pass);
    }

    #[test]
    fn one_dimensional_greedy_atom() {
        let g = geom(vec![vec![1.0], vec![0.5]]);
        let (p, _) =
            optimistic_subroutine(&g, 0, &[0.9, 0.1], 0.1, SubroutineOptions::default()).unwrap();
        assert_eq!(p, SparseActionDistribution::from_atoms([(0, 1.0)]));
    }

    #[test]
    fn verify_allocation_examples() {
        let grid = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let unit = SparseActionDistribution::from_atoms([(0, 1.0)]);
        let chk = verify_allocation(&unit, &[0.5, 0.5], 0, 1.0, 2, &grid);
        assert!(!chk.pass && chk.worst_slack.is_infinite());
        let uniform = SparseActionDistribution::from_atoms([(0, 0.5), (1, 0.5)]);
        assert!(verify_allocation(&uniform, &[0.9, 0.1], 0, 1e6, 2, &grid).pass);
    }

    #[test]
    fn printed_step_sign_fails_to_descend() {
        // Pushing mass toward the most violating action never reduces the potential.
        let wide = geom(vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, -1.0],
        ]);
        let h = [0.2, 0.2, 0.9, 0.2];
        let printed = optimistic_subroutine(
            &wide,
            2,
            &h,
            0.05,
            SubroutineOptions {
                step: StepRule::AsPrinted,
                ..SubroutineOptions::default()
            },
        );
        assert!(matches!(
            printed,
            Err(Error::IterationCap { .. }) | Err(Error::SingularGram)
        ));
        let fixed =
            optimistic_subroutine(&wide, 2, &h, 0.05, SubroutineOptions::default()).unwrap();
        assert!(fixed.1.descent_steps > 0);
        assert!(fixed.1.min_descent_drop() >= 0.25 - CHECK_TOL);
    }

    #[test]
    fn printed_rescale_can_raise_phi() {
        // d = 1, mass 0.5, E_q[w] = 1: the printed factor overshoots the ray minimizer.
        let g1 = geom(vec![vec![1.0], vec![0.5]]);
        let beta = 1.0;
        let h = [1.0, 0.0];
        let q = SparseActionDistribution::from_atoms([(0, 0.25), (1, 0.25)]);
        let ew = q.expect(|a| (h[0] - h[a]) / beta);
        assert!((ew - 0.25).abs() < 1e-15);
        let before = potential_phi(&q, &h, 0, beta, &g1).unwrap();
        let mut printed = q.clone();
        printed.scale((2.0 / (2.0 + ew)).min(1.0));
        let mut ray = q.clone();
        ray.scale((2.0 / (2.0 * q.mass() + ew)).min(1.0));
        let after_ray = potential_phi(&ray, &h, 0, beta, &g1).unwrap();
        let after_printed = potential_phi(&printed, &h, 0, beta, &g1).unwrap();
        assert!(after_ray <= before + CHECK_TOL);
        assert!(after_printed > before);
    }

    #[test]
    fn sample_follows_atoms() {
        let p = SparseActionDistribution::from_atoms([(2, 0.25), (5, 0.75)]);
        assert_eq!(p.sample(0.0), 2);
        assert_eq!(p.sample(0.2499), 2);
        assert_eq!(p.sample(0.25), 5);
        assert_eq!(p.sample(0.9999), 5);
    }

    fn linear_problem(grid: Vec<Vec<f64>>, gs: Vec<Vec<f64>>, star: usize) -> Arc<Problem> {
        let cs = ContextSpace::uniform(1).unwrap();
        let acts = ActionSpace::grid(grid).unwrap();
        let members = gs.into_iter().map(|g| Member::Vectors(vec![g])).collect();
        let class = FunctionClass::new(ClassForm::Linear, members, &cs, &acts).unwrap();
        Arc::new(Problem::new(cs, acts, class, GroundTruth { f_star_index: star }).unwrap())
    }

    #[test]
    fn singleton_constant_class_samples_spanner_uniformly() {
        let p = linear_problem(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]],
            vec![vec![0.3, 0.3]],
            0,
        );
        let mut agent = FalconAgent::new(p, 0.1, SubroutineOptions::default()).unwrap();
        let n = 10_000;
        let mut zeros = 0;
        for t in 1..=n {
            let a = agent
                .select(1, 0, &mut stream(4, Purpose::Agent, 0, t))
                .unwrap();
            assert!(a < 2);
            zeros += usize::from(a == 0);
        }
        let sd = (0.25 / n as f64).sqrt();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 3.0 * sd);
    }

    #[test]
    fn greedy_mass_grows_across_epochs() {
        let grid = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.6]];
        let p = linear_problem(grid, vec![vec![0.9, 0.1], vec![0.1, 0.9]], 0);
        let mut agent = FalconAgent::new(p.clone(), 0.1, SubroutineOptions::default()).unwrap();
        let mut masses = Vec::new();
        for m in 2..=12u32 {
            agent.epoch = m;
            agent.current = EstimatorSnapshot {
                fhat: 0,
                beta: beta_falcon(m, 2, 0.1, 2).unwrap(),
            };
            agent.cache.clear();
            masses.push(agent.allocation(0).unwrap().weight(0));
        }
        assert!(masses.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(masses.last().unwrap() > masses.first().unwrap());
    }

    #[test]
    fn oracle_calls_and_constant_estimates() {
        let grid = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.6]];
        let p = linear_problem(
            grid,
            vec![vec![0.9, 0.1], vec![0.1, 0.9], vec![0.5, 0.5]],
            1,
        );
        let env = Environment::new(p.clone(), RewardModel::Bernoulli).unwrap();
        let mut agent = FalconAgent::new(p, 0.1, SubroutineOptions::default()).unwrap();
        let horizon = 1000;
        let ep = run_episode(&EpisodeConfig::new(horizon, 9).unwrap(), &mut agent, &env).unwrap();
        assert_eq!(ep.oracle_calls, 9);
        for r in ep.trajectory.records() {
            let m = epoch_of(r.t);
            let first = &ep.trajectory.records()[epoch_end(m - 1)];
            assert_eq!((r.fhat, r.beta), (first.fhat, first.beta));
        }
        let run = |seed| {
            let mut a =
                FalconAgent::new(env.shared_problem(), 0.1, SubroutineOptions::default()).unwrap();
            run_episode(&EpisodeConfig::new(300, seed).unwrap(), &mut a, &env)
                .unwrap()
                .trajectory
        };
        assert_eq!(run(3), run(3));
    }
}
