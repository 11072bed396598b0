//! Action geometry: barycentric spanners, basis coefficients, counterfactual
//! action divergences, link curvature constants and grid maximization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    determinant, dot, orthonormal_basis, rank, solve_in_span, Gram, Matrix, RANK_REL_TOL,
};
use crate::model::{ActionId, ActionSpace, ClassForm, ContextId, FunctionClass, Link, Problem};

/// Replacement must grow `|det|` by more than this factor to count as an improvement.
const SPANNER_IMPROVEMENT: f64 = 1.0 + 1e-12;

/// `d` grid vectors, in grid order, such that every grid vector is a
/// combination of them with coefficients in `[−1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spanner {
    /// Positions of the members in the input grid.
    pub indices: Vec<usize>,
    pub vectors: Vec<Vec<f64>>,
    pub abs_det: f64,
}

impl Spanner {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

fn abs_det_of(grid: &[Vec<f64>], members: &[usize]) -> f64 {
    let cols: Vec<Vec<f64>> = members.iter().map(|i| grid[*i].clone()).collect();
    determinant(&Matrix::from_columns(&cols)).abs()
}

/// Exact determinant-maximizing spanner by iterative single-member replacement.
///
/// Starts from the first independent subset in grid order and scans
/// replacements in grid order, taking the first maximizer for each slot.
pub fn barycentric_spanner(grid: &[Vec<f64>]) -> Result<Spanner> {
    let d = grid.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::RankDeficient { rank: 0, dim: 0 });
    }
    let r = rank(grid, RANK_REL_TOL);
    if r < d {
        return Err(Error::RankDeficient { rank: r, dim: d });
    }
    let mut members: Vec<usize> = Vec::with_capacity(d);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    for (i, v) in grid.iter().enumerate() {
        rows.push(v.clone());
        if rank(&rows, RANK_REL_TOL) == rows.len() {
            members.push(i);
            if members.len() == d {
                break;
            }
        } else {
            rows.pop();
        }
    }
    let mut current = abs_det_of(grid, &members);
    loop {
        let mut improved = false;
        for slot in 0..d {
            let mut best = current;
            let mut best_j = None;
            for j in 0..grid.len() {
                let mut trial = members.clone();
                trial[slot] = j;
                let v = abs_det_of(grid, &trial);
                if v > best {
                    best = v;
                    best_j = Some(j);
                }
            }
            if let Some(j) = best_j {
                if best > current * SPANNER_IMPROVEMENT {
                    members[slot] = j;
                    current = best;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    members.sort_unstable();
    Ok(Spanner {
        vectors: members.iter().map(|i| grid[*i].clone()).collect(),
        indices: members,
        abs_det: current,
    })
}

/// Coefficients `b` with `Σ b_j basis_j = a`.
pub fn coefficients_in_basis(a: &[f64], basis: &[Vec<f64>]) -> Result<Vec<f64>> {
    solve_in_span(basis, a)
}

/// `1 / count`, with `+∞` for an unseen action.
pub fn divergence_finite(count: u64) -> f64 {
    if count == 0 {
        f64::INFINITY
    } else {
        1.0 / count as f64
    }
}

/// `aᵀ G⁻¹ a`, `+∞` when `G` is singular at tolerance.
pub fn divergence_linear(a: &[f64], gram: &Gram) -> f64 {
    gram.inverse_quadratic(a)
}

/// `κ² φᵀ G⁻¹ φ` for a feature vector `φ = φ(x, a)` and its history Gram.
pub fn divergence_glm(phi: &[f64], gram: &Gram, kappa: f64) -> f64 {
    kappa * kappa * divergence_linear(phi, gram)
}

/// `κ² bᵀ G⁻¹ b` where `b` are the coefficients of `a` in `basis`.
pub fn divergence_hetero(a: &[f64], gram: &Gram, kappa: f64, basis: &[Vec<f64>]) -> Result<f64> {
    let b = coefficients_in_basis(a, basis)?;
    Ok(kappa * kappa * divergence_linear(&b, gram))
}

fn derivative_ratio(max_d: f64, min_d: f64, at: f64) -> Result<f64> {
    if !(min_d > 0.0) {
        return Err(Error::NonIncreasingLink { at });
    }
    Ok((max_d / min_d).max(1.0))
}

/// Ratio of the largest to smallest `σ′` over the dot products `⟨g*, φ⟩` attained on `features`.
pub fn kappa(link: Link, g_star: &[f64], features: &[Vec<f64>]) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::Model("kappa needs a nonempty feature grid".into()));
    }
    let mut max_d = f64::NEG_INFINITY;
    let mut min_d = f64::INFINITY;
    let mut arg_min = 0.0;
    for phi in features {
        let z = dot(g_star, phi);
        let s = link.derivative(z);
        max_d = max_d.max(s);
        if s < min_d {
            min_d = s;
            arg_min = z;
        }
    }
    derivative_ratio(max_d, min_d, arg_min)
}

/// Ratio of sup to inf of `σ′` over the interval hull of every dot product
/// `⟨g, φ⟩` attained by any of `g_vectors` on `features`.
///
/// Unlike [`kappa`], this constant bounds the mean-value slope between any two
/// members, which is what the divergence inequality needs for members other than `f*`.
pub fn kappa_class(link: Link, g_vectors: &[&[f64]], features: &[Vec<f64>]) -> Result<f64> {
    if features.is_empty() || g_vectors.is_empty() {
        return Err(Error::Model(
            "kappa needs a nonempty feature grid and class".into(),
        ));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for g in g_vectors {
        for phi in features {
            let z = dot(g, phi);
            lo = lo.min(z);
            hi = hi.max(z);
        }
    }
    let max_d = link.derivative(link.derivative_mode().clamp(lo, hi));
    let (min_d, at) = {
        let (dl, dh) = (link.derivative(lo), link.derivative(hi));
        if dl <= dh {
            (dl, lo)
        } else {
            (dh, hi)
        }
    };
    derivative_ratio(max_d, min_d, at)
}

/// Smallest index attaining the maximum; `+∞` dominates and NaN never wins.
pub fn action_maximize(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.iter().enumerate() {
        if *v > best_v {
            best_v = *v;
            best = i;
        }
    }
    best
}

/// `Σ_t [1 ∧ aₜᵀ (Σ_{j<t} aⱼaⱼᵀ)⁻¹ aₜ]` for a sequence of vectors.
pub fn elliptical_potential(sequence: &[Vec<f64>]) -> f64 {
    let Some(first) = sequence.first() else {
        return 0.0;
    };
    let mut gram = Gram::new(first.len());
    let mut total = 0.0;
    for v in sequence {
        total += divergence_linear(v, &gram).min(1.0);
        gram.add(v, 1.0);
    }
    total
}

/// Which of the four divergences a class uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceKind {
    Finite,
    Linear,
    Glm,
    Hetero,
}

impl DivergenceKind {
    pub fn for_form(form: &ClassForm) -> Self {
        match form {
            ClassForm::Tabular => DivergenceKind::Finite,
            ClassForm::Linear => DivergenceKind::Linear,
            ClassForm::Glm { .. } => DivergenceKind::Glm,
            ClassForm::Hetero { .. } => DivergenceKind::Hetero,
        }
    }
}

/// How `κ_x` is obtained for GLM and heterogeneous classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KappaMode {
    /// From `f*` alone, over the dot products it attains.
    #[default]
    GroundTruth,
    /// Over the hull of dot products attained by every member.
    ClassUniform,
}

/// Per-context divergence data: embedding of each admissible action, the
/// `κ²` scale and the spanner used for initialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextKernel {
    pub context: ContextId,
    pub kind: DivergenceKind,
    /// Rank `d_x` of the divergence geometry at this context.
    pub dim: usize,
    pub kappa: f64,
    /// Spanner actions (grid ids) in initialization order.
    pub spanner: Vec<ActionId>,
    /// Embedding vectors indexed by action id; empty for inadmissible actions and finite kernels.
    pub embeddings: Vec<Vec<f64>>,
    /// Spanner basis in the ambient action space (heterogeneous kernel only).
    pub basis: Vec<Vec<f64>>,
}

/// Running divergence accumulator for one counterfactual trajectory.
#[derive(Clone, Debug, PartialEq)]
pub enum DivergenceState {
    Counts(Vec<u64>),
    Gram(Gram),
}

impl ContextKernel {
    pub fn build(problem: &Problem, x: ContextId, mode: KappaMode) -> Result<Self> {
        let kind = DivergenceKind::for_form(problem.class.form());
        let actions = &problem.actions;
        let admissible = actions.admissible(x);
        let na = actions.len();
        match kind {
            DivergenceKind::Finite => Ok(Self {
                context: x,
                kind,
                dim: admissible.len(),
                kappa: 1.0,
                spanner: admissible.to_vec(),
                embeddings: vec![Vec::new(); na],
                basis: Vec::new(),
            }),
            DivergenceKind::Linear | DivergenceKind::Glm => {
                let mut embeddings = vec![Vec::new(); na];
                let mut feats = Vec::with_capacity(admissible.len());
                for &a in admissible {
                    let f = problem.class.feature(actions, x, a);
                    feats.push(f.clone());
                    embeddings[a] = f;
                }
                let sp = barycentric_spanner(&feats)?;
                let kappa = match problem.class.form().link(x) {
                    Some(link) => context_kappa(problem, x, link, &feats, mode)?,
                    None => 1.0,
                };
                Ok(Self {
                    context: x,
                    kind,
                    dim: sp.dim(),
                    kappa,
                    spanner: sp.indices.iter().map(|i| admissible[*i]).collect(),
                    embeddings,
                    basis: Vec::new(),
                })
            }
            DivergenceKind::Hetero => {
                let vecs: Vec<Vec<f64>> = admissible.iter().map(|a| actions.vector(*a)).collect();
                let q = orthonormal_basis(&vecs, RANK_REL_TOL);
                let coords: Vec<Vec<f64>> = vecs
                    .iter()
                    .map(|v| q.iter().map(|qi| dot(qi, v)).collect())
                    .collect();
                let sp = barycentric_spanner(&coords)?;
                let basis: Vec<Vec<f64>> = sp.indices.iter().map(|i| vecs[*i].clone()).collect();
                let mut embeddings = vec![Vec::new(); na];
                for (pos, &a) in admissible.iter().enumerate() {
                    embeddings[a] = coefficients_in_basis(&vecs[pos], &basis)?;
                }
                let link = problem
                    .class
                    .form()
                    .link(x)
                    .expect("hetero classes carry links");
                let kappa = context_kappa(problem, x, link, &vecs, mode)?;
                Ok(Self {
                    context: x,
                    kind,
                    dim: sp.dim(),
                    kappa,
                    spanner: sp.indices.iter().map(|i| admissible[*i]).collect(),
                    embeddings,
                    basis,
                })
            }
        }
    }

    pub fn scale(&self) -> f64 {
        self.kappa * self.kappa
    }

    pub fn empty_state(&self) -> DivergenceState {
        match self.kind {
            DivergenceKind::Finite => DivergenceState::Counts(vec![0; self.embeddings.len()]),
            _ => DivergenceState::Gram(Gram::new(self.dim)),
        }
    }

    /// Appends action `a` to the history behind `state`.
    pub fn push(&self, state: &mut DivergenceState, a: ActionId) {
        match state {
            DivergenceState::Counts(c) => c[a] += 1,
            DivergenceState::Gram(g) => g.add(&self.embeddings[a], 1.0),
        }
    }

    /// `V_x(a ‖ history)`.
    pub fn value(&self, state: &DivergenceState, a: ActionId) -> f64 {
        match state {
            DivergenceState::Counts(c) => divergence_finite(c[a]),
            DivergenceState::Gram(g) => self.scale() * divergence_linear(&self.embeddings[a], g),
        }
    }

    /// `V_x(a ‖ history)` for every action id, using one factorization.
    pub fn values(&self, state: &DivergenceState, admissible: &[ActionId], out: &mut [f64]) {
        match state {
            DivergenceState::Counts(c) => {
                for &a in admissible {
                    out[a] = divergence_finite(c[a]);
                }
            }
            DivergenceState::Gram(g) => match g.factor() {
                Some(f) => {
                    let s = self.scale();
                    for &a in admissible {
                        out[a] = s * f.quadratic(&self.embeddings[a]);
                    }
                }
                None => {
                    for &a in admissible {
                        out[a] = f64::INFINITY;
                    }
                }
            },
        }
    }
}

fn context_kappa(
    problem: &Problem,
    x: ContextId,
    link: Link,
    feats: &[Vec<f64>],
    mode: KappaMode,
) -> Result<f64> {
    let class: &FunctionClass = &problem.class;
    match mode {
        KappaMode::GroundTruth => {
            let g = class
                .member_vector(problem.truth.f_star_index, x)
                .expect("vector-form class");
            kappa(link, g, feats)
        }
        KappaMode::ClassUniform => {
            let gs: Vec<&[f64]> = (0..class.len())
                .map(|m| class.member_vector(m, x).expect("vector-form class"))
                .collect();
            kappa_class(link, &gs, feats)
        }
    }
}

/// Kernels for every context of a problem.
pub fn context_kernels(problem: &Problem, mode: KappaMode) -> Result<Vec<ContextKernel>> {
    (0..problem.contexts.len())
        .map(|x| ContextKernel::build(problem, x, mode))
        .collect()
}

/// Checks that all admissible actions are representable with coefficients in `[−1−tol, 1+tol]`.
pub fn max_spanner_coefficient(grid: &[Vec<f64>], spanner: &Spanner) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for v in grid {
        let b = coefficients_in_basis(v, &spanner.vectors)?;
        worst = b.iter().fold(worst, |m, c| m.max(c.abs()));
    }
    Ok(worst)
}

/// Action vectors of the admissible set at `x`.
pub fn admissible_vectors(actions: &ActionSpace, x: ContextId) -> Vec<Vec<f64>> {
    actions
        .admissible(x)
        .iter()
        .map(|a| actions.vector(*a))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram_of(vs: &[Vec<f64>]) -> Gram {
        let mut g = Gram::new(vs[0].len());
        for v in vs {
            g.add(v, 1.0);
        }
        g
    }

    #[test]
    fn spanner_of_standard_basis() {
        let grid = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let sp = barycentric_spanner(&grid).unwrap();
        assert_eq!(sp.indices, vec![0, 1, 2]);
        assert!((sp.abs_det - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spanner_of_square_corners() {
        let grid = vec![
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
        ];
        let sp = barycentric_spanner(&grid).unwrap();
        assert_eq!(sp.indices, vec![0, 1]);
        assert!((sp.abs_det - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spanner_skips_interior_point() {
        let grid = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]];
        assert_eq!(barycentric_spanner(&grid).unwrap().indices, vec![0, 1]);
    }

    #[test]
    fn spanner_improves_bad_start() {
        let grid = vec![
            vec![0.1, 0.0],
            vec![0.0, 0.1],
            vec![1.0, 0.2],
            vec![-0.2, 1.0],
        ];
        let sp = barycentric_spanner(&grid).unwrap();
        assert_eq!(sp.indices, vec![2, 3]);
        assert!(max_spanner_coefficient(&grid, &sp).unwrap() <= 1.0 + 1e-9);
    }

    #[test]
    fn spanner_rejects_rank_deficient_grid() {
        let grid = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(
            barycentric_spanner(&grid),
            Err(Error::RankDeficient { rank: 1, dim: 2 })
        ));
    }

    #[test]
    fn coefficients_examples() {
        let e = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let b = coefficients_in_basis(&[0.3, 0.7], &e).unwrap();
        assert!((b[0] - 0.3).abs() < 1e-15 && (b[1] - 0.7).abs() < 1e-15);
        let basis = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let b = coefficients_in_basis(&[1.0, 0.0], &basis).unwrap();
        assert!((b[0] - 0.5).abs() < 1e-15 && (b[1] - 0.5).abs() < 1e-15);
        let b = coefficients_in_basis(&[1.0, 1.0], &basis).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-15 && b[1].abs() < 1e-15);
    }

    #[test]
    fn finite_divergence_examples() {
        assert_eq!(divergence_finite(2), 0.5);
        assert_eq!(divergence_finite(0), f64::INFINITY);
        assert_eq!(divergence_finite(4), 0.25);
    }

    #[test]
    fn linear_divergence_examples() {
        let g = gram_of(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!((divergence_linear(&[1.0, 1.0], &g) - 2.0).abs() < 1e-12);
        let g = gram_of(&[vec![1.0, 0.0]]);
        assert_eq!(divergence_linear(&[0.3, 0.1], &g), f64::INFINITY);
        let g = gram_of(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]]);
        assert!((divergence_linear(&[1.0, 1.0], &g) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn glm_divergence_examples() {
        let g = gram_of(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(
            divergence_glm(&[1.0, 1.0], &g, 1.0),
            divergence_linear(&[1.0, 1.0], &g)
        );
        assert!((divergence_glm(&[1.0, 1.0], &g, 2.0) - 3.0).abs() < 1e-12);
        let singular = gram_of(&[vec![1.0, 1.0]]);
        assert_eq!(divergence_glm(&[1.0, 0.0], &singular, 2.0), f64::INFINITY);
    }

    #[test]
    fn hetero_divergence_examples() {
        let e = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let g = gram_of(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let v = divergence_hetero(&[0.4, 0.5], &g, 1.0, &e).unwrap();
        assert!((v - divergence_linear(&[0.4, 0.5], &g)).abs() < 1e-15);

        let basis = vec![vec![1.0, 1.0, 0.0]];
        let g = gram_of(&[vec![1.0], vec![1.0]]);
        for kappa in [1.0, 1.7] {
            let v = divergence_hetero(&[0.5, 0.5, 0.0], &g, kappa, &basis).unwrap();
            assert!((v - kappa * kappa * 0.125).abs() < 1e-15);
        }
        assert!(matches!(
            divergence_hetero(&[0.0, 0.0, 1.0], &g, 1.0, &basis),
            Err(Error::OutsideSpan { .. })
        ));
    }

    #[test]
    fn kappa_examples() {
        let feats = vec![vec![0.2], vec![0.9]];
        assert_eq!(kappa(Link::IdentityClipped, &[1.0], &feats).unwrap(), 1.0);
        assert_eq!(kappa(Link::Logistic, &[0.0], &feats).unwrap(), 1.0);
        let feats = vec![vec![0.0], vec![2.0]];
        let k = kappa(Link::Logistic, &[1.0], &feats).unwrap();
        assert!((k - 2.381097845541816).abs() < 1e-12);
    }

    #[test]
    fn kappa_rejects_flat_link() {
        let feats = vec![vec![2.0]];
        assert!(matches!(
            kappa(Link::IdentityClipped, &[1.0], &feats),
            Err(Error::NonIncreasingLink { .. })
        ));
    }

    #[test]
    fn kappa_class_dominates_ground_truth() {
        let feats = vec![vec![0.1], vec![1.0]];
        let g_star = [0.0];
        let g_other = [10.0];
        let k_star = kappa(Link::Logistic, &g_star, &feats).unwrap();
        let k_all = kappa_class(Link::Logistic, &[&g_star, &g_other], &feats).unwrap();
        assert_eq!(k_star, 1.0);
        assert!(k_all > 1000.0);
    }

    #[test]
    fn action_maximize_examples() {
        assert_eq!(action_maximize(&[0.1, f64::INFINITY, f64::INFINITY]), 1);
        assert_eq!(action_maximize(&[0.3, 0.3]), 0);
        assert_eq!(action_maximize(&[0.2, 0.9, 0.5]), 1);
        assert_eq!(action_maximize(&[f64::NAN, 0.1]), 1);
    }

    #[test]
    fn elliptical_potential_from_basis() {
        let seq = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        // 1 (singular) + 1 (singular) + min(1, 2)
        assert!((elliptical_potential(&seq) - 3.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(-1.0f64..1.0, d)
        }

        proptest! {
            #[test]
            fn spanner_coefficients_bounded(grid in (1usize..=4).prop_flat_map(|d| prop::collection::vec(vec_strategy(d), d..(d + 12)))) {
                if let Ok(sp) = barycentric_spanner(&grid) {
                    prop_assert!(max_spanner_coefficient(&grid, &sp).unwrap() <= 1.0 + 1e-9);
                    prop_assert!(sp.abs_det > 0.0);
                }
            }

            #[test]
            fn adding_history_never_increases_divergence(
                (hist, extra, query) in (1usize..=4).prop_flat_map(|d| (
                    prop::collection::vec(vec_strategy(d), 0..8),
                    vec_strategy(d),
                    vec_strategy(d),
                ))
            ) {
                let d = query.len();
                let mut g = Gram::new(d);
                for h in &hist {
                    g.add(h, 1.0);
                }
                let before = divergence_linear(&query, &g);
                g.add(&extra, 1.0);
                let after = divergence_linear(&query, &g);
                prop_assert!(after <= before + 1e-9 * before.abs().max(1.0) || before.is_infinite());
            }
        }
    }
}
