//! Ready-made problem instances used by the examples, the harness and the tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{
    ActionKind, ActionSpace, ClassForm, ContextSpace, FeatureMap, FunctionClass, GroundTruth, Link,
    Member, Problem,
};

/// `K`-armed tabular class with values uniform on `[0, 1]` and a planted `f*`.
pub fn random_tabular(
    n_contexts: usize,
    k: usize,
    class_size: usize,
    instance_seed: u64,
) -> Result<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed);
    let cs = ContextSpace::uniform(n_contexts)?;
    let acts = ActionSpace::finite(k)?;
    let members = (0..class_size)
        .map(|_| {
            Member::Table(
                (0..n_contexts)
                    .map(|_| (0..k).map(|_| rng.gen::<f64>()).collect())
                    .collect(),
            )
        })
        .collect();
    let f_star_index = rng.gen_range(0..class_size);
    let class = FunctionClass::new(ClassForm::Tabular, members, &cs, &acts)?;
    Problem::new(cs, acts, class, GroundTruth { f_star_index })
}

/// Vectors with nonnegative coordinates summing to at most 1.
fn simplex_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let total: f64 = v.iter().sum::<f64>() - rng.gen::<f64>().max(1e-300).ln();
    for x in &mut v {
        *x /= total;
    }
    v
}

/// Linear model on a `d`-dimensional grid of `n_actions` points in `[0, 1]^d`
/// that contains the standard basis; `g(x)` lies in the simplex so every value is in `[0, 1]`.
pub fn linear_grid(
    d: usize,
    n_actions: usize,
    n_contexts: usize,
    class_size: usize,
    instance_seed: u64,
) -> Result<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed);
    let mut points: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        })
        .collect();
    while points.len() < n_actions {
        points.push((0..d).map(|_| rng.gen::<f64>()).collect());
    }
    let cs = ContextSpace::uniform(n_contexts)?;
    let acts = ActionSpace::grid(points)?;
    let members = (0..class_size)
        .map(|_| {
            Member::Vectors(
                (0..n_contexts)
                    .map(|_| simplex_point(&mut rng, d))
                    .collect(),
            )
        })
        .collect();
    let f_star_index = rng.gen_range(0..class_size);
    let class = FunctionClass::new(ClassForm::Linear, members, &cs, &acts)?;
    Problem::new(cs, acts, class, GroundTruth { f_star_index })
}

/// Generalized linear model with a logistic link on a grid in `[−1, 1]^d`.
pub fn logistic_grid(
    d: usize,
    n_actions: usize,
    n_contexts: usize,
    class_size: usize,
    instance_seed: u64,
) -> Result<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed);
    let points: Vec<Vec<f64>> = (0..n_actions)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let cs = ContextSpace::uniform(n_contexts)?;
    let acts = ActionSpace::grid(points)?;
    let members = (0..class_size)
        .map(|_| {
            Member::Vectors(
                (0..n_contexts)
                    .map(|_| (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect())
                    .collect(),
            )
        })
        .collect();
    let f_star_index = rng.gen_range(0..class_size);
    let form = ClassForm::Glm {
        links: vec![Link::Logistic; n_contexts],
        features: FeatureMap::Identity,
    };
    let class = FunctionClass::new(form, members, &cs, &acts)?;
    Problem::new(cs, acts, class, GroundTruth { f_star_index })
}

/// Heterogeneous action sets: context `x` sees only the grid actions inside a
/// subspace of dimension `dims[x]` spanned by the first coordinates.
pub fn hetero_subspaces(
    dims: &[usize],
    d: usize,
    per_context: usize,
    class_size: usize,
    instance_seed: u64,
) -> Result<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed);
    let mut points = Vec::new();
    let mut restrictions = Vec::new();
    for &dx in dims {
        let mut ids = Vec::new();
        for i in 0..per_context {
            let mut v = vec![0.0; d];
            if i < dx {
                v[i] = 1.0;
            } else {
                for c in v.iter_mut().take(dx) {
                    *c = rng.gen::<f64>();
                }
            }
            ids.push(points.len());
            points.push(v);
        }
        restrictions.push(ids);
    }
    let nx = dims.len();
    let cs = ContextSpace::uniform(nx)?;
    let acts = ActionSpace::new(ActionKind::Grid { points }, Some(restrictions))?;
    let members = (0..class_size)
        .map(|_| {
            Member::Vectors(
                dims.iter()
                    .map(|&dx| {
                        let s = simplex_point(&mut rng, dx);
                        let mut g = vec![0.0; d];
                        g[..dx].copy_from_slice(&s);
                        g
                    })
                    .collect(),
            )
        })
        .collect();
    let f_star_index = rng.gen_range(0..class_size);
    let form = ClassForm::Hetero {
        links: vec![Link::IdentityClipped; nx],
    };
    let class = FunctionClass::new(form, members, &cs, &acts)?;
    Problem::new(cs, acts, class, GroundTruth { f_star_index })
}

/// One context, two arms, and a class in which arm 0 cannot distinguish the
/// members: greedy play starting from member 0 never tries arm 1.
pub fn deceptive_two_arm() -> Result<Problem> {
    let cs = ContextSpace::uniform(1)?;
    let acts = ActionSpace::finite(2)?;
    let members = vec![
        Member::Table(vec![vec![0.5, 0.3]]),
        Member::Table(vec![vec![0.5, 0.6]]),
    ];
    let class = FunctionClass::new(ClassForm::Tabular, members, &cs, &acts)?;
    Problem::new(cs, acts, class, GroundTruth { f_star_index: 1 })
}

/// A named generator, as it appears in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum Scenario {
    RandomTabular {
        contexts: usize,
        actions: usize,
        members: usize,
        instance_seed: u64,
    },
    LinearGrid {
        d: usize,
        actions: usize,
        contexts: usize,
        members: usize,
        instance_seed: u64,
    },
    LogisticGrid {
        d: usize,
        actions: usize,
        contexts: usize,
        members: usize,
        instance_seed: u64,
    },
    HeteroSubspaces {
        dims: Vec<usize>,
        d: usize,
        per_context: usize,
        members: usize,
        instance_seed: u64,
    },
    DeceptiveTwoArm,
}

impl Scenario {
    pub fn build(&self) -> Result<Problem> {
        match self {
            Scenario::RandomTabular {
                contexts,
                actions,
                members,
                instance_seed,
            } => random_tabular(*contexts, *actions, *members, *instance_seed),
            Scenario::LinearGrid {
                d,
                actions,
                contexts,
                members,
                instance_seed,
            } => linear_grid(*d, *actions, *contexts, *members, *instance_seed),
            Scenario::LogisticGrid {
                d,
                actions,
                contexts,
                members,
                instance_seed,
            } => logistic_grid(*d, *actions, *contexts, *members, *instance_seed),
            Scenario::HeteroSubspaces {
                dims,
                d,
                per_context,
                members,
                instance_seed,
            } => hetero_subspaces(dims, *d, *per_context, *members, *instance_seed),
            Scenario::DeceptiveTwoArm => deceptive_two_arm(),
        }
    }
}
