//! Closed-form regret and potential bounds, all with natural logarithms.

use serde::{Deserialize, Serialize};

/// `2√(17KT ln(2|F|T³/δ))·(ln(T/K) + 1) + √(2T ln(2/δ)) + K`.
pub fn uccb_regret_bound(horizon: usize, k: usize, class_size: usize, delta: f64) -> f64 {
    let t = horizon as f64;
    let k = k as f64;
    2.0 * (17.0 * k * t * (2.0 * class_size as f64 * t.powi(3) / delta).ln()).sqrt()
        * ((t / k).ln() + 1.0)
        + (2.0 * t * (2.0 / delta).ln()).sqrt()
        + k
}

/// `2√(17ET ln(2|F|T³/δ))·(3 ln T + 1) + √(2T ln(2/δ)) + E`.
pub fn uccb_ia_regret_bound(horizon: usize, entropy: f64, class_size: usize, delta: f64) -> f64 {
    let t = horizon as f64;
    2.0 * (17.0 * entropy * t * (2.0 * class_size as f64 * t.powi(3) / delta).ln()).sqrt()
        * (3.0 * t.ln() + 1.0)
        + (2.0 * t * (2.0 / delta).ln()).sqrt()
        + entropy
}

/// `608.5√(2dT ln(|F|T/δ)) + 2√(2T ln(2/δ)) + 2`.
pub fn falcon_regret_bound(horizon: usize, d: usize, class_size: usize, delta: f64) -> f64 {
    let t = horizon as f64;
    608.5 * (2.0 * d as f64 * t * (class_size as f64 * t / delta).ln()).sqrt()
        + 2.0 * (2.0 * t * (2.0 / delta).ln()).sqrt()
        + 2.0
}

/// `K + K ln(T/K)`.
pub fn contextual_potential_bound(horizon: usize, k: usize) -> f64 {
    let k = k as f64;
    k + k * (horizon as f64 / k).ln()
}

/// `3 d ln T`.
pub fn elliptical_bound(horizon: usize, entropy: f64) -> f64 {
    3.0 * entropy * (horizon as f64).ln()
}

/// Which regret bound applies to a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegretBound {
    Uccb {
        k: usize,
        class_size: usize,
        delta: f64,
    },
    UccbIa {
        entropy: f64,
        class_size: usize,
        delta: f64,
    },
    Falcon {
        d: usize,
        class_size: usize,
        delta: f64,
    },
    /// Control agents carry no guarantee.
    None,
}

impl RegretBound {
    pub fn at(&self, horizon: usize) -> Option<f64> {
        match *self {
            RegretBound::Uccb {
                k,
                class_size,
                delta,
            } => Some(uccb_regret_bound(horizon, k, class_size, delta)),
            RegretBound::UccbIa {
                entropy,
                class_size,
                delta,
            } => Some(uccb_ia_regret_bound(horizon, entropy, class_size, delta)),
            RegretBound::Falcon {
                d,
                class_size,
                delta,
            } => Some(falcon_regret_bound(horizon, d, class_size, delta)),
            RegretBound::None => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs()
    }

    #[test]
    fn bound_values() {
        assert!(close(
            uccb_regret_bound(3000, 3, 10, 0.05),
            34041.34066294273
        ));
        assert!(close(
            uccb_ia_regret_bound(2048, 2.0, 16, 0.05),
            68367.0351408377
        ));
        assert!(close(
            falcon_regret_bound(4096, 2, 16, 0.05),
            292674.5256132442
        ));
        assert!(close(contextual_potential_bound(4, 2), 3.386294361119891));
    }

    #[test]
    fn bound_selector() {
        let b = RegretBound::Uccb {
            k: 3,
            class_size: 10,
            delta: 0.05,
        };
        assert_eq!(b.at(3000), Some(uccb_regret_bound(3000, 3, 10, 0.05)));
        assert_eq!(RegretBound::None.at(10), None);
    }
}
