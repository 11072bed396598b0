//! Least-squares regression oracle over a finite function class.

use crate::model::{ActionId, ContextId, FunctionClass, Record};

/// SSE values closer than this are treated as ties.
pub const TIE_TOL: f64 = 1e-12;

/// Running sum of squared errors for every member of a class.
#[derive(Clone, Debug, PartialEq)]
pub struct SseTable {
    sse: Vec<f64>,
    rounds: usize,
}

impl SseTable {
    pub fn new(members: usize) -> Self {
        Self {
            sse: vec![0.0; members],
            rounds: 0,
        }
    }

    /// Adds `(f(x, a) − r)²` to every member's entry.
    pub fn update(&mut self, class: &FunctionClass, x: ContextId, a: ActionId, r: f64) {
        for (m, s) in self.sse.iter_mut().enumerate() {
            let e = class.value(m, x, a) - r;
            *s += e * e;
        }
        self.rounds += 1;
    }

    pub fn sse(&self) -> &[f64] {
        &self.sse
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Smallest member index whose SSE is within [`TIE_TOL`] of the minimum.
    pub fn least_squares(&self) -> usize {
        argmin_with_ties(&self.sse)
    }
}

fn argmin_with_ties(values: &[f64]) -> usize {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().position(|v| *v <= min + TIE_TOL).unwrap_or(0)
}

/// From-scratch least squares over a list of records.
pub fn least_squares_brute_force(class: &FunctionClass, records: &[Record]) -> usize {
    let sse: Vec<f64> = (0..class.len())
        .map(|m| {
            records
                .iter()
                .map(|r| {
                    let e = class.value(m, r.x, r.a) - r.r;
                    e * e
                })
                .sum()
        })
        .collect();
    argmin_with_ties(&sse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionSpace, ClassForm, ContextSpace, Member};

    fn constant_class(values: &[f64]) -> FunctionClass {
        let cs = ContextSpace::uniform(1).unwrap();
        let acts = ActionSpace::finite(1).unwrap();
        let members = values
            .iter()
            .map(|v| Member::Table(vec![vec![*v]]))
            .collect();
        FunctionClass::new(ClassForm::Tabular, members, &cs, &acts).unwrap()
    }

    #[test]
    fn update_adds_squared_error() {
        let class = constant_class(&[0.2]);
        let mut t = SseTable::new(1);
        t.update(&class, 0, 0, 1.0);
        assert!((t.sse()[0] - 0.64).abs() < 1e-15);
        t.update(&class, 0, 0, 0.0);
        assert!((t.sse()[0] - 0.68).abs() < 1e-15);
        assert_eq!(t.rounds(), 2);
    }

    #[test]
    fn exact_fit_adds_nothing() {
        let class = constant_class(&[0.5]);
        let mut t = SseTable::new(1);
        t.update(&class, 0, 0, 0.5);
        assert_eq!(t.sse()[0], 0.0);
    }

    #[test]
    fn least_squares_examples() {
        let class = constant_class(&[0.2, 0.8]);
        let mut t = SseTable::new(2);
        assert_eq!(t.least_squares(), 0);
        t.update(&class, 0, 0, 1.0);
        assert_eq!(t.least_squares(), 1);
        t.update(&class, 0, 0, 0.0);
        // Both members now sit at 0.68.
        assert_eq!(t.least_squares(), 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn rec(i: usize, r: f64) -> Record {
            Record {
                t: i + 1,
                x: 0,
                a: 0,
                r,
                fhat: 0,
                beta: 0.0,
            }
        }

        proptest! {
            #[test]
            fn incremental_matches_brute_force(
                members in prop::collection::vec(0.0f64..=1.0, 1..12),
                rewards in prop::collection::vec(prop::bool::ANY, 0..40),
            ) {
                let class = constant_class(&members);
                let mut table = SseTable::new(members.len());
                let records: Vec<Record> = rewards.iter().enumerate().map(|(i, b)| rec(i, f64::from(u8::from(*b)))).collect();
                for r in &records {
                    table.update(&class, r.x, r.a, r.r);
                }
                for (m, s) in table.sse().iter().enumerate() {
                    let direct: f64 = records.iter().map(|r| (members[m] - r.r).powi(2)).sum();
                    prop_assert!((s - direct).abs() <= 1e-9);
                }
                prop_assert_eq!(table.least_squares(), least_squares_brute_force(&class, &records));
            }

            #[test]
            fn oracle_is_order_invariant(
                members in prop::collection::vec(0.0f64..=1.0, 1..12),
                rewards in prop::collection::vec(0.0f64..=1.0, 0..40),
            ) {
                let class = constant_class(&members);
                let mut fwd = SseTable::new(members.len());
                let mut rev = SseTable::new(members.len());
                for r in &rewards {
                    fwd.update(&class, 0, 0, *r);
                }
                for r in rewards.iter().rev() {
                    rev.update(&class, 0, 0, *r);
                }
                prop_assert_eq!(fwd.least_squares(), rev.least_squares());
            }
        }
    }
}
