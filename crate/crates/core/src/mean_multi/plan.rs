use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::RngStream;

/// Fewest users a group may hold; the two-stage estimator needs two per stage.
pub const MIN_USERS_PER_GROUP: usize = 4;

/// Privacy regime selected from `ε`, the component count and `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `ε < 1`: one component per group at budget `ε`.
    High,
    /// `1 ≤ ε < d ln n`: `⌊ε⌋` components per group at budget 1.
    Medium,
    /// `ε ≥ d ln n`: every user reports every component at budget `ε/d`.
    Low,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::High => "high",
            Regime::Medium => "medium",
            Regime::Low => "low",
        })
    }
}

pub fn regime_for(components: usize, epsilon: f64, n: usize) -> Regime {
    if epsilon < 1.0 {
        Regime::High
    } else if epsilon < components as f64 * (n.max(1) as f64).ln() {
        Regime::Medium
    } else {
        Regime::Low
    }
}

/// Users of one group, the components they report and the budget per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentGroup {
    pub users: Vec<usize>,
    pub components: Vec<usize>,
    pub budget: f64,
}

/// Assignment of users and components to groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimePlan {
    pub regime: Regime,
    pub epsilon: f64,
    pub num_users: usize,
    pub num_components: usize,
    pub groups: Vec<ComponentGroup>,
}

impl RegimePlan {
    /// Total budget spent by each user.
    pub fn user_budgets(&self) -> Vec<f64> {
        let mut spent = vec![0.0; self.num_users];
        for g in &self.groups {
            let total = g.budget * g.components.len() as f64;
            for &u in &g.users {
                spent[u] += total;
            }
        }
        spent
    }

    /// True when user sets partition `0..n` and component sets partition `0..d`.
    pub fn is_partition(&self) -> bool {
        let mut users = vec![0u32; self.num_users];
        let mut comps = vec![0u32; self.num_components];
        for g in &self.groups {
            for &u in &g.users {
                match users.get_mut(u) {
                    Some(c) => *c += 1,
                    None => return false,
                }
            }
            for &k in &g.components {
                match comps.get_mut(k) {
                    Some(c) => *c += 1,
                    None => return false,
                }
            }
        }
        users.iter().all(|&c| c == 1) && comps.iter().all(|&c| c == 1)
    }

    pub fn smallest_group(&self) -> usize {
        self.groups.iter().map(|g| g.users.len()).min().unwrap_or(0)
    }
}

/// Plan for `n` users and `components` coordinates at budget `epsilon`, with
/// the regime picked by [`regime_for`]. Users are shuffled with `stream` and
/// dealt round-robin.
pub fn plan_regime(
    n: usize,
    components: usize,
    epsilon: f64,
    stream: &RngStream,
) -> Result<RegimePlan> {
    plan_with_regime(
        n,
        components,
        epsilon,
        regime_for(components, epsilon, n),
        stream,
    )
}

/// Plan with an explicit regime.
pub fn plan_with_regime(
    n: usize,
    components: usize,
    epsilon: f64,
    regime: Regime,
    stream: &RngStream,
) -> Result<RegimePlan> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param(
            "epsilon",
            format!("must be positive and finite, got {epsilon}"),
        ));
    }
    if components == 0 {
        return Err(Error::param("d", "need at least one component"));
    }
    let (per_group, budget) = match regime {
        Regime::High => (1, epsilon),
        Regime::Medium => {
            let k = epsilon.floor();
            if k < 1.0 {
                return Err(Error::param("epsilon", "medium regime needs epsilon >= 1"));
            }
            ((k as usize).min(components), 1.0)
        }
        Regime::Low => (components, epsilon / components as f64),
    };
    let num_groups = components.div_ceil(per_group);
    let required = MIN_USERS_PER_GROUP * num_groups;
    if n < required {
        return Err(Error::InsufficientUsers {
            regime: regime.to_string(),
            groups: num_groups,
            min_per_group: MIN_USERS_PER_GROUP,
            required,
            available: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream.rng());
    let mut groups: Vec<ComponentGroup> = (0..num_groups)
        .map(|g| ComponentGroup {
            users: Vec::with_capacity(n / num_groups + 1),
            components: (g * per_group..((g + 1) * per_group).min(components)).collect(),
            budget,
        })
        .collect();
    for (i, u) in order.into_iter().enumerate() {
        groups[i % num_groups].users.push(u);
    }
    Ok(RegimePlan {
        regime,
        epsilon,
        num_users: n,
        num_components: components,
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn high_regime_example() {
        let plan = plan_regime(300, 3, 0.5, &RngStream::new(1)).unwrap();
        assert_eq!(plan.regime, Regime::High);
        assert_eq!(plan.groups.len(), 3);
        assert!(plan
            .groups
            .iter()
            .all(|g| g.users.len() == 100 && g.budget == 0.5));
    }

    #[test]
    fn medium_regime_example() {
        let plan = plan_regime(10_000, 10, 3.7, &RngStream::new(1)).unwrap();
        assert_eq!(plan.regime, Regime::Medium);
        let sizes: Vec<usize> = plan.groups.iter().map(|g| g.components.len()).collect();
        assert_eq!(sizes, vec![3, 3, 3, 1]);
        assert!(plan.groups.iter().all(|g| g.budget == 1.0));
    }

    #[test]
    fn low_regime_example() {
        let eps = 2.0 * 100f64.ln() + 1.0;
        let plan = plan_regime(100, 2, eps, &RngStream::new(1)).unwrap();
        assert_eq!(plan.regime, Regime::Low);
        assert_eq!(plan.groups.len(), 1);
        assert_eq!(plan.groups[0].budget, eps / 2.0);
        assert!(plan.user_budgets().iter().all(|&b| (b - eps).abs() < 1e-12));
    }

    #[test]
    fn too_few_users() {
        match plan_regime(10, 3, 0.5, &RngStream::new(0)) {
            Err(Error::InsufficientUsers {
                regime, required, ..
            }) => {
                assert_eq!(regime, "high");
                assert_eq!(required, 12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn uneven_groups_differ_by_at_most_one() {
        let plan = plan_regime(103, 4, 0.5, &RngStream::new(2)).unwrap();
        let sizes: Vec<usize> = plan.groups.iter().map(|g| g.users.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 103);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    proptest! {
        #[test]
        fn budgets_and_partition(n in 64usize..400, d in 1usize..12, eps in 0.05f64..40.0, seed in any::<u64>()) {
            prop_assume!(n >= 4 * d);
            let plan = plan_regime(n, d, eps, &RngStream::new(seed)).unwrap();
            prop_assert!(plan.is_partition());
            for b in plan.user_budgets() {
                prop_assert!(b <= eps * (1.0 + 1e-12));
                match plan.regime {
                    Regime::High | Regime::Low => prop_assert!((b - eps).abs() <= 1e-12 * eps),
                    Regime::Medium => prop_assert!(b <= eps.floor()),
                }
            }
        }
    }
}
