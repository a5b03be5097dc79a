//! Multi-dimensional mean estimation under user-level ε-LDP.
//!
//! Users are split into groups by a [`RegimePlan`]; each group reports a
//! subset of coordinates through the two-stage one-dimensional estimator so
//! that no user spends more than `ε` in total. ℓ2 data is first expanded in a
//! Kashin frame, one-hot data is rotated by a Hadamard matrix.

mod discrete;
mod heavy;
mod l2;
mod linf;
mod plan;

pub use discrete::{mean_l1_discrete, project_simplex, DiscreteOutput};
pub use heavy::{mean_heavy_multi, HeavyMode};
pub use l2::mean_l2;
pub use linf::{mean_linf, MultiOutput};
pub use plan::{
    plan_regime, plan_with_regime, regime_for, ComponentGroup, Regime, RegimePlan,
    MIN_USERS_PER_GROUP,
};

pub(crate) use linf::{estimate_components, PLAN_STREAM};
