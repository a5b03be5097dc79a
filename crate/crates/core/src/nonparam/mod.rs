//! Histogram classification and regression on `[0, 1]^d` under user-level ε-LDP.
//!
//! Per-cell label sums (and, for regression, counts) are spread over `K`
//! Hadamard coordinates so each privatized statistic has range at most the
//! label bound regardless of the number of cells. The cell estimates are
//! recovered by `H_K Q̂ / K`.

mod grid;
mod model;
mod train;

pub use grid::{Grid, MAX_CELLS};
pub use model::{GridModel, GridTask, MIN_P_FLOOR, MODEL_SCHEMA_VERSION};
pub use train::{
    classification_bin_width, compute_u_stat, compute_v_stat, regression_bin_width,
    train_classifier, train_regressor, RegressionOptions, TrainOutput, DEFAULT_C2,
};
#[cfg(feature = "exact-oracle")]
pub use train::{train_exact, NonPrivate};
