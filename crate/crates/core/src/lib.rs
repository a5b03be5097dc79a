pub mod baselines;
pub mod data;
pub mod error;
pub mod harness;
pub mod mean1d;
pub mod mean_multi;
pub mod noise;
pub mod nonparam;
pub mod priv_opt;
pub mod transforms;
pub mod warning;
