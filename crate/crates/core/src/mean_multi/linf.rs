use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan::{plan_regime, Regime, RegimePlan};
use crate::data::{mean_rows, VectorUsers};
use crate::error::{Error, Result};
use crate::mean1d::{estimate_from_user_means, Mean1dParams};
use crate::noise::RngStream;
use crate::warning::Warning;

pub(crate) const PLAN_STREAM: u64 = 0;
pub(crate) const ESTIMATE_STREAM: u64 = 1;

/// Estimate and diagnostics of a multi-dimensional run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiOutput {
    pub estimate: Vec<f64>,
    pub regime: Regime,
    pub groups: usize,
    pub smallest_group: usize,
    pub warnings: Vec<Warning>,
    /// Certified frame constant, when a Kashin frame was used.
    pub k_cert: Option<f64>,
    /// Fraction of frame coefficients changed by clipping.
    pub clipped_fraction: Option<f64>,
}

/// Row-major `n x d` matrix of per-user sample means.
pub(crate) fn vector_user_means<D: VectorUsers + ?Sized>(data: &D) -> Vec<f64> {
    let d = data.dim();
    let mut out = vec![0.0; data.num_users() * d];
    out.par_chunks_mut(d)
        .enumerate()
        .for_each_init(Vec::new, |buf, (i, row)| {
            data.user_samples(i, buf);
            mean_rows(buf, d, row);
        });
    out
}

/// Runs the per-component two-stage estimator under `plan`.
///
/// `means` is row-major `n x dim`. `params_for(component, budget, group_size)`
/// calibrates each component; user means are clamped to that component's radius before
/// privatization.
pub(crate) fn estimate_components<F>(
    means: &[f64],
    dim: usize,
    m: usize,
    plan: &RegimePlan,
    params_for: F,
    stream: &RngStream,
) -> Result<(Vec<f64>, Vec<Warning>)>
where
    F: Fn(usize, f64, usize) -> Result<Mean1dParams> + Sync,
{
    let jobs: Vec<(usize, usize)> = plan
        .groups
        .iter()
        .enumerate()
        .flat_map(|(g, grp)| grp.components.iter().map(move |&c| (g, c)))
        .collect();
    let results: Vec<Result<(usize, f64, Vec<Warning>)>> = jobs
        .par_iter()
        .map(|&(g, c)| {
            let grp = &plan.groups[g];
            let params = params_for(c, grp.budget, grp.users.len())?;
            let r = params.radius();
            let column: Vec<f64> = grp
                .users
                .iter()
                .map(|&u| means[u * dim + c].clamp(-r, r))
                .collect();
            let out = estimate_from_user_means(
                &column,
                m,
                &params,
                &stream.children(&[ESTIMATE_STREAM, c as u64]),
            )?;
            Ok((c, out.estimate, out.warnings))
        })
        .collect();
    let mut estimate = vec![0.0; dim];
    let mut warnings: Vec<Warning> = Vec::new();
    for r in results {
        let (c, value, ws) = r?;
        estimate[c] = value;
        for w in ws {
            if !warnings.iter().any(|x| x.check == w.check) {
                warnings.push(w);
            }
        }
    }
    Ok((estimate, warnings))
}

/// Bounded estimation on precomputed user means with coordinates in `[-radius, radius]`.
pub(crate) fn estimate_bounded(
    means: &[f64],
    n: usize,
    dim: usize,
    m: usize,
    radius: f64,
    epsilon: f64,
    stream: &RngStream,
) -> Result<MultiOutput> {
    let plan = plan_regime(n, dim, epsilon, &stream.child(PLAN_STREAM))?;
    let (estimate, warnings) = estimate_components(
        means,
        dim,
        m,
        &plan,
        |_, budget, ng| Mean1dParams::new(radius, budget, ng, m),
        stream,
    )?;
    Ok(MultiOutput {
        estimate,
        regime: plan.regime,
        groups: plan.groups.len(),
        smallest_group: plan.smallest_group(),
        warnings,
        k_cert: None,
        clipped_fraction: None,
    })
}

/// Per-coordinate estimator for data in `[-D, D]^d`.
///
/// Any support radius `D` bounds every coordinate, so ℓ2 and ℓ1 data can be
/// run through this path too.
pub fn mean_linf<D: VectorUsers + ?Sized>(
    data: &D,
    epsilon: f64,
    stream: &RngStream,
) -> Result<MultiOutput> {
    let support = data.support();
    let means = vector_user_means(data);
    if means.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("data", "non-finite samples"));
    }
    estimate_bounded(
        &means,
        data.num_users(),
        data.dim(),
        data.samples_per_user(),
        support.radius,
        epsilon,
        stream,
    )
}
