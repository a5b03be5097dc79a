use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linf::{estimate_bounded, MultiOutput};
use crate::data::VectorUsers;
use crate::error::{Error, Result};
use crate::noise::RngStream;
use crate::transforms::{fwht, next_power_of_two};

/// Distribution estimate over an alphabet of size `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteOutput {
    /// Projection of the raw estimate onto the probability simplex.
    pub probabilities: Vec<f64>,
    /// Raw estimate of length `K = 2^⌈log₂ A⌉`; entries `A..K` are padding.
    pub unprojected: Vec<f64>,
    pub run: MultiOutput,
}

/// Frequency estimation for one-hot samples.
///
/// Samples are rotated by `H_K/√K` so every coordinate lies in
/// `[-1/√K, 1/√K]`, estimated per coordinate, rotated back, and projected.
pub fn mean_l1_discrete<D: VectorUsers + ?Sized>(
    data: &D,
    epsilon: f64,
    stream: &RngStream,
) -> Result<DiscreteOutput> {
    let a = data.dim();
    let k = next_power_of_two(a);
    let n = data.num_users();
    let mut means = vec![0.0; n * k];
    let bad: Option<usize> = means
        .par_chunks_mut(k)
        .enumerate()
        .map_init(Vec::new, |buf, (i, row)| {
            data.user_samples(i, buf);
            for x in buf.chunks_exact(a) {
                match one_hot_index(x) {
                    Some(j) => row[j] += 1.0,
                    None => return Some(i),
                }
            }
            fwht(row);
            let scale = 1.0 / ((buf.len() / a) as f64 * (k as f64).sqrt());
            row.iter_mut().for_each(|v| *v *= scale);
            None
        })
        .find_any(|r| r.is_some())
        .flatten();
    if let Some(user) = bad {
        return Err(Error::param(
            "data",
            format!("user {user} holds a sample that is not one-hot"),
        ));
    }
    let radius = 1.0 / (k as f64).sqrt();
    let run = estimate_bounded(
        &means,
        n,
        k,
        data.samples_per_user(),
        radius,
        epsilon,
        stream,
    )?;
    let mut unprojected = run.estimate.clone();
    fwht(&mut unprojected);
    unprojected.iter_mut().for_each(|v| *v *= radius);
    let probabilities = project_simplex(&unprojected[..a]);
    Ok(DiscreteOutput {
        probabilities,
        unprojected,
        run,
    })
}

fn one_hot_index(x: &[f64]) -> Option<usize> {
    let mut hot = None;
    for (j, &v) in x.iter().enumerate() {
        if v == 1.0 {
            if hot.is_some() {
                return None;
            }
            hot = Some(j);
        } else if v != 0.0 {
            return None;
        }
    }
    hot
}

/// Euclidean projection onto `{p : p ≥ 0, Σ p = 1}`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}
