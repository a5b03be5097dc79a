//! Two-stage one-dimensional mean estimation under user-level ε-LDP.
//!
//! Stage 1: the first `⌈n/2⌉` users each send a noisy one-hot vector marking
//! which of `B` bins (width `h`) over `[-D, D]` holds their sample mean. The
//! aggregator takes the bin with the largest noisy count and reports the
//! interval `[L, R]` covering it and its two neighbours.
//!
//! Stage 2: the remaining users clip their mean to `[L - Δ, R + Δ]`, add
//! Laplace noise of scale `(3h + 2Δ)/ε` and send it. The estimate is the
//! average of those messages.
//!
//! The stage-1 one-hot has ℓ1 sensitivity 2 (scale `2/ε`) and the stage-2
//! range has length `3h + 2Δ`, so each user's single message is ε-LDP.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ScalarUsers;
use crate::error::{Error, Result};
use crate::noise::{LaplaceScale, RngStream, StreamRng};
use crate::warning::Warning;

/// Default `c₁` in the warning threshold `n (ε² ∧ 1) ≥ c₁ ln m`.
pub const DEFAULT_C1: f64 = 16.0;

/// Default constant `c` in the heavy-tailed margin.
pub const DEFAULT_HEAVY_C: f64 = 2.0;

/// Smallest number of users accepted by the two-stage pipeline.
pub const MIN_USERS: usize = 4;

/// Geometry and noise calibration of the two-stage estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mean1dParams {
    radius: f64,
    epsilon: f64,
    bin_width: f64,
    margin: f64,
    bins: usize,
    c1: f64,
}

impl Mean1dParams {
    /// Defaults `h = 4D/√m` and `Δ = D √(ln n / m)` for `n` users of `m` samples.
    pub fn new(radius: f64, epsilon: f64, n: usize, m: usize) -> Result<Self> {
        check_positive("radius", radius)?;
        check_positive("epsilon", epsilon)?;
        if m == 0 {
            return Err(Error::param("m", "need at least one sample per user"));
        }
        let mf = m as f64;
        let h = 4.0 * radius / mf.sqrt();
        let delta = radius * ((n.max(1) as f64).ln() / mf).sqrt();
        Self::with_geometry(radius, epsilon, h, delta)
    }

    /// Explicit `h` and `Δ`; `B = ⌈2D/h⌉`.
    pub fn with_geometry(radius: f64, epsilon: f64, bin_width: f64, margin: f64) -> Result<Self> {
        check_positive("radius", radius)?;
        check_positive("epsilon", epsilon)?;
        check_positive("bin_width", bin_width)?;
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::param(
                "margin",
                format!("must be non-negative, got {margin}"),
            ));
        }
        let bins = ((2.0 * radius / bin_width) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok(Self {
            radius,
            epsilon,
            bin_width,
            margin,
            bins,
            c1: DEFAULT_C1,
        })
    }

    /// Parameters for unbounded data with `E|X|^p ≤ M_p`: user means are
    /// clipped to `[-D, D]`, `Δ = c M_p^{1/p} √(ln m/m) ∨ (M_p² n ε²)^{1/(2p)} m^{-(1-1/p)}`,
    /// and `h = 4 M_p^{1/p}/√m`. `D` defaults to `10 Δ √m`.
    pub fn heavy_tailed(tail: &HeavyTail, epsilon: f64, n: usize, m: usize) -> Result<Self> {
        tail.validate()?;
        check_positive("epsilon", epsilon)?;
        if m == 0 {
            return Err(Error::param("m", "need at least one sample per user"));
        }
        let (mf, nf) = (m as f64, n.max(1) as f64);
        let scale = tail.moment_bound.powf(1.0 / tail.p);
        let gaussian_part = tail.c * scale * (mf.ln() / mf).sqrt();
        let tail_part = (tail.moment_bound.powi(2) * nf * epsilon * epsilon)
            .powf(1.0 / (2.0 * tail.p))
            * mf.powf(-(1.0 - 1.0 / tail.p));
        let delta = gaussian_part.max(tail_part);
        let h = 4.0 * scale / mf.sqrt();
        let radius = tail.clip_radius.unwrap_or(10.0 * delta * mf.sqrt());
        if radius < delta {
            return Err(Error::param(
                "clip_radius",
                format!("clip radius {radius} is below the margin {delta}"),
            ));
        }
        Self::with_geometry(radius, epsilon, h, delta)
    }

    pub fn with_c1(mut self, c1: f64) -> Self {
        self.c1 = c1;
        self
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }
    pub fn margin(&self) -> f64 {
        self.margin
    }
    pub fn bins(&self) -> usize {
        self.bins
    }
    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn stage1_scale(&self) -> LaplaceScale {
        LaplaceScale::new(2.0 / self.epsilon).expect("epsilon validated")
    }

    /// Length of the stage-2 clipping range, `3h + 2Δ`.
    pub fn stage2_range(&self) -> f64 {
        3.0 * self.bin_width + 2.0 * self.margin
    }

    pub fn stage2_scale(&self) -> LaplaceScale {
        LaplaceScale::new(self.stage2_range() / self.epsilon).expect("range and epsilon positive")
    }

    /// 0-based bin holding `y`. The last bin is closed at `+D`; values outside
    /// `[-D, D]` go to the nearest end bin.
    pub fn bin_of(&self, y: f64) -> usize {
        let k = ((y + self.radius) / self.bin_width).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.bins - 1)
        }
    }

    /// Interval `[L, R]` for a 1-based selected bin.
    pub fn interval(&self, k_hat: usize) -> IntervalEstimate {
        let k = k_hat as f64;
        IntervalEstimate {
            k_hat,
            left: -self.radius + (k - 2.0) * self.bin_width,
            right: -self.radius + (k + 1.0) * self.bin_width,
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

/// Moment assumption for unbounded data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyTail {
    /// Moment order, `p ≥ 2`.
    pub p: f64,
    /// `M_p ≥ E|X|^p`.
    pub moment_bound: f64,
    /// Clip radius `D` for user means; `None` uses the default.
    pub clip_radius: Option<f64>,
    /// Constant in the Gaussian part of the margin.
    pub c: f64,
}

impl HeavyTail {
    pub fn new(p: f64, moment_bound: f64) -> Result<Self> {
        let tail = Self {
            p,
            moment_bound,
            clip_radius: None,
            c: DEFAULT_HEAVY_C,
        };
        tail.validate()?;
        Ok(tail)
    }

    pub fn with_clip_radius(mut self, radius: f64) -> Self {
        self.clip_radius = Some(radius);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.p >= 2.0 && self.p.is_finite()) {
            return Err(Error::param(
                "p",
                format!("moment order must be at least 2, got {}", self.p),
            ));
        }
        check_positive("moment_bound", self.moment_bound)?;
        if let Some(r) = self.clip_radius {
            check_positive("clip_radius", r)?;
        }
        check_positive("c", self.c)
    }
}

/// Outcome of stage 1. `k_hat` is 1-based; `right - left = 3h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub k_hat: usize,
    pub left: f64,
    pub right: f64,
}

/// Stage-1 message: noisy one-hot over the `B` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Message {
    histogram: Vec<f64>,
}

impl Stage1Message {
    pub fn from_histogram(histogram: Vec<f64>) -> Self {
        Self { histogram }
    }
    pub fn histogram(&self) -> &[f64] {
        &self.histogram
    }
}

/// Stage-2 message: one noisy clipped mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage2Message {
    value: f64,
}

impl Stage2Message {
    pub fn from_value(value: f64) -> Self {
        Self { value }
    }
    pub fn value(&self) -> f64 {
        self.value
    }
}

/// The single message a user emits.
#[derive(Debug, Clone, PartialEq)]
pub enum PrivatizedUserMessage {
    Stage1(Stage1Message),
    Stage2(Stage2Message),
}

impl PrivatizedUserMessage {
    pub fn stage(&self) -> u8 {
        match self {
            Self::Stage1(_) => 1,
            Self::Stage2(_) => 2,
        }
    }
}

/// Stage-1 randomizer for one user.
pub fn privatize_stage1(
    user_mean: f64,
    params: &Mean1dParams,
    rng: &mut StreamRng,
) -> Stage1Message {
    let scale = params.stage1_scale();
    let bin = params.bin_of(user_mean);
    let histogram = (0..params.bins())
        .map(|k| (k == bin) as u8 as f64 + scale.sample(rng))
        .collect();
    Stage1Message { histogram }
}

/// Stage-1 aggregation: `k̂ = argmax_k Σ_i Z_ik`, ties to the smallest index.
pub fn stage1_select(
    messages: &[Stage1Message],
    params: &Mean1dParams,
) -> Result<IntervalEstimate> {
    let first = messages
        .first()
        .ok_or_else(|| Error::param("messages", "stage 1 needs at least one message"))?;
    let bins = first.histogram.len();
    if bins == 0 {
        return Err(Error::param("messages", "empty histogram"));
    }
    let mut totals = vec![0.0; bins];
    for msg in messages {
        if msg.histogram.len() != bins {
            return Err(Error::Dimension {
                expected: bins,
                actual: msg.histogram.len(),
            });
        }
        for (t, z) in totals.iter_mut().zip(&msg.histogram) {
            *t += z;
        }
    }
    let mut best = 0;
    for (k, &s) in totals.iter().enumerate().skip(1) {
        if s > totals[best] {
            best = k;
        }
    }
    Ok(params.interval(best + 1))
}

/// Stage-2 randomizer for one user.
pub fn privatize_stage2(
    user_mean: f64,
    interval: &IntervalEstimate,
    params: &Mean1dParams,
    rng: &mut StreamRng,
) -> Stage2Message {
    let lo = interval.left - params.margin();
    let hi = interval.right + params.margin();
    Stage2Message {
        value: user_mean.clamp(lo, hi) + params.stage2_scale().sample(rng),
    }
}

/// Stage-2 aggregation: the average of the received values.
pub fn aggregate_stage2(messages: &[Stage2Message]) -> Result<f64> {
    if messages.is_empty() {
        return Err(Error::param(
            "messages",
            "stage 2 needs at least one message",
        ));
    }
    Ok(messages.iter().map(|m| m.value).sum::<f64>() / messages.len() as f64)
}

/// Result of one run of the two-stage estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Mean1dOutput {
    pub estimate: f64,
    pub interval: IntervalEstimate,
    pub stage1_users: usize,
    pub stage2_users: usize,
    pub warnings: Vec<Warning>,
}

/// Runs both stages on already computed user means.
///
/// User `i` draws its noise from `stream.child(i)`. The first `⌈n/2⌉` users
/// take stage 1.
pub fn estimate_from_user_means(
    user_means: &[f64],
    m: usize,
    params: &Mean1dParams,
    stream: &RngStream,
) -> Result<Mean1dOutput> {
    let n = user_means.len();
    if n < MIN_USERS {
        return Err(Error::param(
            "n",
            format!("need at least {MIN_USERS} users, got {n}"),
        ));
    }
    let split = n.div_ceil(2);
    let stage1: Vec<Stage1Message> = user_means[..split]
        .par_iter()
        .enumerate()
        .map(|(i, &y)| privatize_stage1(y, params, &mut stream.child(i as u64).rng()))
        .collect();
    let interval = stage1_select(&stage1, params)?;
    let stage2: Vec<Stage2Message> = user_means[split..]
        .par_iter()
        .enumerate()
        .map(|(j, &y)| {
            privatize_stage2(
                y,
                &interval,
                params,
                &mut stream.child((split + j) as u64).rng(),
            )
        })
        .collect();
    let estimate = aggregate_stage2(&stage2)?;

    let mut warnings = Vec::new();
    let eps = params.epsilon();
    let lhs = n as f64 * (eps * eps).min(1.0);
    let rhs = params.c1() * (m.max(1) as f64).ln();
    if lhs < rhs {
        warnings.push(Warning::new("mean1d: n(eps^2 ^ 1) >= c1 ln m", lhs, rhs));
    }
    Ok(Mean1dOutput {
        estimate,
        interval,
        stage1_users: split,
        stage2_users: n - split,
        warnings,
    })
}

/// User means of a scalar dataset; errors if any sample leaves `[-bound, bound]`.
pub(crate) fn user_means<D: ScalarUsers + ?Sized>(
    data: &D,
    bound: Option<f64>,
) -> Result<Vec<f64>> {
    let n = data.num_users();
    let means: Vec<std::result::Result<f64, usize>> = (0..n)
        .into_par_iter()
        .map_init(Vec::new, |buf, i| {
            data.user_samples(i, buf);
            if let Some(b) = bound {
                if buf.iter().any(|x| !(x.abs() <= b)) {
                    return Err(i);
                }
            }
            Ok(buf.iter().sum::<f64>() / buf.len() as f64)
        })
        .collect();
    means
        .into_iter()
        .map(|r| {
            r.map_err(|i| {
                Error::param(
                    "data",
                    format!(
                        "user {i} has a sample outside [-{0}, {0}]",
                        bound.unwrap_or(0.0)
                    ),
                )
            })
        })
        .collect()
}

/// Two-stage estimate for data supported on `[-D, D]`.
pub fn mean1d_estimate<D: ScalarUsers + ?Sized>(
    data: &D,
    params: &Mean1dParams,
    stream: &RngStream,
) -> Result<Mean1dOutput> {
    let means = user_means(data, Some(params.radius()))?;
    estimate_from_user_means(&means, data.samples_per_user(), params, stream)
}

/// Two-stage estimate for unbounded data: user means are clipped to `[-D, D]`
/// first. Use [`Mean1dParams::heavy_tailed`] to calibrate `params`.
pub fn mean1d_estimate_clipped<D: ScalarUsers + ?Sized>(
    data: &D,
    params: &Mean1dParams,
    stream: &RngStream,
) -> Result<Mean1dOutput> {
    let r = params.radius();
    let means: Vec<f64> = user_means(data, None)?
        .into_iter()
        .map(|y| y.clamp(-r, r))
        .collect();
    estimate_from_user_means(&means, data.samples_per_user(), params, stream)
}
