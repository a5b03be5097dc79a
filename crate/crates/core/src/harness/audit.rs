//! Monte-Carlo check of the user-level privacy guarantee.
//!
//! The single-user randomizer runs `samples` times on each of two user
//! datasets. Each output is reduced to the log-likelihood ratio between the
//! two inputs under the declared noise scale; that statistic is a
//! post-processing of the release, so its distributions obey the same `e^ε`
//! bound, and it concentrates mass exactly where the bound is tight. The
//! statistic is histogrammed into equal-width cells on `[-ε, ε]`.
//!
//! A cell fails when even the conservative ratio (Wilson lower bound over
//! Wilson upper bound) exceeds `e^ε`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mean1d::{privatize_stage1, privatize_stage2, Mean1dParams};
use crate::noise::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditMechanism {
    /// Noisy one-hot histogram of the user mean.
    Stage1,
    /// Noisy clipped user mean on a fixed central interval.
    Stage2,
}

fn default_samples() -> usize {
    1_000_000
}
fn default_bins() -> usize {
    50
}
fn default_multiplier() -> f64 {
    1.0
}
fn default_z() -> f64 {
    4.0
}
fn default_geometry_n() -> usize {
    10_000
}
fn default_geometry_m() -> usize {
    100
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub mechanism: AuditMechanism,
    pub epsilon: f64,
    #[serde(default = "one")]
    pub radius: f64,
    /// `n` and `m` fixing the default bin width and margin.
    #[serde(default = "default_geometry_n")]
    pub n: usize,
    #[serde(default = "default_geometry_m")]
    pub m: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Multiplies the noise scale actually applied. Values below 1 make a
    /// deliberately broken mechanism.
    #[serde(default = "default_multiplier")]
    pub noise_multiplier: f64,
    /// Wilson interval width in standard deviations.
    #[serde(default = "default_z")]
    pub z: f64,
    #[serde(default)]
    pub seed: u64,
}

impl AuditConfig {
    pub fn new(mechanism: AuditMechanism, epsilon: f64) -> Self {
        Self {
            mechanism,
            epsilon,
            radius: 1.0,
            n: default_geometry_n(),
            m: default_geometry_m(),
            samples: default_samples(),
            bins: default_bins(),
            noise_multiplier: 1.0,
            z: default_z(),
            seed: 0,
        }
    }

    /// The datasets `x = (D, …, D)` and `x′ = (−D, …, −D)`.
    pub fn extreme_pair(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![self.radius; self.m], vec![-self.radius; self.m])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Spec(msg));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.noise_multiplier > 0.0) || !(self.z > 0.0) {
            return bad("noise_multiplier and z must be positive".into());
        }
        if self.samples == 0 || self.bins < 2 || self.m == 0 || self.n < 2 {
            return bad("samples, m and n must be positive and bins at least 2".into());
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCell {
    pub lo: f64,
    pub hi: f64,
    pub count_x: u64,
    pub count_x_prime: u64,
    pub log_ratio: f64,
    pub conservative: f64,
    pub smoothed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub mechanism: AuditMechanism,
    pub epsilon: f64,
    pub noise_multiplier: f64,
    pub samples: usize,
    pub bins: usize,
    /// Largest `|ln(p̂_x / p̂_x′)|` over cells.
    pub max_log_ratio: f64,
    /// Largest Wilson-conservative log ratio over cells.
    pub max_conservative: f64,
    /// `4√(ln bins / samples)`, reported for reference.
    pub fixed_slack: f64,
    /// Cells with an empty side, which received add-one smoothing.
    pub smoothed_cells: usize,
    pub passed: bool,
    pub cells: Vec<AuditCell>,
}

impl AuditReport {
    pub fn within_fixed_slack(&self) -> bool {
        self.max_log_ratio <= self.epsilon + self.fixed_slack
    }
}

/// Wilson score interval for `count` successes in `total` trials.
pub fn wilson(count: f64, total: f64, z: f64) -> (f64, f64) {
    let p = count / total;
    let z2 = z * z;
    let denom = 1.0 + z2 / total;
    let center = (p + z2 / (2.0 * total)) / denom;
    let half = z * (p * (1.0 - p) / total + z2 / (4.0 * total * total)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

const CHUNK: usize = 8192;

/// Audits the chosen mechanism on the datasets `x`, `x_prime` (one user's
/// `m` samples each).
pub fn audit_privacy(
    config: &AuditConfig,
    x: &[f64],
    x_prime: &[f64],
    stream: &RngStream,
) -> Result<AuditReport> {
    config.validate()?;
    if x.len() != x_prime.len() || x.is_empty() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: x_prime.len(),
        });
    }
    let declared = Mean1dParams::new(config.radius, config.epsilon, config.n, config.m)?;
    // Same geometry, noise scaled by the multiplier.
    let applied = Mean1dParams::with_geometry(
        config.radius,
        config.epsilon / config.noise_multiplier,
        declared.bin_width(),
        declared.margin(),
    )?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ya, yb) = (mean(x), mean(x_prime));
    if !(ya.abs() <= config.radius && yb.abs() <= config.radius) {
        return Err(Error::param("data", "audit datasets must lie in [-D, D]"));
    }

    let eps = config.epsilon;
    let statistic: Box<dyn Fn(f64, &mut crate::noise::StreamRng) -> f64 + Sync> =
        match config.mechanism {
            AuditMechanism::Stage1 => {
                let (a, b) = (declared.bin_of(ya), declared.bin_of(yb));
                let lambda = declared.stage1_scale().lambda();
                Box::new(move |y, rng| {
                    if a == b {
                        return 0.0;
                    }
                    let z = privatize_stage1(y, &applied, rng);
                    let h = z.histogram();
                    // ln p(z | a) − ln p(z | b) for one-hot at a versus at b.
                    let (za, zb) = (h[a], h[b]);
                    ((za.abs() - (za - 1.0).abs()) + ((zb - 1.0).abs() - zb.abs())) / lambda
                })
            }
            AuditMechanism::Stage2 => {
                let k_hat = declared.bins().div_ceil(2);
                let interval = declared.interval(k_hat);
                let (lo, hi) = (
                    interval.left - declared.margin(),
                    interval.right + declared.margin(),
                );
                let (ca, cb) = (ya.clamp(lo, hi), yb.clamp(lo, hi));
                let lambda = declared.stage2_scale().lambda();
                Box::new(move |y, rng| {
                    let z = privatize_stage2(y, &interval, &applied, rng).value();
                    ((z - cb).abs() - (z - ca).abs()) / lambda
                })
            }
        };

    let bins = config.bins;
    let width = 2.0 * eps / bins as f64;
    let cell = |s: f64| (((s + eps) / width).floor().max(0.0) as usize).min(bins - 1);
    let histogram = |y: f64, side: u64| -> Vec<u64> {
        let chunks = config.samples.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream.children(&[side, c as u64]).rng();
                let mut counts = vec![0u64; bins];
                let count = CHUNK.min(config.samples - c * CHUNK);
                for _ in 0..count {
                    counts[cell(statistic(y, &mut rng))] += 1;
                }
                counts
            })
            .reduce(
                || vec![0u64; bins],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    };
    let hx = histogram(ya, 0);
    let hy = histogram(yb, 1);

    let total = config.samples as f64;
    let mut cells = Vec::with_capacity(bins);
    for k in 0..bins {
        let (cx, cy) = (hx[k], hy[k]);
        let smoothed = cx == 0 || cy == 0;
        let (a, b) = if smoothed {
            (cx as f64 + 1.0, cy as f64 + 1.0)
        } else {
            (cx as f64, cy as f64)
        };
        let (ax_lo, ax_hi) = wilson(a, total, config.z);
        let (by_lo, by_hi) = wilson(b, total, config.z);
        let log_ratio = (a / b).ln().abs();
        let conservative = (ax_lo / by_hi).ln().max((by_lo / ax_hi).ln()).max(0.0);
        cells.push(AuditCell {
            lo: -eps + k as f64 * width,
            hi: -eps + (k + 1) as f64 * width,
            count_x: cx,
            count_x_prime: cy,
            log_ratio: if cx == 0 && cy == 0 { 0.0 } else { log_ratio },
            conservative: if cx == 0 && cy == 0 {
                0.0
            } else {
                conservative
            },
            smoothed,
        });
    }
    let max_log_ratio = cells.iter().map(|c| c.log_ratio).fold(0.0, f64::max);
    let max_conservative = cells.iter().map(|c| c.conservative).fold(0.0, f64::max);
    Ok(AuditReport {
        mechanism: config.mechanism,
        epsilon: eps,
        noise_multiplier: config.noise_multiplier,
        samples: config.samples,
        bins,
        max_log_ratio,
        max_conservative,
        fixed_slack: 4.0 * ((bins as f64).ln() / total).sqrt(),
        smoothed_cells: cells.iter().filter(|c| c.smoothed).count(),
        passed: max_conservative <= eps,
        cells,
    })
}

/// [`audit_privacy`] on the extreme pair with the configured seed.
pub fn audit_extreme(config: &AuditConfig) -> Result<AuditReport> {
    let (x, x_prime) = config.extreme_pair();
    audit_privacy(
        config,
        &x,
        &x_prime,
        &RngStream::derive(config.seed, &[0xa0d1]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_the_estimate() {
        let (lo, hi) = wilson(30.0, 100.0, 2.0);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson(0.0, 100.0, 2.0);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    fn quick(mechanism: AuditMechanism, eps: f64, multiplier: f64) -> AuditReport {
        let mut c = AuditConfig::new(mechanism, eps);
        c.samples = 100_000;
        c.noise_multiplier = multiplier;
        audit_extreme(&c).unwrap()
    }

    #[test]
    fn shipped_mechanisms_pass_and_broken_ones_fail() {
        for mech in [AuditMechanism::Stage1, AuditMechanism::Stage2] {
            let ok = quick(mech, 1.0, 1.0);
            assert!(ok.passed, "{mech:?} {}", ok.max_conservative);
            // The tight cells sit at the ends of [-ε, ε].
            assert!(ok.max_log_ratio > 0.9, "{mech:?} {}", ok.max_log_ratio);
            let broken = quick(mech, 1.0, 0.5);
            assert!(!broken.passed, "{mech:?} {}", broken.max_conservative);
        }
    }

    #[test]
    fn loose_budget_passes() {
        let r = quick(AuditMechanism::Stage2, 10.0, 1.0);
        assert!(r.passed);
    }

    #[test]
    fn identical_datasets_have_no_signal() {
        let c = AuditConfig {
            samples: 10_000,
            ..AuditConfig::new(AuditMechanism::Stage2, 1.0)
        };
        let x = vec![0.3; c.m];
        let r = audit_privacy(&c, &x, &x, &RngStream::new(1)).unwrap();
        assert!(r.passed);
        assert!(r.max_conservative == 0.0);
    }

    #[test]
    fn rejects_mismatched_pairs() {
        let c = AuditConfig::new(AuditMechanism::Stage1, 1.0);
        assert!(audit_privacy(&c, &[0.1, 0.2], &[0.1], &RngStream::new(1)).is_err());
    }
}
