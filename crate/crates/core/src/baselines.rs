//! Item-level mechanisms converted to user-level guarantees.
//!
//! `GroupPrivacy` privatizes all `nm` samples at budget `ε/m`, so a user's
//! `m` releases compose to `ε`. `SampleOne` releases one uniformly chosen
//! sample per user at budget `ε`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ScalarUsers;
use crate::error::{Error, Result};
use crate::noise::{LaplaceScale, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    GroupPrivacy,
    SampleOne,
}

impl BaselineKind {
    /// Laplace scale added to each released sample.
    pub fn item_scale(self, radius: f64, epsilon: f64, m: usize) -> Result<LaplaceScale> {
        let budget = match self {
            BaselineKind::GroupPrivacy => epsilon / m.max(1) as f64,
            BaselineKind::SampleOne => epsilon,
        };
        LaplaceScale::calibrated(2.0 * radius, budget)
    }
}

/// Mean of `v_i + Lap(2D/ε)`.
pub fn item_level_mean(
    values: &[f64],
    radius: f64,
    epsilon: f64,
    stream: &RngStream,
) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::param("values", "need at least one value"));
    }
    if values.iter().any(|v| !(v.abs() <= radius)) {
        return Err(Error::param(
            "values",
            format!("values must lie in [-{radius}, {radius}]"),
        ));
    }
    let scale = LaplaceScale::calibrated(2.0 * radius, epsilon)?;
    let mut rng = stream.rng();
    let total: f64 = values.iter().map(|v| v + scale.sample(&mut rng)).sum();
    Ok(total / values.len() as f64)
}

/// User-level `ε` estimate through the chosen conversion. Samples must lie in
/// `[-D, D]`.
pub fn baseline_mean<D: ScalarUsers + ?Sized>(
    data: &D,
    radius: f64,
    epsilon: f64,
    kind: BaselineKind,
    stream: &RngStream,
) -> Result<f64> {
    run(data, radius, epsilon, kind, stream, false)
}

/// As [`baseline_mean`] but clips each released sample to `[-D, D]` first.
pub fn baseline_mean_clipped<D: ScalarUsers + ?Sized>(
    data: &D,
    radius: f64,
    epsilon: f64,
    kind: BaselineKind,
    stream: &RngStream,
) -> Result<f64> {
    run(data, radius, epsilon, kind, stream, true)
}

fn run<D: ScalarUsers + ?Sized>(
    data: &D,
    radius: f64,
    epsilon: f64,
    kind: BaselineKind,
    stream: &RngStream,
    clip: bool,
) -> Result<f64> {
    let n = data.num_users();
    let m = data.samples_per_user();
    if n == 0 || m == 0 {
        return Err(Error::param(
            "data",
            "need at least one user and one sample",
        ));
    }
    let scale = kind.item_scale(radius, epsilon, m)?;
    let prepare = |x: f64| -> std::result::Result<f64, ()> {
        if clip {
            Ok(x.clamp(-radius, radius))
        } else if x.abs() <= radius {
            Ok(x)
        } else {
            Err(())
        }
    };
    let sums: Vec<std::result::Result<f64, usize>> = (0..n)
        .into_par_iter()
        .map_init(Vec::new, |buf, i| {
            let mut rng = stream.child(i as u64).rng();
            match kind {
                BaselineKind::SampleOne => {
                    let j = rng.random_range(0..m);
                    let x = prepare(data.sample(i, j)).map_err(|_| i)?;
                    Ok(x + scale.sample(&mut rng))
                }
                BaselineKind::GroupPrivacy => {
                    data.user_samples(i, buf);
                    let mut total = 0.0;
                    for &x in buf.iter() {
                        total += prepare(x).map_err(|_| i)? + scale.sample(&mut rng);
                    }
                    Ok(total)
                }
            }
        })
        .collect();
    let mut total = 0.0;
    for s in sums {
        total += s.map_err(|i| {
            Error::param(
                "data",
                format!("user {i} has a sample outside [-{radius}, {radius}]"),
            )
        })?;
    }
    let count = match kind {
        BaselineKind::SampleOne => n,
        BaselineKind::GroupPrivacy => n * m,
    };
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::UserDatasetScalar;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn item_level_vanishing_noise() {
        let est = item_level_mean(&[0.5; 1000], 1.0, 1e6, &RngStream::new(1)).unwrap();
        assert!((est - 0.5).abs() < 1e-2);
        let single = item_level_mean(&[0.2], 1.0, 1.0, &RngStream::new(1)).unwrap();
        assert!(single != 0.2);
        assert!(item_level_mean(&[0.2], 1.0, 0.0, &RngStream::new(1)).is_err());
        assert!(item_level_mean(&[], 1.0, 1.0, &RngStream::new(1)).is_err());
    }

    #[test]
    fn group_privacy_scale() {
        let s = BaselineKind::GroupPrivacy
            .item_scale(1.0, 1.0, 100)
            .unwrap();
        assert!((s.lambda() - 200.0).abs() < 1e-9);
        let s = BaselineKind::SampleOne.item_scale(1.0, 0.5, 100).unwrap();
        assert!((s.lambda() - 4.0).abs() < 1e-12);
    }

    struct Counting {
        inner: UserDatasetScalar,
        single: AtomicUsize,
        whole: AtomicUsize,
    }

    impl ScalarUsers for Counting {
        fn num_users(&self) -> usize {
            self.inner.num_users()
        }
        fn samples_per_user(&self) -> usize {
            self.inner.samples_per_user()
        }
        fn user_samples(&self, user: usize, buf: &mut Vec<f64>) {
            self.whole.fetch_add(1, Ordering::Relaxed);
            self.inner.user_samples(user, buf)
        }
        fn sample(&self, user: usize, index: usize) -> f64 {
            self.single.fetch_add(1, Ordering::Relaxed);
            self.inner.sample(user, index)
        }
    }

    #[test]
    fn sample_one_touches_one_sample_per_user() {
        let data = Counting {
            inner: UserDatasetScalar::constant(50, 10, 0.1),
            single: AtomicUsize::new(0),
            whole: AtomicUsize::new(0),
        };
        baseline_mean(&data, 1.0, 1.0, BaselineKind::SampleOne, &RngStream::new(2)).unwrap();
        assert_eq!(data.single.load(Ordering::Relaxed), 50);
        assert_eq!(data.whole.load(Ordering::Relaxed), 0);
    }

    #[test]
    fn out_of_range_rejected_unless_clipped() {
        let data = UserDatasetScalar::constant(10, 3, 2.0);
        assert!(baseline_mean(
            &data,
            1.0,
            1.0,
            BaselineKind::GroupPrivacy,
            &RngStream::new(0)
        )
        .is_err());
        let est =
            baseline_mean_clipped(&data, 1.0, 1e9, BaselineKind::SampleOne, &RngStream::new(0))
                .unwrap();
        assert!((est - 1.0).abs() < 1e-6);
    }

    #[test]
    fn item_level_variance_matches_closed_form() {
        let n = 100_000;
        let values: Vec<f64> = (0..n).map(|i| (i as f64 / n as f64) * 2.0 - 1.0).collect();
        let truth = values.iter().sum::<f64>() / n as f64;
        let trials = 400;
        let mse: f64 = (0..trials)
            .map(|t| {
                let e = item_level_mean(&values, 1.0, 1.0, &RngStream::new(t)).unwrap();
                (e - truth).powi(2)
            })
            .sum::<f64>()
            / trials as f64;
        let expected = 8.0 / n as f64;
        assert!((mse / expected - 1.0).abs() < 0.2, "{mse} vs {expected}");
    }
}
