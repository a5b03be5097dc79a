//! Raw user datasets.
//!
//! Every estimator reads raw samples through one of the `*Users` traits, one
//! user at a time, so datasets can be materialized matrices or generated
//! lazily from a seed. Nothing downstream of a privatization step sees these
//! values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Users holding `m` real samples each.
pub trait ScalarUsers: Sync {
    fn num_users(&self) -> usize;
    fn samples_per_user(&self) -> usize;
    /// Replaces the contents of `buf` with user `user`'s samples.
    fn user_samples(&self, user: usize, buf: &mut Vec<f64>);
    /// Sample `index` of user `user`.
    fn sample(&self, user: usize, index: usize) -> f64 {
        let mut buf = Vec::new();
        self.user_samples(user, &mut buf);
        buf[index]
    }
}

/// Users holding `m` samples in `R^d` each, row-major `m x d`.
pub trait VectorUsers: Sync {
    fn num_users(&self) -> usize;
    fn samples_per_user(&self) -> usize;
    fn dim(&self) -> usize;
    fn support(&self) -> Support;
    fn user_samples(&self, user: usize, buf: &mut Vec<f64>);
}

/// Users holding `m` labeled samples with features in `[0, 1]^d`.
pub trait LabeledUsers: Sync {
    fn num_users(&self) -> usize;
    fn samples_per_user(&self) -> usize;
    fn dim(&self) -> usize;
    /// Features (row-major `m x d`) and labels (`m`) of one user.
    fn user_samples(&self, user: usize, features: &mut Vec<f64>, labels: &mut Vec<f64>);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportKind {
    Linf,
    L2,
    L1,
}

/// Norm ball `{x : ‖x‖ ≤ radius}` containing every sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub kind: SupportKind,
    pub radius: f64,
}

impl Support {
    pub fn new(kind: SupportKind, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param(
                "radius",
                format!("must be positive, got {radius}"),
            ));
        }
        Ok(Self { kind, radius })
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        match self.kind {
            SupportKind::Linf => x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            SupportKind::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            SupportKind::L1 => x.iter().map(|v| v.abs()).sum(),
        }
    }

    /// Norm check with a small relative slack for rounding in generators.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.norm(x) <= self.radius * (1.0 + 1e-12)
    }
}

/// Materialized `n x m` matrix of scalar samples.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDatasetScalar {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl UserDatasetScalar {
    pub fn new(n: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("m", "need at least one sample per user"));
        }
        if values.len() != n * m {
            return Err(Error::Dimension {
                expected: n * m,
                actual: values.len(),
            });
        }
        Ok(Self { n, m, values })
    }

    pub fn from_users(users: &[Vec<f64>]) -> Result<Self> {
        let m = users.first().map_or(0, Vec::len);
        if users.iter().any(|u| u.len() != m) {
            return Err(Error::param(
                "users",
                "every user must hold the same number of samples",
            ));
        }
        Self::new(users.len(), m, users.concat())
    }

    pub fn constant(n: usize, m: usize, value: f64) -> Self {
        Self {
            n,
            m: m.max(1),
            values: vec![value; n * m.max(1)],
        }
    }

    pub fn user(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl ScalarUsers for UserDatasetScalar {
    fn num_users(&self) -> usize {
        self.n
    }
    fn samples_per_user(&self) -> usize {
        self.m
    }
    fn user_samples(&self, user: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend_from_slice(self.user(user));
    }
    fn sample(&self, user: usize, index: usize) -> f64 {
        self.values[user * self.m + index]
    }
}

/// Materialized `n x m x d` tensor of vector samples.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDatasetVector {
    n: usize,
    m: usize,
    d: usize,
    support: Support,
    values: Vec<f64>,
}

impl UserDatasetVector {
    /// Validates shape and that every sample lies in `support`.
    pub fn new(n: usize, m: usize, d: usize, support: Support, values: Vec<f64>) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::param("shape", "m and d must be positive"));
        }
        if values.len() != n * m * d {
            return Err(Error::Dimension {
                expected: n * m * d,
                actual: values.len(),
            });
        }
        if let Some(bad) = values.chunks_exact(d).position(|x| !support.contains(x)) {
            return Err(Error::param(
                "values",
                format!(
                    "sample {bad} lies outside the {:?} ball of radius {}",
                    support.kind, support.radius
                ),
            ));
        }
        Ok(Self {
            n,
            m,
            d,
            support,
            values,
        })
    }

    pub fn user(&self, i: usize) -> &[f64] {
        let stride = self.m * self.d;
        &self.values[i * stride..(i + 1) * stride]
    }
}

impl VectorUsers for UserDatasetVector {
    fn num_users(&self) -> usize {
        self.n
    }
    fn samples_per_user(&self) -> usize {
        self.m
    }
    fn dim(&self) -> usize {
        self.d
    }
    fn support(&self) -> Support {
        self.support
    }
    fn user_samples(&self, user: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend_from_slice(self.user(user));
    }
}

/// Materialized labeled samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledUserDataset {
    n: usize,
    m: usize,
    d: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl LabeledUserDataset {
    pub fn new(n: usize, m: usize, d: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::param("shape", "m and d must be positive"));
        }
        if features.len() != n * m * d {
            return Err(Error::Dimension {
                expected: n * m * d,
                actual: features.len(),
            });
        }
        if labels.len() != n * m {
            return Err(Error::Dimension {
                expected: n * m,
                actual: labels.len(),
            });
        }
        if features.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::param(
                "features",
                "features must lie in the unit cube",
            ));
        }
        Ok(Self {
            n,
            m,
            d,
            features,
            labels,
        })
    }
}

impl LabeledUsers for LabeledUserDataset {
    fn num_users(&self) -> usize {
        self.n
    }
    fn samples_per_user(&self) -> usize {
        self.m
    }
    fn dim(&self) -> usize {
        self.d
    }
    fn user_samples(&self, user: usize, features: &mut Vec<f64>, labels: &mut Vec<f64>) {
        let fs = self.m * self.d;
        features.clear();
        features.extend_from_slice(&self.features[user * fs..(user + 1) * fs]);
        labels.clear();
        labels.extend_from_slice(&self.labels[user * self.m..(user + 1) * self.m]);
    }
}

/// Column-wise mean of a row-major `rows x d` block.
pub(crate) fn mean_rows(samples: &[f64], d: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    let rows = samples.len() / d;
    for row in samples.chunks_exact(d) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    let inv = 1.0 / rows as f64;
    out.iter_mut().for_each(|o| *o *= inv);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_shape_checks() {
        assert!(UserDatasetScalar::new(2, 3, vec![0.0; 5]).is_err());
        assert!(UserDatasetScalar::new(2, 0, vec![]).is_err());
        let data = UserDatasetScalar::from_users(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(data.user(1), &[3.0, 4.0]);
        assert!(UserDatasetScalar::from_users(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn vector_support_enforced() {
        let l2 = Support::new(SupportKind::L2, 1.0).unwrap();
        assert!(UserDatasetVector::new(1, 1, 2, l2, vec![0.8, 0.8]).is_err());
        assert!(UserDatasetVector::new(1, 1, 2, l2, vec![0.6, 0.8]).is_ok());
        let linf = Support::new(SupportKind::Linf, 1.0).unwrap();
        assert!(UserDatasetVector::new(1, 1, 2, linf, vec![0.8, 0.8]).is_ok());
        let l1 = Support::new(SupportKind::L1, 1.0).unwrap();
        assert!(UserDatasetVector::new(1, 1, 2, l1, vec![0.6, 0.6]).is_err());
    }

    #[test]
    fn labeled_features_in_cube() {
        assert!(LabeledUserDataset::new(1, 1, 1, vec![1.2], vec![1.0]).is_err());
        assert!(LabeledUserDataset::new(1, 1, 1, vec![1.0], vec![1.0]).is_ok());
    }

    #[test]
    fn row_means() {
        let mut out = [0.0; 2];
        mean_rows(&[1.0, 2.0, 3.0, 6.0], 2, &mut out);
        assert_eq!(out, [2.0, 4.0]);
    }
}
