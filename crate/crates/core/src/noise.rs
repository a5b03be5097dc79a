//! Deterministic random streams and Laplace noise.
//!
//! A [`RngStream`] is an immutable descriptor `(root_seed, path)`. The generator
//! for a stream is keyed by a hash of the descriptor, so streams for distinct
//! paths can be opened in any order, on any thread, and always produce the
//! same draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Generator behind every stream.
pub type StreamRng = ChaCha8Rng;

const DOMAIN_TAG: &[u8] = b"uldp/rng-stream/v1";

/// Descriptor of a reproducible random stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RngStream {
    root_seed: u64,
    path: Vec<u64>,
}

impl RngStream {
    pub fn new(root_seed: u64) -> Self {
        Self {
            root_seed,
            path: Vec::new(),
        }
    }

    /// Stream for `path` under `root_seed`.
    pub fn derive(root_seed: u64, path: &[u64]) -> Self {
        Self {
            root_seed,
            path: path.to_vec(),
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Child stream with `label` appended to the path.
    pub fn child(&self, label: u64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(label);
        Self {
            root_seed: self.root_seed,
            path,
        }
    }

    pub fn children(&self, labels: &[u64]) -> Self {
        let mut path = self.path.clone();
        path.extend_from_slice(labels);
        Self {
            root_seed: self.root_seed,
            path,
        }
    }

    /// 256-bit key of this stream.
    pub fn key(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(DOMAIN_TAG);
        hasher.update(self.root_seed.to_le_bytes());
        hasher.update((self.path.len() as u64).to_le_bytes());
        for label in &self.path {
            hasher.update(label.to_le_bytes());
        }
        hasher.finalize().into()
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::from_seed(self.key())
    }
}

/// Scale parameter of a zero-mean Laplace distribution, density `exp(-|u|/l)/(2l)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LaplaceScale(f64);

impl LaplaceScale {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(Self(lambda))
        } else {
            Err(Error::param(
                "lambda",
                format!("Laplace scale must be positive and finite, got {lambda}"),
            ))
        }
    }

    /// Scale `sensitivity / epsilon`.
    pub fn calibrated(sensitivity: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::param(
                "epsilon",
                format!("must be positive, got {epsilon}"),
            ));
        }
        Self::new(sensitivity / epsilon)
    }

    pub fn lambda(self) -> f64 {
        self.0
    }

    pub fn variance(self) -> f64 {
        2.0 * self.0 * self.0
    }

    /// One draw by inverse CDF.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.random::<f64>() - 0.5;
            let tail = 1.0 - 2.0 * u.abs();
            if tail > 0.0 {
                return -self.0 * u.signum() * tail.ln();
            }
        }
    }
}

/// `count` i.i.d. Laplace draws from a fresh generator on `stream`.
pub fn sample_laplace(stream: &RngStream, scale: LaplaceScale, count: usize) -> Vec<f64> {
    let mut rng = stream.rng();
    (0..count).map(|_| scale.sample(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniforms(stream: &RngStream, count: usize) -> Vec<f64> {
        let mut rng = stream.rng();
        (0..count).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn same_descriptor_same_draws() {
        let a = uniforms(&RngStream::derive(42, &[0, 0]), 10);
        let b = uniforms(&RngStream::derive(42, &[0, 0]), 10);
        assert_eq!(a, b);
    }

    #[test]
    fn child_matches_derive() {
        let via_child = RngStream::new(7).child(3).child(9);
        assert_eq!(via_child, RngStream::derive(7, &[3, 9]));
        assert_eq!(via_child, RngStream::new(7).children(&[3, 9]));
    }

    #[test]
    fn sibling_streams_uncorrelated() {
        let n = 100_000;
        let a = uniforms(&RngStream::derive(42, &[0, 0]), n);
        let b = uniforms(&RngStream::derive(42, &[0, 1]), n);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ma, mb) = (mean(&a), mean(&b));
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (x, y) in a.iter().zip(&b) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        let r = cov / (va * vb).sqrt();
        assert!(r.abs() < 0.02, "correlation {r}");
        assert!(r.abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn empty_path_is_valid_and_distinct_from_prefixed() {
        let root = RngStream::derive(42, &[]);
        assert!(root.path().is_empty());
        let draws = uniforms(&root, 4);
        assert!(draws.iter().all(|u| (0.0..1.0).contains(u)));
        assert_ne!(draws, uniforms(&RngStream::derive(42, &[0]), 4));
    }

    #[test]
    fn path_length_is_part_of_the_key() {
        assert_ne!(
            RngStream::derive(1, &[0]).key(),
            RngStream::derive(1, &[0, 0]).key()
        );
    }

    #[test]
    fn laplace_variance_matches_closed_form() {
        let draws = sample_laplace(
            &RngStream::new(1),
            LaplaceScale::new(1.0).unwrap(),
            1_000_000,
        );
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((1.98..=2.02).contains(&var), "variance {var}");
    }

    #[test]
    fn laplace_empty_request() {
        let draws = sample_laplace(&RngStream::new(1), LaplaceScale::new(0.5).unwrap(), 0);
        assert!(draws.is_empty());
    }

    #[test]
    fn laplace_tail_matches_cdf() {
        let lambda = 2.0;
        let t = 2.0 * 2f64.ln() * lambda;
        let draws = sample_laplace(
            &RngStream::new(5),
            LaplaceScale::new(lambda).unwrap(),
            1_000_000,
        );
        let frac = draws.iter().filter(|x| x.abs() > t).count() as f64 / draws.len() as f64;
        let expected = (-t / lambda).exp();
        assert!((frac - expected).abs() < 0.01, "tail {frac} vs {expected}");
    }

    #[test]
    fn rejects_non_positive_scale() {
        assert!(LaplaceScale::new(0.0).is_err());
        assert!(LaplaceScale::new(-1.0).is_err());
        assert!(LaplaceScale::new(f64::NAN).is_err());
        assert!(LaplaceScale::calibrated(1.0, 0.0).is_err());
    }
}
