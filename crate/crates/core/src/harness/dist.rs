//! Named synthetic distributions and lazily generated user datasets.
//!
//! A dataset is `(distribution, n, m, d, stream)`; user `i`'s samples come
//! from `stream.child(i)`, so nothing is materialized up front.

use rand::Rng;
use rand_distr::{Normal, StandardNormal, StudentT as TDist};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::data::{LabeledUsers, ScalarUsers, Support, SupportKind, VectorUsers};
use crate::error::{Error, Result};
use crate::noise::{LaplaceScale, RngStream, StreamRng};

fn minus_one() -> f64 {
    -1.0
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    /// Scalar uniform on `[low, high]`.
    Uniform {
        #[serde(default = "minus_one")]
        low: f64,
        #[serde(default = "one")]
        high: f64,
    },
    /// Scalar point mass, reported as supported on `[-radius, radius]`.
    Constant {
        value: f64,
        #[serde(default = "one")]
        radius: f64,
    },
    Gaussian {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        std: f64,
    },
    Laplace {
        #[serde(default)]
        location: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Student-t with `nu` degrees of freedom plus `shift`.
    StudentT {
        nu: f64,
        #[serde(default)]
        shift: f64,
    },
    /// Vector with i.i.d. uniform coordinates on `[-radius, radius]`.
    Cube {
        #[serde(default = "one")]
        radius: f64,
    },
    /// Uniform on the sphere of the given radius.
    Sphere {
        #[serde(default = "one")]
        radius: f64,
    },
    /// `center + (radius − ‖center‖) U` with `U` uniform in the unit ball.
    Ball {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    ConstantVector {
        value: Vec<f64>,
        #[serde(default = "one")]
        radius: f64,
    },
    GaussianVector {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        std: f64,
    },
    StudentTVector {
        nu: f64,
        #[serde(default)]
        shift: f64,
    },
    /// One-hot samples over `probs.len()` categories.
    Categorical { probs: Vec<f64> },
    /// Features uniform on `[0,1]^d`, labels `±1` with
    /// `E[Y|x] = sign(x₁ − ½) min(1, (4|x₁ − ½|)^{1/γ})`.
    ClassifyStep {
        #[serde(default = "one")]
        beta: f64,
        #[serde(default = "one")]
        gamma: f64,
    },
    /// Features uniform on `[0,1]^d`, `Y = sin(2πx₁)/2 + Uniform[−noise, noise]`.
    RegressSine {
        #[serde(default = "half")]
        noise: f64,
    },
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Scalar,
    Vector,
    Labeled,
}

impl Distribution {
    pub fn kind(&self) -> DataKind {
        use Distribution::*;
        match self {
            Uniform { .. }
            | Constant { .. }
            | Gaussian { .. }
            | Laplace { .. }
            | StudentT { .. } => DataKind::Scalar,
            ClassifyStep { .. } | RegressSine { .. } => DataKind::Labeled,
            _ => DataKind::Vector,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        use Distribution::*;
        let bad = |msg: String| Err(Error::Spec(msg));
        match self {
            Uniform { low, high } if !(low < high) => {
                bad(format!("uniform needs low < high, got [{low}, {high}]"))
            }
            Constant { value, radius } if !(value.abs() <= *radius) => {
                bad(format!("constant {value} lies outside radius {radius}"))
            }
            Gaussian { std, .. } | GaussianVector { std, .. } if !(*std > 0.0) => {
                bad("std must be positive".into())
            }
            Laplace { scale, .. } if !(*scale > 0.0) => {
                bad("laplace scale must be positive".into())
            }
            StudentT { nu, .. } | StudentTVector { nu, .. } if !(*nu > 0.0) => {
                bad("nu must be positive".into())
            }
            Cube { radius } | Sphere { radius } if !(*radius > 0.0) => {
                bad("radius must be positive".into())
            }
            Ball { radius, center } => {
                let c = center.as_deref().unwrap_or(&[]);
                if !c.is_empty() && c.len() != d {
                    return bad(format!("ball center has {} coordinates, d = {d}", c.len()));
                }
                if !(norm(c) < *radius) {
                    return bad("ball center must lie strictly inside the radius".into());
                }
                Ok(())
            }
            ConstantVector { value, radius } => {
                if value.len() != d {
                    return bad(format!(
                        "constant vector has {} coordinates, d = {d}",
                        value.len()
                    ));
                }
                if !(value.iter().all(|v| v.abs() <= *radius)) {
                    return bad("constant vector lies outside its radius".into());
                }
                Ok(())
            }
            Categorical { probs } => {
                if probs.len() != d {
                    return bad(format!(
                        "categorical has {} categories, d = {d}",
                        probs.len()
                    ));
                }
                if probs.iter().any(|p| !(*p >= 0.0))
                    || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
                {
                    return bad(
                        "categorical probabilities must be non-negative and sum to 1".into(),
                    );
                }
                Ok(())
            }
            ClassifyStep { gamma, beta } if !(*gamma > 0.0 && *beta > 0.0) => {
                bad("beta and gamma must be positive".into())
            }
            RegressSine { noise } if !(*noise >= 0.0) => bad("noise must be non-negative".into()),
            _ => Ok(()),
        }
    }

    /// Mean of a scalar distribution; `None` when it does not exist.
    pub fn scalar_mean(&self) -> Option<f64> {
        use Distribution::*;
        match *self {
            Uniform { low, high } => Some(0.5 * (low + high)),
            Constant { value, .. } => Some(value),
            Gaussian { mean, .. } => Some(mean),
            Laplace { location, .. } => Some(location),
            StudentT { nu, shift } => (nu > 1.0).then_some(shift),
            _ => None,
        }
    }

    /// Mean vector of a vector distribution in dimension `d`.
    pub fn vector_mean(&self, d: usize) -> Option<Vec<f64>> {
        use Distribution::*;
        match self {
            Cube { .. } | Sphere { .. } => Some(vec![0.0; d]),
            Ball { center, .. } => Some(center.clone().unwrap_or_else(|| vec![0.0; d])),
            ConstantVector { value, .. } => Some(value.clone()),
            GaussianVector { mean, .. } => Some(vec![*mean; d]),
            StudentTVector { nu, shift } => (*nu > 1.0).then(|| vec![*shift; d]),
            Categorical { probs } => Some(probs.clone()),
            _ => None,
        }
    }

    /// Radius of the support, when bounded.
    pub fn support(&self) -> Option<Support> {
        use Distribution::*;
        let s = |kind, r: f64| Support::new(kind, r).ok();
        match self {
            Uniform { low, high } => s(SupportKind::Linf, low.abs().max(high.abs())),
            Constant { radius, .. } | Cube { radius } | ConstantVector { radius, .. } => {
                s(SupportKind::Linf, *radius)
            }
            Sphere { radius } | Ball { radius, .. } => s(SupportKind::L2, *radius),
            Categorical { .. } => s(SupportKind::L1, 1.0),
            _ => None,
        }
    }

    /// `E|X|^p` for a scalar distribution (one coordinate for i.i.d. vectors),
    /// infinite when the moment does not exist.
    pub fn abs_moment(&self, p: f64) -> Option<f64> {
        use Distribution::*;
        match *self {
            Uniform { low, high } => {
                let prim = |x: f64| x.signum() * x.abs().powf(p + 1.0) / (p + 1.0);
                Some((prim(high) - prim(low)) / (high - low))
            }
            Constant { value, .. } => Some(value.abs().powf(p)),
            Laplace { location, scale } if location == 0.0 => Some(gamma(p + 1.0) * scale.powf(p)),
            Laplace { location, scale } => Some(abs_moment_numeric(p, location, scale, |z| {
                0.5 * (-z.abs()).exp()
            })),
            Gaussian { mean, std } | GaussianVector { mean, std } => {
                Some(abs_moment_numeric(p, mean, std, |z| {
                    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
                }))
            }
            StudentT { nu, shift } | StudentTVector { nu, shift } => {
                if p >= nu {
                    return Some(f64::INFINITY);
                }
                let c = gamma((nu + 1.0) / 2.0)
                    / ((nu * std::f64::consts::PI).sqrt() * gamma(nu / 2.0));
                Some(abs_moment_numeric(p, shift, 1.0, move |z| {
                    c * (1.0 + z * z / nu).powf(-(nu + 1.0) / 2.0)
                }))
            }
            _ => None,
        }
    }

    /// True for Student-t with `ν ≤ 4`, whose kurtosis is infinite.
    pub fn infinite_kurtosis(&self) -> bool {
        matches!(*self, Distribution::StudentT { nu, .. } | Distribution::StudentTVector { nu, .. } if nu <= 4.0)
    }

    /// `E[Y | x]` for labeled distributions.
    pub fn regression_function(&self, x: &[f64]) -> Option<f64> {
        match *self {
            Distribution::ClassifyStep { gamma, .. } => Some(step_eta(x[0], gamma)),
            Distribution::RegressSine { .. } => {
                Some((2.0 * std::f64::consts::PI * x[0]).sin() / 2.0)
            }
            _ => None,
        }
    }

    /// Label bound `T` for labeled distributions.
    pub fn label_bound(&self) -> Option<f64> {
        match *self {
            Distribution::ClassifyStep { .. } => Some(1.0),
            Distribution::RegressSine { noise } => Some(0.5 + noise),
            _ => None,
        }
    }

    fn draw_scalar(&self, rng: &mut StreamRng) -> f64 {
        use Distribution::*;
        match *self {
            Uniform { low, high } => rng.random_range(low..=high),
            Constant { value, .. } => value,
            Gaussian { mean, std } => rng.sample(Normal::new(mean, std).expect("validated")),
            Laplace { location, scale } => {
                location + LaplaceScale::new(scale).expect("validated").sample(rng)
            }
            StudentT { nu, shift } => shift + rng.sample(TDist::new(nu).expect("validated")),
            _ => unreachable!("not a scalar distribution"),
        }
    }

    fn draw_vector(&self, rng: &mut StreamRng, out: &mut [f64]) {
        use Distribution::*;
        let d = out.len();
        match self {
            Cube { radius } => out
                .iter_mut()
                .for_each(|o| *o = rng.random_range(-radius..=*radius)),
            Sphere { radius } => {
                gaussian_direction(rng, out);
                out.iter_mut().for_each(|o| *o *= radius);
            }
            Ball { radius, center } => {
                gaussian_direction(rng, out);
                let c = center.as_deref().unwrap_or(&[]);
                let r = (radius - norm(c)) * rng.random::<f64>().powf(1.0 / d as f64);
                for (j, o) in out.iter_mut().enumerate() {
                    *o = c.get(j).copied().unwrap_or(0.0) + r * *o;
                }
                // Guards rounding at the boundary.
                let n = norm(out);
                if n > *radius {
                    out.iter_mut().for_each(|o| *o *= radius / n);
                }
            }
            ConstantVector { value, .. } => out.copy_from_slice(value),
            GaussianVector { mean, std } => {
                let g = Normal::new(*mean, *std).expect("validated");
                out.iter_mut().for_each(|o| *o = rng.sample(g));
            }
            StudentTVector { nu, shift } => {
                let t = TDist::new(*nu).expect("validated");
                out.iter_mut().for_each(|o| *o = shift + rng.sample(t));
            }
            Categorical { probs } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = probs.len() - 1;
                for (j, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = j;
                        break;
                    }
                }
                out[pick] = 1.0;
            }
            _ => unreachable!("not a vector distribution"),
        }
    }

    fn draw_labeled(&self, rng: &mut StreamRng, x: &mut [f64]) -> f64 {
        x.iter_mut().for_each(|v| *v = rng.random::<f64>());
        match *self {
            Distribution::ClassifyStep { gamma, .. } => {
                let eta = step_eta(x[0], gamma);
                if rng.random::<f64>() < 0.5 * (1.0 + eta) {
                    1.0
                } else {
                    -1.0
                }
            }
            Distribution::RegressSine { noise } => {
                let eta = (2.0 * std::f64::consts::PI * x[0]).sin() / 2.0;
                eta + if noise > 0.0 {
                    rng.random_range(-noise..=noise)
                } else {
                    0.0
                }
            }
            _ => unreachable!("not a labeled distribution"),
        }
    }
}

fn step_eta(x1: f64, gamma: f64) -> f64 {
    let t = x1 - 0.5;
    let mag = (4.0 * t.abs()).powf(1.0 / gamma).min(1.0);
    if t < 0.0 {
        -mag
    } else {
        mag
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn gaussian_direction(rng: &mut StreamRng, out: &mut [f64]) {
    loop {
        out.iter_mut().for_each(|o| *o = rng.sample(StandardNormal));
        let n = norm(out);
        if n > 1e-12 {
            out.iter_mut().for_each(|o| *o /= n);
            return;
        }
    }
}

/// `E|loc + s Z|^p` for a standard density `f` of `Z`, by Simpson's rule
/// under `z = sinh(t)`.
fn abs_moment_numeric(p: f64, loc: f64, s: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi, steps) = (-60.0f64, 60.0f64, 240_000usize);
    let h = (hi - lo) / steps as f64;
    let g = |t: f64| {
        let z = t.sinh();
        (loc + s * z).abs().powf(p) * f(z) * t.cosh()
    };
    let mut total = g(lo) + g(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        total += w * g(lo + i as f64 * h);
    }
    total * h / 3.0
}

/// Scalar users drawn lazily from a distribution.
#[derive(Debug, Clone)]
pub struct LazyScalarUsers {
    pub dist: Distribution,
    pub n: usize,
    pub m: usize,
    pub stream: RngStream,
}

impl ScalarUsers for LazyScalarUsers {
    fn num_users(&self) -> usize {
        self.n
    }
    fn samples_per_user(&self) -> usize {
        self.m
    }
    fn user_samples(&self, user: usize, buf: &mut Vec<f64>) {
        let mut rng = self.stream.child(user as u64).rng();
        buf.clear();
        buf.extend((0..self.m).map(|_| self.dist.draw_scalar(&mut rng)));
    }
}

/// Vector users drawn lazily from a distribution.
#[derive(Debug, Clone)]
pub struct LazyVectorUsers {
    pub dist: Distribution,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub support: Support,
    pub stream: RngStream,
}

impl VectorUsers for LazyVectorUsers {
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
        let mut rng = self.stream.child(user as u64).rng();
        buf.clear();
        buf.resize(self.m * self.d, 0.0);
        for row in buf.chunks_exact_mut(self.d) {
            self.dist.draw_vector(&mut rng, row);
        }
    }
}

/// Labeled users drawn lazily from a distribution.
#[derive(Debug, Clone)]
pub struct LazyLabeledUsers {
    pub dist: Distribution,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub stream: RngStream,
}

impl LabeledUsers for LazyLabeledUsers {
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
        let mut rng = self.stream.child(user as u64).rng();
        features.clear();
        features.resize(self.m * self.d, 0.0);
        labels.clear();
        for x in features.chunks_exact_mut(self.d) {
            labels.push(self.dist.draw_labeled(&mut rng, x));
        }
    }
}

/// A generated dataset of the distribution's kind.
#[derive(Debug, Clone)]
pub enum Generated {
    Scalar(LazyScalarUsers),
    Vector(LazyVectorUsers),
    Labeled(LazyLabeledUsers),
}

/// Dataset of `n` users with `m` samples in dimension `d` (ignored for scalars).
///
/// Unbounded vector distributions report an ℓ∞ support of infinite radius
/// replaced by `f64::MAX`; only the heavy-tailed paths accept them.
pub fn generate(
    dist: &Distribution,
    n: usize,
    m: usize,
    d: usize,
    stream: &RngStream,
) -> Result<Generated> {
    if m == 0 {
        return Err(Error::Spec("m must be positive".into()));
    }
    dist.validate(d)?;
    Ok(match dist.kind() {
        DataKind::Scalar => Generated::Scalar(LazyScalarUsers {
            dist: dist.clone(),
            n,
            m,
            stream: stream.clone(),
        }),
        DataKind::Vector => {
            if d == 0 {
                return Err(Error::Spec("d must be positive".into()));
            }
            let support = dist.support().unwrap_or(Support {
                kind: SupportKind::Linf,
                radius: f64::MAX,
            });
            Generated::Vector(LazyVectorUsers {
                dist: dist.clone(),
                n,
                m,
                d,
                support,
                stream: stream.clone(),
            })
        }
        DataKind::Labeled => Generated::Labeled(LazyLabeledUsers {
            dist: dist.clone(),
            n,
            m,
            d: d.max(1),
            stream: stream.clone(),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_small_dataset() {
        let Generated::Scalar(data) = generate(
            &Distribution::Uniform {
                low: -1.0,
                high: 1.0,
            },
            2,
            3,
            1,
            &RngStream::new(1),
        )
        .unwrap() else {
            panic!()
        };
        let mut all = Vec::new();
        let mut buf = Vec::new();
        for i in 0..2 {
            data.user_samples(i, &mut buf);
            all.extend_from_slice(&buf);
        }
        assert_eq!(all.len(), 6);
        assert!(all.iter().all(|x| (-1.0..=1.0).contains(x)));
        assert_eq!(data.dist.scalar_mean(), Some(0.0));
    }

    #[test]
    fn lazy_users_are_reproducible() {
        let dist = Distribution::StudentT {
            nu: 3.0,
            shift: 1.0,
        };
        let Generated::Scalar(data) = generate(&dist, 10, 5, 1, &RngStream::new(9)).unwrap() else {
            panic!()
        };
        let (mut a, mut b) = (Vec::new(), Vec::new());
        data.user_samples(4, &mut a);
        data.user_samples(4, &mut b);
        assert_eq!(a, b);
        assert_eq!(data.sample(4, 2), a[2]);
    }

    #[test]
    fn moments_closed_forms() {
        let u = Distribution::Uniform {
            low: -1.0,
            high: 1.0,
        };
        assert!((u.abs_moment(2.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let g = Distribution::Gaussian {
            mean: 0.0,
            std: 1.0,
        };
        assert!((g.abs_moment(2.0).unwrap() - 1.0).abs() < 1e-8);
        assert!((g.abs_moment(4.0).unwrap() - 3.0).abs() < 1e-7);
        let l = Distribution::Laplace {
            location: 0.0,
            scale: 1.0,
        };
        assert!((l.abs_moment(2.0).unwrap() - 2.0).abs() < 1e-12);
        let shifted = Distribution::Laplace {
            location: 1e-9,
            scale: 1.0,
        };
        assert!((shifted.abs_moment(2.0).unwrap() - 2.0).abs() < 1e-6);
        // t(5): E X² = ν/(ν−2).
        let t = Distribution::StudentT {
            nu: 5.0,
            shift: 0.0,
        };
        assert!((t.abs_moment(2.0).unwrap() - 5.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn student_t_moment_oracle() {
        let dist = Distribution::StudentT {
            nu: 3.0,
            shift: 1.0,
        };
        assert!(dist.infinite_kurtosis());
        assert_eq!(dist.abs_moment(3.0), Some(f64::INFINITY));
        let exact = dist.abs_moment(2.0).unwrap();
        // E(1 + T)² = 1 + ν/(ν−2) = 4.
        assert!((exact - 4.0).abs() < 1e-4, "{exact}");
        let Generated::Scalar(data) = generate(&dist, 2000, 100, 1, &RngStream::new(3)).unwrap()
        else {
            panic!()
        };
        let mut buf = Vec::new();
        let mut acc = 0.0;
        for i in 0..2000 {
            data.user_samples(i, &mut buf);
            acc += buf.iter().map(|x| x.abs().powf(1.5)).sum::<f64>();
        }
        let mc = acc / 200_000.0;
        let oracle = dist.abs_moment(1.5).unwrap();
        assert!((mc / oracle - 1.0).abs() < 0.03, "{mc} vs {oracle}");
    }

    #[test]
    fn classify_step_binomial_bands() {
        let dist = Distribution::ClassifyStep {
            beta: 1.0,
            gamma: 1.0,
        };
        let Generated::Labeled(data) = generate(&dist, 1000, 100, 1, &RngStream::new(5)).unwrap()
        else {
            panic!()
        };
        let cells = 50;
        let mut sum = vec![0.0; cells];
        let mut cnt = vec![0.0; cells];
        let mut eta = vec![0.0; cells];
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for i in 0..1000 {
            data.user_samples(i, &mut xs, &mut ys);
            for (x, y) in xs.iter().zip(&ys) {
                let c = ((x * cells as f64) as usize).min(cells - 1);
                sum[c] += y;
                cnt[c] += 1.0;
                eta[c] += dist.regression_function(&[*x]).unwrap();
            }
        }
        for c in 0..cells {
            let mean_eta = eta[c] / cnt[c];
            let sd = ((1.0 - mean_eta * mean_eta) / cnt[c]).sqrt();
            assert!(
                (sum[c] / cnt[c] - mean_eta).abs() <= 3.0 * sd + 1e-3,
                "cell {c}"
            );
        }
    }

    #[test]
    fn vector_generators_respect_support() {
        for dist in [
            Distribution::Sphere { radius: 1.0 },
            Distribution::Ball {
                radius: 1.0,
                center: Some(vec![0.3, -0.2]),
            },
            Distribution::Cube { radius: 0.5 },
            Distribution::Categorical {
                probs: vec![0.5, 0.5],
            },
        ] {
            let Generated::Vector(data) = generate(&dist, 20, 50, 2, &RngStream::new(1)).unwrap()
            else {
                panic!()
            };
            let mut buf = Vec::new();
            for i in 0..20 {
                data.user_samples(i, &mut buf);
                assert!(
                    buf.chunks_exact(2).all(|x| data.support.contains(x)),
                    "{dist:?}"
                );
            }
        }
    }

    #[test]
    fn validation_errors() {
        assert!(Distribution::Uniform {
            low: 1.0,
            high: 0.0
        }
        .validate(1)
        .is_err());
        assert!(Distribution::Categorical {
            probs: vec![0.5, 0.6]
        }
        .validate(2)
        .is_err());
        assert!(Distribution::ConstantVector {
            value: vec![0.1],
            radius: 1.0
        }
        .validate(2)
        .is_err());
        let parsed: std::result::Result<Distribution, _> =
            serde_json::from_str(r#"{"name":"zipf"}"#);
        assert!(parsed.is_err());
        let parsed: Distribution = serde_json::from_str(r#"{"name":"uniform"}"#).unwrap();
        assert_eq!(
            parsed,
            Distribution::Uniform {
                low: -1.0,
                high: 1.0
            }
        );
    }
}
