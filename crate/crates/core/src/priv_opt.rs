//! Stochastic optimization under user-level ε-LDP.
//!
//! Users are split into `t₀` disjoint groups. Step `t` asks group `t` for the
//! gradients of its samples at the current iterate, estimates their mean with
//! the Kashin-frame estimator at full budget `ε`, and takes a gradient step.
//! Every user is touched by exactly one step.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Support, SupportKind, VectorUsers};
use crate::error::{Error, Result};
use crate::mean_multi::{mean_l2, Regime};
use crate::noise::RngStream;
use crate::transforms::{build_kashin_frame, KashinConfig, KashinFrame};
use crate::warning::Warning;

const PARTITION_STREAM: u64 = 0;
const STEP_STREAM: u64 = 1;
const FRAME_STREAM: u64 = 2;

/// A smooth loss `l(x, θ)` with the constants the convergence analysis uses.
pub trait LossOracle: Sync {
    fn dim(&self) -> usize;
    fn value(&self, sample: &[f64], theta: &[f64]) -> f64;
    fn gradient(&self, sample: &[f64], theta: &[f64], out: &mut [f64]);
    /// `G`: Lipschitz constant of the gradient in `θ`.
    fn smoothness(&self) -> f64;
    /// `γ`: strong-convexity constant of the population loss.
    fn strong_convexity(&self) -> f64;
    /// `D ≥ ‖∇l(x, θ)‖₂` on the domain.
    fn gradient_bound(&self) -> f64;
    /// Radius of the Euclidean ball iterates are projected onto.
    fn domain_radius(&self) -> Option<f64> {
        None
    }
}

/// `½‖θ − x‖²` for data in the unit-scale ball of radius `data_radius` and
/// iterates in a ball of radius `domain_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticLoss {
    pub d: usize,
    pub data_radius: f64,
    pub domain_radius: f64,
}

impl LossOracle for QuadraticLoss {
    fn dim(&self) -> usize {
        self.d
    }
    fn value(&self, x: &[f64], theta: &[f64]) -> f64 {
        0.5 * theta
            .iter()
            .zip(x)
            .map(|(t, v)| (t - v).powi(2))
            .sum::<f64>()
    }
    fn gradient(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        for ((o, t), v) in out.iter_mut().zip(theta).zip(x) {
            *o = t - v;
        }
    }
    fn smoothness(&self) -> f64 {
        1.0
    }
    fn strong_convexity(&self) -> f64 {
        1.0
    }
    fn gradient_bound(&self) -> f64 {
        self.data_radius + self.domain_radius
    }
    fn domain_radius(&self) -> Option<f64> {
        Some(self.domain_radius)
    }
}

/// Huber loss of `‖θ − x‖` with threshold `bound`; gradients have norm at most `bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClippedQuadraticLoss {
    pub d: usize,
    pub bound: f64,
}

impl LossOracle for ClippedQuadraticLoss {
    fn dim(&self) -> usize {
        self.d
    }
    fn value(&self, x: &[f64], theta: &[f64]) -> f64 {
        let r = theta
            .iter()
            .zip(x)
            .map(|(t, v)| (t - v).powi(2))
            .sum::<f64>()
            .sqrt();
        if r <= self.bound {
            0.5 * r * r
        } else {
            self.bound * r - 0.5 * self.bound * self.bound
        }
    }
    fn gradient(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        let r = theta
            .iter()
            .zip(x)
            .map(|(t, v)| (t - v).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = if r <= self.bound { 1.0 } else { self.bound / r };
        for ((o, t), v) in out.iter_mut().zip(theta).zip(x) {
            *o = scale * (t - v);
        }
    }
    fn smoothness(&self) -> f64 {
        1.0
    }
    /// Holds where the residual stays below `bound`.
    fn strong_convexity(&self) -> f64 {
        1.0
    }
    fn gradient_bound(&self) -> f64 {
        self.bound
    }
}

/// Result of [`check_oracle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub probes: usize,
    /// Largest `|finite difference − gradient| / max(1, ‖gradient‖)`.
    pub max_gradient_error: f64,
    pub max_gradient_norm: f64,
    pub lipschitz_estimate: f64,
    pub violations: Vec<String>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const FD_TOLERANCE: f64 = 1e-5;

/// Checks gradient correctness by central differences, the gradient norm
/// bound, and the smoothness constant on `probes` of `(sample, θ)`.
///
/// Returns [`Error::Oracle`] naming the first violated assumption.
pub fn check_oracle<O: LossOracle + ?Sized>(
    oracle: &O,
    probes: &[(Vec<f64>, Vec<f64>)],
) -> Result<OracleReport> {
    if probes.is_empty() {
        return Err(Error::param("probes", "need at least one probe"));
    }
    let d = oracle.dim();
    let mut g = vec![0.0; d];
    let mut g2 = vec![0.0; d];
    let mut report = OracleReport {
        probes: probes.len(),
        max_gradient_error: 0.0,
        max_gradient_norm: 0.0,
        lipschitz_estimate: 0.0,
        violations: Vec::new(),
    };
    for (idx, (x, theta)) in probes.iter().enumerate() {
        if x.len() != d || theta.len() != d {
            return Err(Error::Dimension {
                expected: d,
                actual: if x.len() != d { x.len() } else { theta.len() },
            });
        }
        oracle.gradient(x, theta, &mut g);
        let norm = l2(&g);
        report.max_gradient_norm = report.max_gradient_norm.max(norm);

        let mut t = theta.clone();
        let mut err: f64 = 0.0;
        for k in 0..d {
            let step = 1e-5 * (1.0 + theta[k].abs());
            t[k] = theta[k] + step;
            let up = oracle.value(x, &t);
            t[k] = theta[k] - step;
            let down = oracle.value(x, &t);
            t[k] = theta[k];
            err = err.max(((up - down) / (2.0 * step) - g[k]).abs());
        }
        report.max_gradient_error = report.max_gradient_error.max(err / norm.max(1.0));

        // Smoothness along a deterministic direction per probe.
        let delta = 1e-3;
        for (k, tk) in t.iter_mut().enumerate() {
            *tk += delta * if (idx + k) % 2 == 0 { 1.0 } else { -1.0 } / (d as f64).sqrt();
        }
        oracle.gradient(x, &t, &mut g2);
        let moved = g
            .iter()
            .zip(&g2)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        report.lipschitz_estimate = report.lipschitz_estimate.max(moved / delta);
    }
    if report.max_gradient_error > FD_TOLERANCE {
        report.violations.push(format!(
            "gradient: finite-difference error {:.3e} above {FD_TOLERANCE:e}",
            report.max_gradient_error
        ));
    }
    if report.max_gradient_norm > oracle.gradient_bound() * (1.0 + 1e-12) {
        report.violations.push(format!(
            "gradient bound: norm {:.6} above D = {}",
            report.max_gradient_norm,
            oracle.gradient_bound()
        ));
    }
    if report.lipschitz_estimate > oracle.smoothness() * (1.0 + 1e-3) {
        report.violations.push(format!(
            "smoothness: Lipschitz estimate {:.6} above G = {}",
            report.lipschitz_estimate,
            oracle.smoothness()
        ));
    }
    if let Some(v) = report.violations.first() {
        let assumption = match v.split(':').next() {
            Some("gradient") => "gradient correctness",
            Some("gradient bound") => "gradient norm bound",
            _ => "smoothness",
        };
        return Err(Error::Oracle {
            assumption,
            detail: v.clone(),
        });
    }
    Ok(report)
}

/// Step size, step count, starting point and budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub eta: f64,
    pub t0: usize,
    pub theta0: Vec<f64>,
    pub epsilon: f64,
}

/// Default `t₀ = ⌈4 ln n⌉`.
pub fn default_steps(n: usize) -> usize {
    (4.0 * (n.max(2) as f64).ln()).ceil() as usize
}

impl OptimizerConfig {
    /// `η = 1/G`, `t₀ = ⌈4 ln n⌉`, `θ₀ = 0`.
    pub fn new<O: LossOracle + ?Sized>(oracle: &O, n: usize, epsilon: f64) -> Self {
        Self {
            eta: 1.0 / oracle.smoothness(),
            t0: default_steps(n),
            theta0: vec![0.0; oracle.dim()],
            epsilon,
        }
    }
}

/// One optimizer step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub users: usize,
    pub regime: Regime,
    /// Private gradient estimate `g_t`.
    pub gradient: Vec<f64>,
    /// Iterate after the step.
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOutput {
    pub theta: Vec<f64>,
    pub trajectory: Vec<StepRecord>,
    pub k_cert: f64,
    pub warnings: Vec<Warning>,
}

/// Disjoint, near-equal user groups from a seeded shuffle.
pub fn partition_users(n: usize, groups: usize, stream: &RngStream) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream.rng());
    let groups = groups.max(1);
    let mut out: Vec<Vec<usize>> = (0..groups)
        .map(|_| Vec::with_capacity(n / groups + 1))
        .collect();
    for (i, u) in order.into_iter().enumerate() {
        out[i % groups].push(u);
    }
    out
}

/// Builds a frame for the oracle's dimension from the run's stream and optimizes.
pub fn optimize<D, O>(
    data: &D,
    oracle: &O,
    config: &OptimizerConfig,
    stream: &RngStream,
) -> Result<OptimizeOutput>
where
    D: VectorUsers + ?Sized,
    O: LossOracle + ?Sized,
{
    let frame = build_kashin_frame(
        oracle.dim(),
        &stream.child(FRAME_STREAM),
        KashinConfig::default(),
    )?;
    optimize_with_frame(data, oracle, config, &frame, stream)
}

pub fn optimize_with_frame<D, O>(
    data: &D,
    oracle: &O,
    config: &OptimizerConfig,
    frame: &KashinFrame,
    stream: &RngStream,
) -> Result<OptimizeOutput>
where
    D: VectorUsers + ?Sized,
    O: LossOracle + ?Sized,
{
    let d = oracle.dim();
    if data.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            actual: data.dim(),
        });
    }
    if config.theta0.len() != d {
        return Err(Error::Dimension {
            expected: d,
            actual: config.theta0.len(),
        });
    }
    let g = oracle.smoothness();
    if !(config.eta > 0.0 && config.eta <= (1.0 / g) * (1.0 + 1e-12)) {
        return Err(Error::param(
            "eta",
            format!(
                "step size must lie in (0, 1/G = {}], got {}",
                1.0 / g,
                config.eta
            ),
        ));
    }
    let n = data.num_users();
    if config.t0 == 0 || n < 4 * config.t0 {
        return Err(Error::InsufficientUsers {
            regime: "optimize".into(),
            groups: config.t0,
            min_per_group: 4,
            required: 4 * config.t0.max(1),
            available: n,
        });
    }
    let mut warnings = Vec::new();
    let ln_n = (n as f64).ln();
    if (config.t0 as f64) < 2.0 * ln_n || (config.t0 as f64) > 6.0 * ln_n {
        warnings.push(Warning::new(
            "optimize: 2 ln n <= t0 <= 6 ln n",
            config.t0 as f64,
            2.0 * ln_n,
        ));
    }

    let groups = partition_users(n, config.t0, &stream.child(PARTITION_STREAM));
    let mut theta = config.theta0.clone();
    let mut trajectory = Vec::with_capacity(config.t0);
    for (t, users) in groups.iter().enumerate() {
        let view = GradientUsers {
            data,
            oracle,
            theta: &theta,
            users,
            support: Support::new(SupportKind::L2, oracle.gradient_bound())?,
        };
        let out = mean_l2(
            &view,
            config.epsilon,
            frame,
            &stream.children(&[STEP_STREAM, t as u64]),
        )?;
        for w in out.warnings {
            if !warnings.iter().any(|x: &Warning| x.check == w.check) {
                warnings.push(w);
            }
        }
        for (th, gr) in theta.iter_mut().zip(&out.estimate) {
            *th -= config.eta * gr;
        }
        if let Some(r) = oracle.domain_radius() {
            let norm = l2(&theta);
            if norm > r {
                theta.iter_mut().for_each(|v| *v *= r / norm);
            }
        }
        trajectory.push(StepRecord {
            step: t,
            users: users.len(),
            regime: out.regime,
            gradient: out.estimate,
            theta: theta.clone(),
        });
    }
    Ok(OptimizeOutput {
        theta,
        trajectory,
        k_cert: frame.k_cert(),
        warnings,
    })
}

/// Per-sample gradients of a user subset, seen as vector data.
struct GradientUsers<'a, D: ?Sized, O: ?Sized> {
    data: &'a D,
    oracle: &'a O,
    theta: &'a [f64],
    users: &'a [usize],
    support: Support,
}

impl<D: VectorUsers + ?Sized, O: LossOracle + ?Sized> VectorUsers for GradientUsers<'_, D, O> {
    fn num_users(&self) -> usize {
        self.users.len()
    }
    fn samples_per_user(&self) -> usize {
        self.data.samples_per_user()
    }
    fn dim(&self) -> usize {
        self.oracle.dim()
    }
    fn support(&self) -> Support {
        self.support
    }
    fn user_samples(&self, user: usize, buf: &mut Vec<f64>) {
        let d = self.oracle.dim();
        let mut raw = Vec::new();
        self.data.user_samples(self.users[user], &mut raw);
        buf.clear();
        buf.resize(raw.len(), 0.0);
        for (x, g) in raw.chunks_exact(d).zip(buf.chunks_exact_mut(d)) {
            self.oracle.gradient(x, self.theta, g);
        }
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Random probes `(x, θ)` with `x` uniform in a ball of radius `radius`.
pub fn random_probes(
    d: usize,
    count: usize,
    radius: f64,
    stream: &RngStream,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = stream.rng();
    let point = |rng: &mut crate::noise::StreamRng| -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-radius..=radius)).collect();
            if l2(&v) <= radius {
                return v;
            }
        }
    };
    (0..count)
        .map(|_| (point(&mut rng), point(&mut rng)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::UserDatasetVector;

    struct Offset(QuadraticLoss);

    impl LossOracle for Offset {
        fn dim(&self) -> usize {
            self.0.d
        }
        fn value(&self, x: &[f64], t: &[f64]) -> f64 {
            self.0.value(x, t)
        }
        fn gradient(&self, x: &[f64], t: &[f64], out: &mut [f64]) {
            self.0.gradient(x, t, out);
            out.iter_mut().for_each(|o| *o += 0.1);
        }
        fn smoothness(&self) -> f64 {
            1.0
        }
        fn strong_convexity(&self) -> f64 {
            1.0
        }
        fn gradient_bound(&self) -> f64 {
            10.0
        }
    }

    fn quad() -> QuadraticLoss {
        QuadraticLoss {
            d: 2,
            data_radius: 1.0,
            domain_radius: 1.0,
        }
    }

    #[test]
    fn quadratic_passes_finite_differences() {
        let probes = random_probes(2, 200, 1.0, &RngStream::new(1));
        let report = check_oracle(&quad(), &probes).unwrap();
        assert!(report.max_gradient_error < 1e-6);
        assert!(report.lipschitz_estimate <= 1.0 + 1e-9);
    }

    #[test]
    fn clipped_quadratic_norm_bound() {
        let loss = ClippedQuadraticLoss { d: 3, bound: 1.0 };
        let probes = random_probes(3, 10_000, 2.0, &RngStream::new(2));
        let report = check_oracle(&loss, &probes).unwrap();
        assert!(report.max_gradient_norm <= 1.0 + 1e-12);
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let probes = random_probes(2, 20, 1.0, &RngStream::new(3));
        match check_oracle(&Offset(quad()), &probes) {
            Err(Error::Oracle { assumption, .. }) => assert_eq!(assumption, "gradient correctness"),
            other => panic!("{other:?}"),
        }
        assert!(check_oracle(&quad(), &[]).is_err());
    }

    #[test]
    fn partition_is_one_touch() {
        let groups = partition_users(1003, 7, &RngStream::new(4));
        let mut seen = vec![0; 1003];
        for g in &groups {
            for &u in g {
                seen[u] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn config_validation() {
        let data = UserDatasetVector::new(
            40,
            2,
            2,
            Support::new(SupportKind::L2, 1.0).unwrap(),
            vec![0.0; 160],
        )
        .unwrap();
        let mut cfg = OptimizerConfig::new(&quad(), 40, 1.0);
        cfg.eta = 2.0;
        assert!(matches!(
            optimize(&data, &quad(), &cfg, &RngStream::new(0)),
            Err(Error::Parameter { name: "eta", .. })
        ));
        cfg.eta = 1.0;
        cfg.t0 = 11;
        assert!(matches!(
            optimize(&data, &quad(), &cfg, &RngStream::new(0)),
            Err(Error::InsufficientUsers { .. })
        ));
    }

    #[test]
    fn vanishing_noise_converges_to_mean() {
        let n = 2000;
        let m = 20;
        let target = [0.3, -0.2];
        let mut vals = Vec::with_capacity(n * m * 2);
        for i in 0..n * m {
            let s = if i % 2 == 0 { 0.1 } else { -0.1 };
            vals.extend_from_slice(&[target[0] + s, target[1] - s]);
        }
        let data =
            UserDatasetVector::new(n, m, 2, Support::new(SupportKind::L2, 1.0).unwrap(), vals)
                .unwrap();
        let cfg = OptimizerConfig::new(&quad(), n, 1e6);
        let out = optimize(&data, &quad(), &cfg, &RngStream::new(5)).unwrap();
        let err = ((out.theta[0] - 0.3).powi(2) + (out.theta[1] + 0.2).powi(2)).sqrt();
        assert!(err <= 0.02, "{err} {:?}", out.theta);
        assert_eq!(out.trajectory.len(), cfg.t0);
        assert_eq!(out.trajectory.iter().map(|s| s.users).sum::<usize>(), n);
    }
}
