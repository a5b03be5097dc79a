use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dist::{generate, Distribution, Generated, LazyLabeledUsers};
use super::spec::{ExperimentSpec, GridPoint, LossName, Task};
use crate::baselines::{baseline_mean, baseline_mean_clipped};
use crate::data::{Support, SupportKind};
use crate::error::{Error, Result};
use crate::mean1d::{mean1d_estimate, mean1d_estimate_clipped, HeavyTail, Mean1dParams};
use crate::mean_multi::{
    mean_heavy_multi, mean_l1_discrete, mean_l2, mean_linf, HeavyMode, MultiOutput, Regime,
};
use crate::noise::RngStream;
use crate::nonparam::{
    classification_bin_width, regression_bin_width, train_classifier, train_regressor, GridModel,
    RegressionOptions,
};
use crate::priv_opt::{
    optimize_with_frame, ClippedQuadraticLoss, LossOracle, OptimizerConfig, QuadraticLoss,
};
use crate::transforms::{build_kashin_frame, KashinConfig, KashinFrame};
use crate::warning::Warning;

pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "ULDP_WORKERS";

/// Mechanism diagnostics attached to a trial.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smallest_group: Option<usize>,
    /// Stage-1 bin count of the scalar estimator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_cert: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clipped_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    /// `‖θ_t − θ*‖` after every optimizer step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<f64>>,
}

/// One row of sweep output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub schema_version: u32,
    pub task: Task,
    pub grid_index: usize,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub epsilon: f64,
    pub trial: usize,
    pub seed: u64,
    pub metric: String,
    pub value: Option<f64>,
    pub error: Option<String>,
    pub wall_ms: f64,
    pub warnings: Vec<Warning>,
    pub diagnostics: Diagnostics,
}

impl TrialRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none() && self.value.is_some()
    }
}

/// Stream of trial `trial` at grid point `grid_index`. Child 0 draws the
/// data, child 1 the mechanism noise, child 2 the evaluation points.
pub fn trial_stream(seed: u64, grid_index: usize, trial: usize) -> RngStream {
    RngStream::derive(seed, &[grid_index as u64, trial as u64])
}

/// Stream of the Kashin frame shared by every trial in dimension `d`.
pub fn frame_stream(seed: u64, d: usize) -> RngStream {
    RngStream::derive(seed, &[u64::MAX, d as u64])
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
}

/// Runs every `(grid point, trial)` of a validated spec with the worker count
/// from the environment. Records are sorted by `(grid_index, trial)`.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<TrialRecord>> {
    run_sweep_with_workers(spec, workers_from_env())
}

pub fn run_sweep_with_workers(
    spec: &ExperimentSpec,
    workers: Option<usize>,
) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Spec(format!("cannot start {w} workers: {e}")))?
            .install(|| sweep(spec)),
        None => sweep(spec),
    }
}

fn needs_frame(spec: &ExperimentSpec) -> bool {
    match spec.task {
        Task::Optimize => true,
        Task::Mean => path_support(spec) == Some(SupportKind::L2),
        Task::Heavy => {
            spec.options.heavy_mode == HeavyMode::L2norm
                && spec.distribution.kind() != super::DataKind::Scalar
        }
        _ => false,
    }
}

fn path_support(spec: &ExperimentSpec) -> Option<SupportKind> {
    spec.options
        .support
        .or(spec.distribution.support().map(|s| s.kind))
}

fn sweep(spec: &ExperimentSpec) -> Result<Vec<TrialRecord>> {
    let points = spec.grid.points();
    let mut frames: BTreeMap<usize, std::result::Result<KashinFrame, String>> = BTreeMap::new();
    if needs_frame(spec) {
        let dims: std::collections::BTreeSet<usize> = points.iter().map(|p| p.d).collect();
        let built: Vec<_> = dims
            .into_par_iter()
            .map(|d| {
                let frame =
                    build_kashin_frame(d, &frame_stream(spec.seed, d), KashinConfig::default());
                (d, frame.map_err(|e| e.to_string()))
            })
            .collect();
        frames.extend(built);
    }
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|g| (0..spec.trials).map(move |t| (g, t)))
        .collect();
    let mut records: Vec<TrialRecord> = jobs
        .into_par_iter()
        .map(|(g, t)| {
            let frame = frames.get(&points[g].d);
            run_trial(spec, g, &points[g], t, frame)
        })
        .collect();
    records.sort_by_key(|r| (r.grid_index, r.trial));
    Ok(records)
}

/// One trial; failures become rows with `error` set.
pub fn run_trial(
    spec: &ExperimentSpec,
    grid_index: usize,
    point: &GridPoint,
    trial: usize,
    frame: Option<&std::result::Result<KashinFrame, String>>,
) -> TrialRecord {
    let start = Instant::now();
    let stream = trial_stream(spec.seed, grid_index, trial);
    let outcome = match frame {
        Some(Err(e)) => Err(Error::Spec(format!("no usable Kashin frame: {e}"))),
        Some(Ok(f)) => evaluate(spec, point, &stream, Some(f)),
        None => evaluate(spec, point, &stream, None),
    };
    let (value, error, warnings, diagnostics) = match outcome {
        Ok(o) => (Some(o.value), None, o.warnings, o.diagnostics),
        Err(e) => (
            None,
            Some(e.to_string()),
            Vec::new(),
            Diagnostics::default(),
        ),
    };
    TrialRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        task: spec.task,
        grid_index,
        n: point.n,
        m: point.m,
        d: point.d,
        epsilon: point.epsilon,
        trial,
        seed: spec.seed,
        metric: spec.task.metric().to_string(),
        value,
        error,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        warnings,
        diagnostics,
    }
}

struct Outcome {
    value: f64,
    warnings: Vec<Warning>,
    diagnostics: Diagnostics,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn multi_outcome(out: MultiOutput, truth: &[f64]) -> Outcome {
    Outcome {
        value: squared_distance(&out.estimate, truth),
        warnings: out.warnings,
        diagnostics: Diagnostics {
            regime: Some(out.regime),
            groups: Some(out.groups),
            smallest_group: Some(out.smallest_group),
            k_cert: out.k_cert,
            clipped_fraction: out.clipped_fraction,
            ..Diagnostics::default()
        },
    }
}

fn evaluate(
    spec: &ExperimentSpec,
    p: &GridPoint,
    stream: &RngStream,
    frame: Option<&KashinFrame>,
) -> Result<Outcome> {
    let dist = &spec.distribution;
    let o = &spec.options;
    let data = generate(dist, p.n, p.m, p.d, &stream.child(0))?;
    let mech = stream.child(1);
    let missing = |what: &str| Error::Spec(format!("{what} is not known for {dist:?}"));
    match (spec.task, data) {
        (Task::Mean1d, Generated::Scalar(data)) => {
            let mu = dist.scalar_mean().ok_or_else(|| missing("the mean"))?;
            let radius = scalar_radius(spec)?;
            let params = Mean1dParams::new(radius, p.epsilon, p.n, p.m)?;
            let out = if dist.support().is_some() {
                mean1d_estimate(&data, &params, &mech)?
            } else {
                mean1d_estimate_clipped(&data, &params, &mech)?
            };
            Ok(Outcome {
                value: (out.estimate - mu).powi(2),
                warnings: out.warnings,
                diagnostics: Diagnostics {
                    bins: Some(params.bins()),
                    interval: Some([out.interval.left, out.interval.right]),
                    ..Diagnostics::default()
                },
            })
        }
        (Task::Baseline, Generated::Scalar(data)) => {
            let mu = dist.scalar_mean().ok_or_else(|| missing("the mean"))?;
            let radius = baseline_radius(spec, p)?;
            let est = if dist.support().is_some() && o.radius.is_none() {
                baseline_mean(&data, radius, p.epsilon, o.baseline, &mech)?
            } else {
                baseline_mean_clipped(&data, radius, p.epsilon, o.baseline, &mech)?
            };
            Ok(Outcome {
                value: (est - mu).powi(2),
                warnings: Vec::new(),
                diagnostics: Diagnostics {
                    clip_radius: Some(radius),
                    ..Diagnostics::default()
                },
            })
        }
        (Task::Heavy, Generated::Scalar(data)) => {
            let mu = dist.scalar_mean().ok_or_else(|| missing("the mean"))?;
            let tail = heavy_tail(spec)?;
            let params = Mean1dParams::heavy_tailed(&tail, p.epsilon, p.n, p.m)?;
            let out = mean1d_estimate_clipped(&data, &params, &mech)?;
            Ok(Outcome {
                value: (out.estimate - mu).powi(2),
                warnings: out.warnings,
                diagnostics: Diagnostics {
                    bins: Some(params.bins()),
                    interval: Some([out.interval.left, out.interval.right]),
                    clip_radius: Some(params.radius()),
                    ..Diagnostics::default()
                },
            })
        }
        (Task::Heavy, Generated::Vector(data)) => {
            let mu = dist.vector_mean(p.d).ok_or_else(|| missing("the mean"))?;
            let tail = heavy_tail(spec)?;
            let out = mean_heavy_multi(&data, p.epsilon, &tail, o.heavy_mode, &mech, frame)?;
            Ok(multi_outcome(out, &mu))
        }
        (Task::Mean, Generated::Vector(mut data)) => {
            let mu = dist.vector_mean(p.d).ok_or_else(|| missing("the mean"))?;
            if let Some(r) = o.radius {
                data.support = Support::new(data.support.kind, r)?;
            }
            match path_support(spec).unwrap_or(SupportKind::Linf) {
                SupportKind::Linf => Ok(multi_outcome(mean_linf(&data, p.epsilon, &mech)?, &mu)),
                SupportKind::L2 => {
                    let frame = frame
                        .ok_or_else(|| Error::Spec("no Kashin frame for the l2 path".into()))?;
                    Ok(multi_outcome(mean_l2(&data, p.epsilon, frame, &mech)?, &mu))
                }
                SupportKind::L1 => {
                    let out = mean_l1_discrete(&data, p.epsilon, &mech)?;
                    let mut outcome = multi_outcome(out.run, &mu);
                    // Error of the raw estimate, before projection.
                    outcome.value = squared_distance(&out.unprojected[..p.d], &mu);
                    Ok(outcome)
                }
            }
        }
        (Task::Optimize, Generated::Vector(data)) => {
            let theta_star = dist
                .vector_mean(p.d)
                .ok_or_else(|| missing("the minimizer"))?;
            let frame =
                frame.ok_or_else(|| Error::Spec("no Kashin frame for the optimizer".into()))?;
            let support = data.support;
            let data_radius = match support.kind {
                SupportKind::Linf => support.radius * (p.d as f64).sqrt(),
                _ => support.radius,
            };
            let oracle: Box<dyn LossOracle> = match o.loss {
                LossName::Quadratic => Box::new(QuadraticLoss {
                    d: p.d,
                    data_radius: o.radius.unwrap_or(data_radius),
                    domain_radius: o.radius.unwrap_or(data_radius),
                }),
                LossName::ClippedQuadratic => Box::new(ClippedQuadraticLoss {
                    d: p.d,
                    bound: o.clip_radius.expect("validated"),
                }),
            };
            let mut config = OptimizerConfig::new(oracle.as_ref(), p.n, p.epsilon);
            if let Some(eta) = o.eta {
                config.eta = eta;
            }
            if let Some(t0) = o.t0 {
                config.t0 = t0;
            }
            let out = optimize_with_frame(&data, oracle.as_ref(), &config, frame, &mech)?;
            let trajectory: Vec<f64> = out
                .trajectory
                .iter()
                .map(|s| squared_distance(&s.theta, &theta_star).sqrt())
                .collect();
            Ok(Outcome {
                value: squared_distance(&out.theta, &theta_star).sqrt(),
                warnings: out.warnings,
                diagnostics: Diagnostics {
                    groups: Some(config.t0),
                    k_cert: Some(out.k_cert),
                    trajectory: Some(trajectory),
                    ..Diagnostics::default()
                },
            })
        }
        (Task::Classify, Generated::Labeled(data)) => {
            let l = o
                .bin_width
                .unwrap_or_else(|| classification_bin_width(p.n, p.m, p.epsilon, p.d, o.beta));
            let out = train_classifier(&data, p.epsilon, l, &mech)?;
            let risk = risk_integral(&data, o.test_points, &stream.child(2), |x, eta| {
                let pred = out.model.predict_class(x)?;
                let bayes = if eta < 0.0 { -1.0 } else { 1.0 };
                Ok(if pred != bayes { eta.abs() } else { 0.0 })
            })?;
            Ok(nonparam_outcome(
                risk,
                &out.model,
                out.groups,
                out.smallest_group,
                out.warnings,
            ))
        }
        (Task::Regress, Generated::Labeled(data)) => {
            let t = dist
                .label_bound()
                .ok_or_else(|| missing("the label bound"))?;
            let l = o
                .bin_width
                .unwrap_or_else(|| regression_bin_width(p.n, p.m, p.epsilon, p.d, o.beta));
            let options = RegressionOptions {
                label_bound: t,
                density_floor: o.density_floor,
            };
            let out = train_regressor(&data, p.epsilon, l, options, &mech)?;
            let ise = risk_integral(&data, o.test_points, &stream.child(2), |x, eta| {
                Ok((out.model.predict_reg(x, t)? - eta).powi(2))
            })?;
            Ok(nonparam_outcome(
                ise,
                &out.model,
                out.groups,
                out.smallest_group,
                out.warnings,
            ))
        }
        (task, _) => Err(Error::Spec(format!(
            "task {task} cannot use this distribution"
        ))),
    }
}

fn nonparam_outcome(
    value: f64,
    model: &GridModel,
    groups: usize,
    smallest: usize,
    warnings: Vec<Warning>,
) -> Outcome {
    Outcome {
        value,
        warnings,
        diagnostics: Diagnostics {
            regime: Some(model.regime),
            groups: Some(groups),
            smallest_group: Some(smallest),
            bin_width: Some(model.l),
            cells: Some(model.cells),
            ..Diagnostics::default()
        },
    }
}

fn scalar_radius(spec: &ExperimentSpec) -> Result<f64> {
    spec.options
        .radius
        .or(spec.distribution.support().map(|s| s.radius))
        .ok_or_else(|| Error::Spec("unbounded data needs options.radius".into()))
}

/// Explicit or support radius; for unbounded data with `options.p`, the clip
/// `(M_p² n ε²)^{1/(2p)}` balancing bias against one noisy sample per user.
fn baseline_radius(spec: &ExperimentSpec, point: &GridPoint) -> Result<f64> {
    if spec.options.radius.is_some() || spec.distribution.support().is_some() {
        return scalar_radius(spec);
    }
    let tail = heavy_tail(spec)?;
    Ok(
        (tail.moment_bound.powi(2) * point.n as f64 * point.epsilon.powi(2))
            .powf(1.0 / (2.0 * tail.p)),
    )
}

fn heavy_tail(spec: &ExperimentSpec) -> Result<HeavyTail> {
    let o = &spec.options;
    let p =
        o.p.ok_or_else(|| Error::Spec("heavy needs options.p".into()))?;
    let mp = match o.moment_bound {
        Some(v) => v,
        None => spec
            .distribution
            .abs_moment(p)
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Spec(format!("moment of order {p} is not finite")))?,
    };
    let tail = HeavyTail::new(p, mp)?;
    Ok(match o.clip_radius {
        Some(r) => tail.with_clip_radius(r),
        None => tail,
    })
}

/// `∫_{[0,1]^d} loss(x, η(x)) dx`: a midpoint rule on the first axis when
/// `d = 1`, Monte Carlo otherwise.
fn risk_integral(
    data: &LazyLabeledUsers,
    points: usize,
    stream: &RngStream,
    loss: impl Fn(&[f64], f64) -> Result<f64> + Sync,
) -> Result<f64> {
    let d = data.d;
    let dist: &Distribution = &data.dist;
    let eta = |x: &[f64]| dist.regression_function(x).expect("labeled distribution");
    if d == 1 {
        let total: Result<f64> = (0..points)
            .into_par_iter()
            .map(|i| {
                let x = [(i as f64 + 0.5) / points as f64];
                loss(&x, eta(&x))
            })
            .sum();
        return Ok(total? / points as f64);
    }
    let mut rng = stream.rng();
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    for _ in 0..points {
        x.iter_mut().for_each(|v| *v = rng.random::<f64>());
        total += loss(&x, eta(&x))?;
    }
    Ok(total / points as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> ExperimentSpec {
        ExperimentSpec::from_json(text).unwrap()
    }

    const TWO_BY_TWO: &str = r#"{
        "schema_version": 1, "task": "mean1d", "distribution": {"name": "uniform"},
        "grid": {"n": [200, 400], "m": [10, 20], "epsilon": [1.0]},
        "trials": 3, "seed": 11
    }"#;

    #[test]
    fn counts_rows_and_is_deterministic() {
        let s = spec(TWO_BY_TWO);
        let a = run_sweep_with_workers(&s, Some(2)).unwrap();
        assert_eq!(a.len(), 12);
        assert!(a.iter().all(|r| r.ok()));
        let b = run_sweep_with_workers(&s, Some(1)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.grid_index, x.trial), (y.grid_index, y.trial));
            assert_eq!(x.value.unwrap().to_bits(), y.value.unwrap().to_bits());
        }
    }

    #[test]
    fn infeasible_point_is_isolated() {
        let s = spec(&TWO_BY_TWO.replace("[200, 400]", "[2, 400]"));
        let rows = run_sweep_with_workers(&s, Some(2)).unwrap();
        assert_eq!(rows.len(), 12);
        let failed: Vec<_> = rows.iter().filter(|r| !r.ok()).collect();
        assert_eq!(failed.len(), 6);
        assert!(failed
            .iter()
            .all(|r| r.n == 2 && r.error.as_deref().unwrap().contains("users")));
        // The good grid points are unaffected by the failing ones.
        let clean = run_sweep_with_workers(&spec(TWO_BY_TWO), Some(2)).unwrap();
        for (x, y) in rows.iter().zip(&clean).filter(|(x, _)| x.ok()) {
            assert_eq!(x.value, y.value);
        }
    }

    #[test]
    fn every_task_runs() {
        let cases = [
            r#""task": "baseline", "distribution": {"name": "uniform"}, "grid": {"n": [100], "m": [10], "epsilon": [1.0]}"#,
            r#""task": "heavy", "distribution": {"name": "student_t", "nu": 3, "shift": 1}, "grid": {"n": [200], "m": [10], "epsilon": [1.0]}, "options": {"p": 2.5}"#,
            r#""task": "heavy", "distribution": {"name": "student_t_vector", "nu": 5}, "grid": {"n": [400], "m": [10], "epsilon": [1.0], "d": [2]}, "options": {"p": 3}"#,
            r#""task": "mean", "distribution": {"name": "cube"}, "grid": {"n": [400], "m": [10], "epsilon": [1.0], "d": [2]}"#,
            r#""task": "mean", "distribution": {"name": "sphere"}, "grid": {"n": [400], "m": [10], "epsilon": [1.0], "d": [2]}"#,
            r#""task": "mean", "distribution": {"name": "categorical", "probs": [0.5, 0.25, 0.25]}, "grid": {"n": [400], "m": [10], "epsilon": [1.0], "d": [3]}"#,
            r#""task": "optimize", "distribution": {"name": "ball", "center": [0.3, -0.2]}, "grid": {"n": [1000], "m": [10], "epsilon": [1.0], "d": [2]}"#,
            r#""task": "classify", "distribution": {"name": "classify_step"}, "grid": {"n": [400], "m": [10], "epsilon": [1.0]}, "options": {"test_points": 1000}"#,
            r#""task": "regress", "distribution": {"name": "regress_sine"}, "grid": {"n": [800], "m": [10], "epsilon": [1.0]}, "options": {"bin_width": 0.5, "test_points": 1000}"#,
        ];
        for body in cases {
            let s = spec(&format!(
                r#"{{"schema_version": 1, {body}, "trials": 2, "seed": 3}}"#
            ));
            let rows = run_sweep_with_workers(&s, Some(1)).unwrap();
            assert_eq!(rows.len(), 2);
            for r in &rows {
                assert!(r.ok(), "{body}: {:?}", r.error);
                assert!(r.value.unwrap().is_finite() && r.value.unwrap() >= 0.0);
                assert_eq!(r.metric, s.task.metric());
            }
        }
    }
}
