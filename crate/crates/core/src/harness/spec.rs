use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::dist::{DataKind, Distribution};
use crate::baselines::BaselineKind;
use crate::data::SupportKind;
use crate::error::{Error, Result};
use crate::mean_multi::HeavyMode;

pub const SPEC_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Mean1d,
    Mean,
    Heavy,
    Optimize,
    Classify,
    Regress,
    Baseline,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Mean1d => "mean1d",
            Task::Mean => "mean",
            Task::Heavy => "heavy",
            Task::Optimize => "optimize",
            Task::Classify => "classify",
            Task::Regress => "regress",
            Task::Baseline => "baseline",
        }
    }

    /// Name of the error metric a trial reports.
    pub fn metric(self) -> &'static str {
        match self {
            Task::Mean1d | Task::Mean | Task::Heavy | Task::Baseline => "squared_error",
            Task::Optimize => "l2_error",
            Task::Classify => "excess_risk",
            Task::Regress => "integrated_squared_error",
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn one_d() -> Vec<usize> {
    vec![1]
}

/// Cartesian sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub epsilon: Vec<f64>,
    #[serde(default = "one_d")]
    pub d: Vec<usize>,
}

/// One point of a [`SweepGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    pub d: usize,
}

impl SweepGrid {
    /// Points in row-major order over `(n, m, epsilon, d)`.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &m in &self.m {
                for &epsilon in &self.epsilon {
                    for &d in &self.d {
                        out.push(GridPoint { n, m, epsilon, d });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossName {
    Quadratic,
    ClippedQuadratic,
}

fn default_beta() -> f64 {
    1.0
}
fn default_test_points() -> usize {
    100_000
}
fn default_baseline() -> BaselineKind {
    BaselineKind::SampleOne
}
fn default_loss() -> LossName {
    LossName::Quadratic
}
fn default_heavy_mode() -> HeavyMode {
    HeavyMode::Coordinate
}

/// Mechanism options. Fields a task does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Support the `mean` task assumes; defaults to the distribution's own.
    #[serde(default)]
    pub support: Option<SupportKind>,
    /// Data radius `D`; defaults to the distribution's support radius.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    /// `M_p`; defaults to the distribution's exact `E|X|^p` in coordinate mode.
    #[serde(default)]
    pub moment_bound: Option<f64>,
    /// Clip radius for heavy-tailed runs (default: calibrated) and the
    /// gradient bound of `clipped_quadratic`.
    #[serde(default)]
    pub clip_radius: Option<f64>,
    #[serde(default = "default_heavy_mode")]
    pub heavy_mode: HeavyMode,
    /// Conversion used by `baseline`. Unbounded data is clipped to `radius`.
    #[serde(default = "default_baseline")]
    pub baseline: BaselineKind,
    #[serde(default = "default_loss")]
    pub loss: LossName,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub t0: Option<usize>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Histogram bin side; defaults to the rate-optimal width.
    #[serde(default)]
    pub bin_width: Option<f64>,
    #[serde(default)]
    pub density_floor: Option<f64>,
    /// Evaluation points for risk metrics.
    #[serde(default = "default_test_points")]
    pub test_points: usize,
}

impl Default for Options {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all options have defaults")
    }
}

/// A complete sweep description. Every random draw is derived from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub task: Task,
    pub distribution: Distribution,
    pub grid: SweepGrid,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub options: Options,
    /// Output directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Spec(msg));
        if self.schema_version != SPEC_SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {}",
                self.schema_version
            ));
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        let g = &self.grid;
        if g.n.is_empty() || g.m.is_empty() || g.epsilon.is_empty() || g.d.is_empty() {
            return bad("every grid axis needs at least one value".into());
        }
        if g.m.contains(&0) || g.d.contains(&0) {
            return bad("m and d must be positive".into());
        }
        if let Some(e) = g.epsilon.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return bad(format!("epsilon must be positive and finite, got {e}"));
        }
        for &d in &g.d {
            self.distribution.validate(d)?;
        }

        let kind = self.distribution.kind();
        let want: &[DataKind] = match self.task {
            Task::Mean1d | Task::Baseline => &[DataKind::Scalar],
            Task::Mean | Task::Optimize => &[DataKind::Vector],
            Task::Heavy => &[DataKind::Scalar, DataKind::Vector],
            Task::Classify | Task::Regress => &[DataKind::Labeled],
        };
        if !want.contains(&kind) {
            return bad(format!("task {} cannot use {kind:?} data", self.task));
        }
        match self.task {
            Task::Classify if !matches!(self.distribution, Distribution::ClassifyStep { .. }) => {
                return bad("classify needs classify_step data".into());
            }
            Task::Regress if !matches!(self.distribution, Distribution::RegressSine { .. }) => {
                return bad("regress needs regress_sine data".into());
            }
            _ => {}
        }

        let o = &self.options;
        let bounded = matches!(
            self.task,
            Task::Mean1d | Task::Baseline | Task::Mean | Task::Optimize
        );
        let heavy_baseline = self.task == Task::Baseline && o.p.is_some();
        if bounded && !heavy_baseline && o.radius.is_none() && self.distribution.support().is_none()
        {
            return bad(format!(
                "task {} needs bounded data or an explicit radius",
                self.task
            ));
        }
        if let Some(r) = o.radius {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("radius must be positive, got {r}"));
            }
        }
        if self.task == Task::Heavy {
            let p =
                o.p.ok_or_else(|| Error::Spec("heavy needs options.p".into()))?;
            if !(p >= 2.0) {
                return bad(format!("p must be at least 2, got {p}"));
            }
            if o.moment_bound.is_none() {
                if o.heavy_mode == HeavyMode::L2norm && kind == DataKind::Vector {
                    return bad("l2norm mode needs an explicit moment_bound".into());
                }
                match self.distribution.abs_moment(p) {
                    Some(v) if v.is_finite() => {}
                    _ => {
                        return bad(format!(
                            "moment of order {p} is not finite; give moment_bound"
                        ))
                    }
                }
            }
        }
        if self.task == Task::Optimize
            && o.loss == LossName::ClippedQuadratic
            && o.clip_radius.is_none()
        {
            return bad("clipped_quadratic needs options.clip_radius as the gradient bound".into());
        }
        if let Some(l) = o.bin_width {
            if !(l > 0.0 && l <= 1.0) {
                return bad(format!("bin_width must lie in (0, 1], got {l}"));
            }
        }
        if matches!(self.task, Task::Classify | Task::Regress) && o.test_points == 0 {
            return bad("test_points must be positive".into());
        }
        Ok(())
    }
}
