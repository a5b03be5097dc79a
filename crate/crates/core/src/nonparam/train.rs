use rayon::prelude::*;

use super::grid::Grid;
use super::model::{GridModel, GridTask, MIN_P_FLOOR, MODEL_SCHEMA_VERSION};
use crate::data::LabeledUsers;
use crate::error::{Error, Result};
use crate::mean1d::Mean1dParams;
use crate::mean_multi::{estimate_components, plan_with_regime, regime_for, PLAN_STREAM};
use crate::noise::RngStream;
use crate::transforms::{fwht, HadamardMatrix};
use crate::warning::Warning;

/// Default `c₂` in the warning threshold `n (ε² ∧ 1) ≥ c₂ (ln m + ln n)`.
pub const DEFAULT_C2: f64 = 16.0;

/// `l = (mnε²)^{-1/(2(d+β))}` clamped to `[1/64, 1/2]`.
pub fn classification_bin_width(n: usize, m: usize, epsilon: f64, d: usize, beta: f64) -> f64 {
    let base = (m as f64 * n as f64 * epsilon * epsilon).max(1.0);
    clamp_width(base.powf(-1.0 / (2.0 * (d as f64 + beta))))
}

/// `l = (mnε²/ln² n)^{-1/(2(d+β))}` clamped to `[1/64, 1/2]`.
pub fn regression_bin_width(n: usize, m: usize, epsilon: f64, d: usize, beta: f64) -> f64 {
    let ln_n = (n.max(3) as f64).ln();
    let base = (m as f64 * n as f64 * epsilon * epsilon / (ln_n * ln_n)).max(1.0);
    clamp_width(base.powf(-1.0 / (2.0 * (d as f64 + beta))))
}

fn clamp_width(l: f64) -> f64 {
    l.clamp(1.0 / 64.0, 0.5)
}

/// A trained model together with run diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub model: GridModel,
    pub groups: usize,
    pub smallest_group: usize,
    pub warnings: Vec<Warning>,
}

/// `U_{ijk} = Y_{ij} H_{k, cell(X_{ij})}`: `+Y` when the sample's cell is in
/// `T_k = {cells b : H_{kb} = +1}`, `-Y` otherwise. `k` and the cell are 0-based.
pub fn compute_u_stat(x: &[f64], y: f64, k: usize, grid: &Grid, hadamard: &HadamardMatrix) -> f64 {
    y * hadamard.entry(k, grid.cell_of(x)) as f64
}

/// `V_{ijk} = H_{k, cell(X_{ij})}`.
pub fn compute_v_stat(x: &[f64], k: usize, grid: &Grid, hadamard: &HadamardMatrix) -> f64 {
    hadamard.entry(k, grid.cell_of(x)) as f64
}

/// Per-user means of the transformed statistics, row-major `n x width`.
///
/// Row `i` holds `(1/m) H s_i` where `s_i[b]` sums the labels (or counts, for
/// the second block when `with_counts`) of user `i`'s samples in cell `b`.
/// With counts the Q and P entries are interleaved: `[Q_0, P_0, Q_1, P_1, …]`.
fn user_statistics<D: LabeledUsers + ?Sized>(data: &D, grid: &Grid, with_counts: bool) -> Vec<f64> {
    let k = grid.order();
    let d = data.dim();
    let width = if with_counts { 2 * k } else { k };
    let mut out = vec![0.0; data.num_users() * width];
    out.par_chunks_mut(width).enumerate().for_each_init(
        || (Vec::new(), Vec::new(), vec![0.0; k], vec![0.0; k]),
        |(xs, ys, q, p), (i, row)| {
            data.user_samples(i, xs, ys);
            q.iter_mut().for_each(|v| *v = 0.0);
            p.iter_mut().for_each(|v| *v = 0.0);
            for (x, &y) in xs.chunks_exact(d).zip(ys.iter()) {
                let cell = grid.cell_of(x);
                q[cell] += y;
                p[cell] += 1.0;
            }
            let inv = 1.0 / ys.len() as f64;
            fwht(q);
            if with_counts {
                fwht(p);
                for j in 0..k {
                    row[2 * j] = q[j] * inv;
                    row[2 * j + 1] = p[j] * inv;
                }
            } else {
                for (r, v) in row.iter_mut().zip(q.iter()) {
                    *r = v * inv;
                }
            }
        },
    );
    out
}

fn check_labels<D: LabeledUsers + ?Sized>(
    data: &D,
    ok: impl Fn(f64) -> bool + Sync,
    what: &str,
) -> Result<()> {
    let bad = (0..data.num_users())
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(xs, ys), i| {
                data.user_samples(i, xs, ys);
                ys.iter().any(|&y| !ok(y)) || xs.iter().any(|x| !(0.0..=1.0).contains(x))
            },
        )
        .any(|b| b);
    if bad {
        return Err(Error::param(
            "data",
            format!("{what}, with features in the unit cube"),
        ));
    }
    Ok(())
}

fn decode(estimate: &[f64]) -> Vec<f64> {
    let k = estimate.len() as f64;
    let mut v = estimate.to_vec();
    fwht(&mut v);
    v.iter_mut().for_each(|x| *x /= k);
    v
}

fn precondition(n: usize, m: usize, epsilon: f64) -> Option<Warning> {
    let lhs = n as f64 * (epsilon * epsilon).min(1.0);
    let rhs = DEFAULT_C2 * ((m.max(1) as f64).ln() + (n.max(1) as f64).ln());
    (lhs < rhs).then(|| Warning::new("nonparam: n(eps^2 ^ 1) >= c2 (ln m + ln n)", lhs, rhs))
}

/// Private histogram classifier with labels in `{-1, +1}`.
///
/// Each user reports Hadamard-transformed cell statistics `Q_k` through the
/// regime plan over `K` components; `q̂ = H_K Q̂ / K`.
pub fn train_classifier<D: LabeledUsers + ?Sized>(
    data: &D,
    epsilon: f64,
    l: f64,
    stream: &RngStream,
) -> Result<TrainOutput> {
    check_labels(
        data,
        |y| y == 1.0 || y == -1.0,
        "classification labels must be +1 or -1",
    )?;
    let grid = Grid::new(data.dim(), l)?;
    let k = grid.order();
    let n = data.num_users();
    let m = data.samples_per_user();
    let regime = regime_for(k, epsilon, n);
    let plan = plan_with_regime(n, k, epsilon, regime, &stream.child(PLAN_STREAM))?;
    let stats = user_statistics(data, &grid, false);
    let (estimate, mut warnings) = estimate_components(
        &stats,
        k,
        m,
        &plan,
        |_, budget, ng| Mean1dParams::new(1.0, budget, ng, m),
        stream,
    )?;
    warnings.extend(precondition(n, m, epsilon));
    Ok(TrainOutput {
        model: GridModel {
            schema_version: MODEL_SCHEMA_VERSION,
            task: GridTask::Classification,
            d: grid.dim(),
            l,
            cells: grid.cells(),
            order: k,
            q_hat: decode(&estimate),
            p_hat: None,
            p_floor: MIN_P_FLOOR,
            label_bound: 1.0,
            epsilon,
            regime,
            seed: stream.root_seed(),
        },
        groups: plan.groups.len(),
        smallest_group: plan.smallest_group(),
        warnings,
    })
}

/// Options for [`train_regressor`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionOptions {
    /// `T` with `|Y| ≤ T`.
    pub label_bound: f64,
    /// Declared lower bound `f_L` on the feature density, if known.
    pub density_floor: Option<f64>,
}

/// Private histogram regressor.
///
/// Q and P statistics form `2K` components. The regime is picked from `K`; in
/// the high regime every component gets its own group, in the medium and low
/// regimes the interleaved Q/P components share groups so each user's budget
/// is split between the two.
pub fn train_regressor<D: LabeledUsers + ?Sized>(
    data: &D,
    epsilon: f64,
    l: f64,
    options: RegressionOptions,
    stream: &RngStream,
) -> Result<TrainOutput> {
    let t = options.label_bound;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param(
            "T",
            format!("label bound must be positive, got {t}"),
        ));
    }
    check_labels(
        data,
        |y| y.abs() <= t,
        "regression labels must lie in [-T, T]",
    )?;
    let grid = Grid::new(data.dim(), l)?;
    let k = grid.order();
    let n = data.num_users();
    let m = data.samples_per_user();
    let regime = regime_for(k, epsilon, n);
    let plan = plan_with_regime(n, 2 * k, epsilon, regime, &stream.child(PLAN_STREAM))?;
    let stats = user_statistics(data, &grid, true);
    let (estimate, mut warnings) = estimate_components(
        &stats,
        2 * k,
        m,
        &plan,
        |c, budget, ng| Mean1dParams::new(if c % 2 == 0 { t } else { 1.0 }, budget, ng, m),
        stream,
    )?;
    warnings.extend(precondition(n, m, epsilon));
    let q: Vec<f64> = estimate.iter().step_by(2).copied().collect();
    let p: Vec<f64> = estimate.iter().skip(1).step_by(2).copied().collect();
    let p_floor = match options.density_floor {
        Some(f) => MIN_P_FLOOR.max(f * l.powi(grid.dim() as i32) / 2.0),
        None => MIN_P_FLOOR,
    };
    Ok(TrainOutput {
        model: GridModel {
            schema_version: MODEL_SCHEMA_VERSION,
            task: GridTask::Regression,
            d: grid.dim(),
            l,
            cells: grid.cells(),
            order: k,
            q_hat: decode(&q),
            p_hat: Some(decode(&p)),
            p_floor,
            label_bound: t,
            epsilon,
            regime,
            seed: stream.root_seed(),
        },
        groups: plan.groups.len(),
        smallest_group: plan.smallest_group(),
        warnings,
    })
}

/// Output of the noise-free reference pipeline. Not private.
#[cfg(feature = "exact-oracle")]
#[derive(Debug, Clone, PartialEq)]
pub struct NonPrivate<T>(pub T);

/// Runs the encode/average/decode pipeline with the privatization step
/// replaced by exact averaging. For tests only; the result is not private.
#[cfg(feature = "exact-oracle")]
pub fn train_exact<D: LabeledUsers + ?Sized>(
    data: &D,
    l: f64,
    task: GridTask,
) -> Result<NonPrivate<GridModel>> {
    let grid = Grid::new(data.dim(), l)?;
    let k = grid.order();
    let with_counts = task == GridTask::Regression;
    let width = if with_counts { 2 * k } else { k };
    let stats = user_statistics(data, &grid, with_counts);
    let n = data.num_users();
    let mut mean = vec![0.0; width];
    for row in stats.chunks_exact(width) {
        for (a, v) in mean.iter_mut().zip(row) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n as f64);
    let (q, p) = if with_counts {
        let q: Vec<f64> = mean.iter().step_by(2).copied().collect();
        let p: Vec<f64> = mean.iter().skip(1).step_by(2).copied().collect();
        (decode(&q), Some(decode(&p)))
    } else {
        (decode(&mean), None)
    };
    Ok(NonPrivate(GridModel {
        schema_version: MODEL_SCHEMA_VERSION,
        task,
        d: grid.dim(),
        l,
        cells: grid.cells(),
        order: k,
        q_hat: q,
        p_hat: p,
        p_floor: MIN_P_FLOOR,
        label_bound: 1.0,
        epsilon: f64::INFINITY,
        regime: crate::mean_multi::Regime::Low,
        seed: 0,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabeledUserDataset;
    use rand::Rng;

    fn dataset(
        n: usize,
        m: usize,
        label: impl Fn(f64, &mut crate::noise::StreamRng) -> f64,
    ) -> LabeledUserDataset {
        let mut rng = RngStream::new(11).rng();
        let mut xs = Vec::with_capacity(n * m);
        let mut ys = Vec::with_capacity(n * m);
        for _ in 0..n * m {
            let x: f64 = rng.random();
            ys.push(label(x, &mut rng));
            xs.push(x);
        }
        LabeledUserDataset::new(n, m, 1, xs, ys).unwrap()
    }

    #[test]
    fn u_stat_examples_and_indicator_oracle() {
        let grid = Grid::new(1, 0.5).unwrap();
        let h = HadamardMatrix::new(2).unwrap();
        assert_eq!(compute_u_stat(&[0.2], 1.0, 1, &grid, &h), 1.0);
        assert_eq!(compute_u_stat(&[0.8], 1.0, 1, &grid, &h), -1.0);

        let grid = Grid::new(2, 0.3).unwrap();
        let h = HadamardMatrix::new(grid.order()).unwrap();
        let mut rng = RngStream::new(2).rng();
        for _ in 0..1000 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let k = rng.random_range(0..grid.order());
            // T_k as a union of cells.
            let in_tk = (0..grid.cells()).any(|b| h.entry(k, b) == 1 && grid.cell_of(&x) == b);
            let brute = if in_tk { y } else { -y };
            assert_eq!(compute_u_stat(&x, y, k, &grid, &h), brute);
            assert!(compute_v_stat(&x, k, &grid, &h).abs() == 1.0);
        }
    }

    #[test]
    fn constant_labels_classify_positive() {
        let data = dataset(4000, 20, |_, _| 1.0);
        let out = train_classifier(&data, 1e6, 0.25, &RngStream::new(3)).unwrap();
        assert!(
            out.model.q_hat[..4].iter().all(|&q| q > 0.0),
            "{:?}",
            out.model.q_hat
        );
        for x in [0.1, 0.4, 0.6, 0.9] {
            assert_eq!(out.model.predict_class(&[x]).unwrap(), 1.0);
        }
    }

    #[test]
    fn constant_regression_ratio() {
        let data = dataset(4000, 50, |_, _| 0.7);
        let opts = RegressionOptions {
            label_bound: 1.0,
            density_floor: None,
        };
        let out = train_regressor(&data, 1e6, 0.25, opts, &RngStream::new(3)).unwrap();
        for x in [0.1, 0.4, 0.6, 0.9] {
            let pred = out.model.predict_reg(&[x], 1.0).unwrap();
            assert!((pred - 0.7).abs() < 1e-2, "{pred}");
        }
    }

    #[test]
    fn label_validation_and_group_errors() {
        let bad = dataset(100, 2, |_, _| 0.5);
        assert!(train_classifier(&bad, 1.0, 0.25, &RngStream::new(0)).is_err());
        let tiny = dataset(10, 2, |_, _| 1.0);
        assert!(matches!(
            train_classifier(&tiny, 0.5, 0.25, &RngStream::new(0)),
            Err(Error::InsufficientUsers { .. })
        ));
        let opts = RegressionOptions {
            label_bound: 0.5,
            density_floor: None,
        };
        let wide = dataset(100, 2, |_, _| 0.7);
        assert!(train_regressor(&wide, 1.0, 0.25, opts, &RngStream::new(0)).is_err());
    }

    #[test]
    fn regressor_high_regime_uses_2k_groups() {
        let data = dataset(400, 4, |_, _| 0.1);
        let opts = RegressionOptions {
            label_bound: 1.0,
            density_floor: Some(1.0),
        };
        let out = train_regressor(&data, 0.5, 0.25, opts, &RngStream::new(1)).unwrap();
        assert_eq!(out.groups, 8);
        assert_eq!(out.model.p_floor, 0.25 / 2.0);
    }

    #[test]
    fn bin_width_defaults() {
        assert_eq!(
            classification_bin_width(10, 10, 1.0, 1, 1.0),
            0.5f64.min(100f64.powf(-0.25))
        );
        assert_eq!(
            classification_bin_width(1_000_000, 1000, 1.0, 1, 1.0),
            1.0 / 64.0
        );
        assert!(
            regression_bin_width(1000, 100, 1.0, 1, 1.0)
                > classification_bin_width(1000, 100, 1.0, 1, 1.0)
        );
    }

    #[cfg(feature = "exact-oracle")]
    #[test]
    fn exact_pipeline_matches_cell_averages() {
        let data = dataset(
            50,
            8,
            |x, rng| if rng.random::<f64>() < x { 1.0 } else { -1.0 },
        );
        let grid = Grid::new(1, 0.15).unwrap();
        let NonPrivate(model) = train_exact(&data, 0.15, GridTask::Regression).unwrap();
        let mut q = vec![0.0; grid.order()];
        let mut p = vec![0.0; grid.order()];
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for i in 0..50 {
            data.user_samples(i, &mut xs, &mut ys);
            for (x, y) in xs.iter().zip(&ys) {
                q[grid.cell_of(&[*x])] += y / 400.0;
                p[grid.cell_of(&[*x])] += 1.0 / 400.0;
            }
        }
        for k in 0..grid.order() {
            assert!((model.q_hat[k] - q[k]).abs() <= 1e-12);
            assert!((model.p_hat.as_ref().unwrap()[k] - p[k]).abs() <= 1e-12);
        }
    }
}
