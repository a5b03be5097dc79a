use serde::{Deserialize, Serialize};

use super::l2::user_coefficient_means;
use super::linf::{estimate_components, vector_user_means, MultiOutput, PLAN_STREAM};
use super::plan::plan_regime;
use crate::data::VectorUsers;
use crate::error::{Error, Result};
use crate::mean1d::{HeavyTail, Mean1dParams};
use crate::noise::RngStream;
use crate::transforms::KashinFrame;

/// How the moment bound is read for vector data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeavyMode {
    /// `M_p ≥ E|X_k|^p` for every coordinate `k`.
    Coordinate,
    /// `M_p ≥ E‖X‖₂^p`; estimation runs in Kashin coordinates.
    L2norm,
}

/// Estimator for unbounded vector data with a `p`-th moment bound.
///
/// In `L2norm` mode each frame coefficient has `p`-th moment at most
/// `M_p K^p d^{-p/2}`, which calibrates the per-coefficient clipped
/// estimators.
pub fn mean_heavy_multi<D: VectorUsers + ?Sized>(
    data: &D,
    epsilon: f64,
    tail: &HeavyTail,
    mode: HeavyMode,
    stream: &RngStream,
    frame: Option<&KashinFrame>,
) -> Result<MultiOutput> {
    let n = data.num_users();
    let m = data.samples_per_user();
    let d = data.dim();
    let (means, dim, tail, frame) = match mode {
        HeavyMode::Coordinate => (vector_user_means(data), d, *tail, None),
        HeavyMode::L2norm => {
            let frame =
                frame.ok_or_else(|| Error::param("frame", "l2norm mode needs a Kashin frame"))?;
            if frame.dim() != d {
                return Err(Error::Dimension {
                    expected: frame.dim(),
                    actual: d,
                });
            }
            let shrink = frame.k_cert() / (d as f64).sqrt();
            let mut coeff_tail = HeavyTail::new(tail.p, tail.moment_bound * shrink.powf(tail.p))?;
            coeff_tail.c = tail.c;
            coeff_tail.clip_radius = tail.clip_radius.map(|r| r * shrink);
            let (means, _) = user_coefficient_means(data, frame, None);
            (means, 2 * d, coeff_tail, Some(frame))
        }
    };
    if means.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("data", "non-finite samples"));
    }
    let plan = plan_regime(n, dim, epsilon, &stream.child(PLAN_STREAM))?;
    let (mut estimate, warnings) = estimate_components(
        &means,
        dim,
        m,
        &plan,
        |_, budget, ng| Mean1dParams::heavy_tailed(&tail, budget, ng, m),
        stream,
    )?;
    if let Some(frame) = frame {
        estimate = frame.reconstruct(&estimate)?;
    }
    Ok(MultiOutput {
        estimate,
        regime: plan.regime,
        groups: plan.groups.len(),
        smallest_group: plan.smallest_group(),
        warnings,
        k_cert: frame.map(KashinFrame::k_cert),
        clipped_fraction: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Support, SupportKind, UserDatasetVector};
    use crate::transforms::{build_kashin_frame, KashinConfig};

    fn data() -> UserDatasetVector {
        let support = Support::new(SupportKind::Linf, 1.0).unwrap();
        UserDatasetVector::new(400, 50, 2, support, [0.3, -0.1].repeat(400 * 50)).unwrap()
    }

    #[test]
    fn coordinate_mode_vanishing_noise() {
        let tail = HeavyTail::new(2.5, 1.0).unwrap();
        let out = mean_heavy_multi(
            &data(),
            1e6,
            &tail,
            HeavyMode::Coordinate,
            &RngStream::new(1),
            None,
        )
        .unwrap();
        assert!((out.estimate[0] - 0.3).abs() < 1e-2);
        assert!((out.estimate[1] + 0.1).abs() < 1e-2);
    }

    #[test]
    fn l2norm_mode_needs_frame() {
        let tail = HeavyTail::new(2.5, 1.0).unwrap();
        assert!(mean_heavy_multi(
            &data(),
            1.0,
            &tail,
            HeavyMode::L2norm,
            &RngStream::new(1),
            None
        )
        .is_err());
        let frame = build_kashin_frame(2, &RngStream::new(2), KashinConfig::default()).unwrap();
        let out = mean_heavy_multi(
            &data(),
            1e6,
            &tail,
            HeavyMode::L2norm,
            &RngStream::new(1),
            Some(&frame),
        )
        .unwrap();
        assert!((out.estimate[0] - 0.3).abs() < 1e-2, "{:?}", out.estimate);
        assert!((out.estimate[1] + 0.1).abs() < 1e-2);
    }

    #[test]
    fn rejects_low_moment_order() {
        assert!(HeavyTail::new(1.0, 1.0).is_err());
    }
}
