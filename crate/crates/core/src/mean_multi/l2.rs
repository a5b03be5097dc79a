use rayon::prelude::*;

use super::linf::{estimate_bounded, MultiOutput};
use crate::data::{SupportKind, VectorUsers};
use crate::error::{Error, Result};
use crate::noise::RngStream;
use crate::transforms::kashin::Scratch;
use crate::transforms::KashinFrame;

/// Row-major `n x 2d` user means of per-sample Kashin coefficients, each
/// coefficient clipped to `[-bound, bound]` when `bound` is given. Also
/// returns how many coefficients clipping changed.
pub(crate) fn user_coefficient_means<D: VectorUsers + ?Sized>(
    data: &D,
    frame: &KashinFrame,
    bound: Option<f64>,
) -> (Vec<f64>, usize) {
    let d = data.dim();
    let width = 2 * d;
    let mut out = vec![0.0; data.num_users() * width];
    let clipped: usize = out
        .par_chunks_mut(width)
        .enumerate()
        .map_init(
            || (Vec::new(), vec![0.0; width], Scratch::new(d)),
            |(buf, coeffs, scratch), (i, row)| {
                data.user_samples(i, buf);
                let mut clipped = 0;
                let samples = buf.len() / d;
                for x in buf.chunks_exact(d) {
                    frame.represent_into(x, coeffs, scratch);
                    for (r, &c) in row.iter_mut().zip(coeffs.iter()) {
                        let v = match bound {
                            Some(b) if c.abs() > b => {
                                clipped += 1;
                                c.clamp(-b, b)
                            }
                            _ => c,
                        };
                        *r += v;
                    }
                }
                let inv = 1.0 / samples as f64;
                row.iter_mut().for_each(|r| *r *= inv);
                clipped
            },
        )
        .sum();
    (out, clipped)
}

/// ℓ2 radius implied by the data's support.
pub(crate) fn l2_radius<D: VectorUsers + ?Sized>(data: &D) -> f64 {
    let s = data.support();
    match s.kind {
        SupportKind::L2 | SupportKind::L1 => s.radius,
        SupportKind::Linf => s.radius * (data.dim() as f64).sqrt(),
    }
}

/// Estimator for data in an ℓ2 ball of radius `D`.
///
/// Each sample is expanded in the frame, coefficients are clipped at
/// `K_cert D/√d`, user means of the `2d` coefficients go through the
/// per-coordinate estimator with that radius, and the estimate is mapped back
/// by `Uᵀ`.
pub fn mean_l2<D: VectorUsers + ?Sized>(
    data: &D,
    epsilon: f64,
    frame: &KashinFrame,
    stream: &RngStream,
) -> Result<MultiOutput> {
    if frame.dim() != data.dim() {
        return Err(Error::Dimension {
            expected: frame.dim(),
            actual: data.dim(),
        });
    }
    let bound = frame.coefficient_radius(l2_radius(data));
    let (means, clipped) = user_coefficient_means(data, frame, Some(bound));
    let n = data.num_users();
    let mut out = estimate_bounded(
        &means,
        n,
        2 * data.dim(),
        data.samples_per_user(),
        bound,
        epsilon,
        stream,
    )?;
    out.estimate = frame.reconstruct(&out.estimate)?;
    out.k_cert = Some(frame.k_cert());
    out.clipped_fraction =
        Some(clipped as f64 / (n * data.samples_per_user() * 2 * data.dim()).max(1) as f64);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Support, UserDatasetVector};
    use crate::transforms::{build_kashin_frame, KashinConfig};

    #[test]
    fn vanishing_noise_recovers_direction() {
        let d = 4;
        let frame = build_kashin_frame(d, &RngStream::new(3), KashinConfig::default()).unwrap();
        let v = [0.5, -0.5, 0.5, 0.5];
        let support = Support::new(SupportKind::L2, 1.0).unwrap();
        let x: Vec<f64> = v.iter().map(|a| a * 0.5).collect();
        let data = UserDatasetVector::new(400, 50, d, support, x.repeat(400 * 50)).unwrap();
        let out = mean_l2(&data, 1e6, &frame, &RngStream::new(1)).unwrap();
        let err: f64 = out
            .estimate
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-2, "{err}");
        assert_eq!(out.clipped_fraction, Some(0.0));
    }

    #[test]
    fn frame_dimension_must_match() {
        let frame = build_kashin_frame(3, &RngStream::new(3), KashinConfig::default()).unwrap();
        let support = Support::new(SupportKind::L2, 1.0).unwrap();
        let data = UserDatasetVector::new(8, 1, 2, support, vec![0.0; 16]).unwrap();
        assert!(matches!(
            mean_l2(&data, 1.0, &frame, &RngStream::new(0)),
            Err(Error::Dimension { .. })
        ));
    }
}
