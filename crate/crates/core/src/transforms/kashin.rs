//! Kashin representations in a redundant `2d`-frame.
//!
//! The frame `U` (`2d x d`, orthonormal columns) is the first `d` columns of a
//! Haar-random orthogonal matrix. No linear map with `UᵀU = I` keeps
//! `‖Ux‖∞ ≤ K/√d` for every unit `x`, so coefficients come from iterative
//! truncation instead: compute frame coefficients of the residual, clip them at
//! a level proportional to the residual norm, accumulate, subtract their
//! synthesis from the residual, and repeat. The residual left after the last
//! round is added back through its exact frame coefficients, so `Uᵀa(x) = x`
//! holds to rounding for every `x`.
//!
//! `K_cert` is measured on a probe set at construction. Callers that need a
//! hard range must still clip coefficients at `K_cert ‖x‖/√d`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::noise::RngStream;

const PROBE_STREAM: u64 = 1;
const ROTATION_STREAM: u64 = 0;

/// Construction parameters for [`build_kashin_frame`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KashinConfig {
    /// Truncation rounds.
    pub iters: usize,
    /// Truncation stops once `‖residual‖ ≤ stop ‖x‖`; the rest is added exactly.
    pub stop: f64,
    /// Relative reconstruction tolerance checked on every probe.
    pub tol: f64,
    /// Largest acceptable certified constant.
    pub k_max: f64,
    /// Clip level per round, as a multiple of `‖residual‖₂/√d`.
    pub truncation: f64,
    /// Random unit probes used for certification.
    pub random_probes: usize,
}

impl Default for KashinConfig {
    fn default() -> Self {
        Self {
            iters: 30,
            stop: 1e-2,
            tol: 1e-9,
            k_max: 6.0,
            truncation: 0.5,
            random_probes: 10_000,
        }
    }
}

/// Tight frame with a certified coefficient bound.
#[derive(Debug, Clone, PartialEq)]
pub struct KashinFrame {
    d: usize,
    /// Row-major `2d x d`.
    u: Vec<f64>,
    k_cert: f64,
    iters: usize,
    stop: f64,
    tol: f64,
    truncation: f64,
    max_probe_error: f64,
}

/// Builds and certifies a frame for dimension `d`.
pub fn build_kashin_frame(
    d: usize,
    stream: &RngStream,
    config: KashinConfig,
) -> Result<KashinFrame> {
    if d == 0 {
        return Err(Error::param("d", "dimension must be at least 1"));
    }
    if !(config.truncation > 0.0) || !(config.tol > 0.0) {
        return Err(Error::param(
            "config",
            "truncation and tol must be positive",
        ));
    }
    let rows = 2 * d;
    let mut rng = stream.child(ROTATION_STREAM).rng();
    let gaussian = DMatrix::<f64>::from_fn(rows, d, |_, _| rng.sample(StandardNormal));
    let qr = gaussian.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = vec![0.0; rows * d];
    for c in 0..d {
        // Sign fix makes the column distribution Haar.
        let sign = if r[(c, c)] < 0.0 { -1.0 } else { 1.0 };
        for row in 0..rows {
            u[row * d + c] = sign * q[(row, c)];
        }
    }
    let mut frame = KashinFrame {
        d,
        u,
        k_cert: f64::INFINITY,
        iters: config.iters,
        stop: config.stop,
        tol: config.tol,
        truncation: config.truncation,
        max_probe_error: 0.0,
    };
    frame.certify(&stream.child(PROBE_STREAM), config)?;
    Ok(frame)
}

impl KashinFrame {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of frame coefficients, `2d`.
    pub fn coefficients(&self) -> usize {
        2 * self.d
    }

    pub fn k_cert(&self) -> f64 {
        self.k_cert
    }

    pub fn iters(&self) -> usize {
        self.iters
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Largest relative reconstruction error seen during certification.
    pub fn max_probe_error(&self) -> f64 {
        self.max_probe_error
    }

    /// Row `r` of `U`.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.u[r * self.d..(r + 1) * self.d]
    }

    /// Coefficient bound for vectors of norm at most `radius`.
    pub fn coefficient_radius(&self, radius: f64) -> f64 {
        self.k_cert * radius / (self.d as f64).sqrt()
    }

    /// `max |UᵀU - I|` entrywise.
    pub fn gram_deviation(&self) -> f64 {
        let d = self.d;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = (0..2 * d)
                    .map(|r| self.u[r * d + i] * self.u[r * d + j])
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    fn analyze_into(&self, x: &[f64], out: &mut [f64]) {
        for (row, o) in self.u.chunks_exact(self.d).zip(out.iter_mut()) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// Kashin coefficients of `x`.
    pub fn represent(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                actual: x.len(),
            });
        }
        let mut coeffs = vec![0.0; 2 * self.d];
        self.represent_into(x, &mut coeffs, &mut Scratch::new(self.d));
        Ok(coeffs)
    }

    /// Coefficients of `x` with every entry clipped to `[-bound, bound]`.
    pub fn represent_clipped(&self, x: &[f64], bound: f64) -> Result<Vec<f64>> {
        let mut coeffs = self.represent(x)?;
        coeffs.iter_mut().for_each(|c| *c = c.clamp(-bound, bound));
        Ok(coeffs)
    }

    pub(crate) fn represent_into(&self, x: &[f64], coeffs: &mut [f64], scratch: &mut Scratch) {
        debug_assert_eq!(coeffs.len(), 2 * self.d);
        coeffs.iter_mut().for_each(|c| *c = 0.0);
        let norm0 = l2(x);
        if norm0 == 0.0 {
            return;
        }
        let Scratch {
            residual,
            frame,
            step,
        } = scratch;
        residual.copy_from_slice(x);
        let sqrt_d = (self.d as f64).sqrt();
        let mut norm = norm0;
        for _ in 0..self.iters {
            if norm <= self.stop * norm0 {
                break;
            }
            let level = self.truncation * norm / sqrt_d;
            step.iter_mut().for_each(|s| *s = 0.0);
            for (row, c) in self.u.chunks_exact(self.d).zip(coeffs.iter_mut()) {
                let f = row
                    .iter()
                    .zip(residual.iter())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .clamp(-level, level);
                *c += f;
                for (s, &u) in step.iter_mut().zip(row) {
                    *s += f * u;
                }
            }
            let mut sq = 0.0;
            for (r, s) in residual.iter_mut().zip(step.iter()) {
                *r -= s;
                sq += *r * *r;
            }
            norm = sq.sqrt();
        }
        self.analyze_into(residual, frame);
        for (c, f) in coeffs.iter_mut().zip(frame.iter()) {
            *c += f;
        }
    }

    /// `Uᵀ a`.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != 2 * self.d {
            return Err(Error::Dimension {
                expected: 2 * self.d,
                actual: coeffs.len(),
            });
        }
        let mut out = vec![0.0; self.d];
        for (row, &c) in self.u.chunks_exact(self.d).zip(coeffs) {
            for (o, &u) in out.iter_mut().zip(row) {
                *o += c * u;
            }
        }
        Ok(out)
    }

    fn certify(&mut self, stream: &RngStream, config: KashinConfig) -> Result<()> {
        let d = self.d;
        let mut probes: Vec<Vec<f64>> = Vec::with_capacity(3 * d + config.random_probes);
        for r in 0..2 * d {
            let row = self.row(r).to_vec();
            let norm = l2(&row);
            if norm > 0.0 {
                probes.push(row.iter().map(|v| v / norm).collect());
            }
        }
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            probes.push(e);
        }
        let mut rng = stream.rng();
        for _ in 0..config.random_probes {
            let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm = l2(&g);
            if norm > 0.0 {
                probes.push(g.iter().map(|v| v / norm).collect());
            }
        }

        let mut scratch = Scratch::new(d);
        let mut coeffs = vec![0.0; 2 * d];
        let mut worst_coeff: f64 = 0.0;
        let mut worst_err: f64 = 0.0;
        for x in &probes {
            self.represent_into(x, &mut coeffs, &mut scratch);
            worst_coeff = worst_coeff.max(coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())));
            let back = self.reconstruct(&coeffs)?;
            let err = back
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            worst_err = worst_err.max(err);
        }
        self.k_cert = (d as f64).sqrt() * worst_coeff;
        self.max_probe_error = worst_err;
        if worst_err > self.tol {
            return Err(Error::param(
                "tol",
                format!(
                    "probe reconstruction error {worst_err:.3e} exceeds tolerance {:.3e}",
                    self.tol
                ),
            ));
        }
        if self.k_cert > config.k_max {
            return Err(Error::Certification {
                d,
                k_cert: self.k_cert,
                k_max: config.k_max,
            });
        }
        Ok(())
    }
}

pub(crate) struct Scratch {
    residual: Vec<f64>,
    frame: Vec<f64>,
    step: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(d: usize) -> Self {
        Self {
            residual: vec![0.0; d],
            frame: vec![0.0; 2 * d],
            step: vec![0.0; d],
        }
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(d: usize) -> KashinFrame {
        build_kashin_frame(
            d,
            &RngStream::derive(11, &[d as u64]),
            KashinConfig::default(),
        )
        .unwrap()
    }

    fn random_unit(d: usize, rng: &mut impl Rng) -> Vec<f64> {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = l2(&g);
        g.into_iter().map(|v| v / n).collect()
    }

    #[test]
    fn one_dimensional_frame() {
        let f = frame(1);
        let col: f64 = (0..2).map(|r| f.row(r)[0].powi(2)).sum();
        assert!((col - 1.0).abs() < 1e-12);
        let a = f.represent(&[1.0]).unwrap();
        assert!(a.iter().all(|c| c.abs() <= f.k_cert() + 1e-12));
        assert!((f.reconstruct(&a).unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn columns_are_orthonormal() {
        assert!(frame(4).gram_deviation() <= 1e-10);
    }

    #[test]
    fn reconstruction_within_tolerance() {
        let f = build_kashin_frame(
            16,
            &RngStream::new(3),
            KashinConfig {
                tol: 1e-9,
                ..KashinConfig::default()
            },
        )
        .unwrap();
        let mut rng = RngStream::new(4).rng();
        for _ in 0..1000 {
            let x = random_unit(16, &mut rng);
            let back = f.reconstruct(&f.represent(&x).unwrap()).unwrap();
            let err = l2(&back.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
            assert!(err <= 1e-9, "{err}");
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let f = frame(8);
        assert!(f.represent(&[0.0; 8]).unwrap().iter().all(|&c| c == 0.0));
        assert!(f.reconstruct(&[0.0; 16]).unwrap().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn positive_homogeneity() {
        let f = frame(8);
        let mut rng = RngStream::new(9).rng();
        let x = random_unit(8, &mut rng);
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let (a, a2) = (f.represent(&x).unwrap(), f.represent(&x2).unwrap());
        for (p, q) in a.iter().zip(&a2) {
            assert!((2.0 * p - q).abs() <= 1e-9, "{p} {q}");
        }
    }

    #[test]
    fn reconstruct_is_linear() {
        let f = frame(8);
        let a: Vec<f64> = (0..16).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..16).map(|i| (i as f64 * 0.3).cos()).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let (ra, rb, rs) = (
            f.reconstruct(&a).unwrap(),
            f.reconstruct(&b).unwrap(),
            f.reconstruct(&sum).unwrap(),
        );
        for i in 0..8 {
            assert!((ra[i] + rb[i] - rs[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn dimension_checks() {
        let f = frame(4);
        assert!(matches!(
            f.represent(&[1.0; 3]),
            Err(Error::Dimension {
                expected: 4,
                actual: 3
            })
        ));
        assert!(f.reconstruct(&[1.0; 4]).is_err());
        assert!(build_kashin_frame(0, &RngStream::new(0), KashinConfig::default()).is_err());
    }

    #[test]
    fn certification_failure_is_reported() {
        let err = build_kashin_frame(
            8,
            &RngStream::new(1),
            KashinConfig {
                k_max: 0.5,
                random_probes: 100,
                ..KashinConfig::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Certification { d: 8, .. }));
    }

    #[test]
    fn certified_bound_holds_on_fresh_vectors() {
        let f = frame(16);
        let mut rng = RngStream::new(77).rng();
        for _ in 0..2000 {
            let x = random_unit(16, &mut rng);
            let a = f.represent(&x).unwrap();
            let inf = a.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            // Fresh probes may exceed the certified value slightly; clipping handles that.
            assert!(4.0 * inf <= 1.05 * f.k_cert(), "{inf}");
        }
    }
}
