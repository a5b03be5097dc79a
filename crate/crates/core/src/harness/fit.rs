use serde::{Deserialize, Serialize};

use super::runner::TrialRecord;
use crate::error::{Error, Result};

/// Least-squares line through `(ln x, ln ȳ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Record field used as the regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitField {
    N,
    M,
    Nm,
    Epsilon,
    D,
}

impl FitField {
    pub fn of(self, r: &TrialRecord) -> f64 {
        match self {
            FitField::N => r.n as f64,
            FitField::M => r.m as f64,
            FitField::Nm => (r.n * r.m) as f64,
            FitField::Epsilon => r.epsilon,
            FitField::D => r.d as f64,
        }
    }
}

impl std::str::FromStr for FitField {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
            Error::Spec(format!(
                "unknown fit field {s:?}; use n, m, nm, epsilon or d"
            ))
        })
    }
}

/// Fits a power law to `(x, y)` pairs. Values sharing an `x` are averaged
/// before taking logs.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    let mut groups: Vec<(f64, f64, usize)> = Vec::new();
    for &(x, y) in pairs {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::param("x", format!("must be positive, got {x}")));
        }
        match groups.iter_mut().find(|g| g.0 == x) {
            Some(g) => {
                g.1 += y;
                g.2 += 1;
            }
            None => groups.push((x, y, 1)),
        }
    }
    if groups.len() < 3 {
        return Err(Error::param(
            "x",
            format!("need at least 3 distinct values, got {}", groups.len()),
        ));
    }
    let pts: Vec<(f64, f64)> = groups
        .iter()
        .map(|&(x, s, c)| {
            let mean = s / c as f64;
            if mean > 0.0 && mean.is_finite() {
                Ok((x.ln(), mean.ln()))
            } else {
                Err(Error::param(
                    "y",
                    format!("mean at x = {x} is {mean}, not positive"),
                ))
            }
        })
        .collect::<Result<_>>()?;
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        points: pts.len(),
    })
}

/// [`fit_rate`] over the successful rows of a sweep.
pub fn fit_records(records: &[TrialRecord], field: FitField) -> Result<RateFit> {
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| {
            r.value
                .filter(|_| r.error.is_none())
                .map(|v| (field.of(r), v))
        })
        .collect();
    fit_rate(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn exact_power_law() {
        let pairs: Vec<_> = [1.0, 10.0, 100.0, 1000.0]
            .iter()
            .map(|&x| (x, 7.0 / x))
            .collect();
        let fit = fit_rate(&pairs).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-6);
        assert!((fit.intercept - 7f64.ln()).abs() < 1e-9);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_square_root_law() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut pairs = Vec::new();
        for &x in &[1e2, 1e3, 1e4, 1e5] {
            for _ in 0..20 {
                let noise = 1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0);
                pairs.push((x, 3.0 * f64::powf(x, -0.5) * noise));
            }
        }
        let fit = fit_rate(&pairs).unwrap();
        assert!((-0.55..=-0.45).contains(&fit.slope), "{}", fit.slope);
    }

    #[test]
    fn constant_and_degenerate() {
        let fit = fit_rate(&[(1.0, 2.0), (2.0, 2.0), (4.0, 2.0)]).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert!(fit_rate(&[(1.0, 2.0), (1.0, 3.0), (2.0, 2.0)]).is_err());
        assert!(fit_rate(&[(1.0, 2.0), (2.0, 0.0), (4.0, 2.0)]).is_err());
        assert!("nm".parse::<FitField>().is_ok());
        assert!("k".parse::<FitField>().is_err());
    }
}
