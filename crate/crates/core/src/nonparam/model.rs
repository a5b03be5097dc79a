use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::mean_multi::Regime;

/// Floor below which a cell's estimated mass is treated as empty.
pub const MIN_P_FLOOR: f64 = 1e-6;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridTask {
    Classification,
    Regression,
}

/// Trained histogram model on a cube grid.
///
/// `q_hat[k]` estimates `E[Y 1(X ∈ cell k)]` and, for regression, `p_hat[k]`
/// estimates `P(X ∈ cell k)`. Entries `B..K` are padding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridModel {
    pub schema_version: u32,
    pub task: GridTask,
    pub d: usize,
    pub l: f64,
    pub cells: usize,
    pub order: usize,
    pub q_hat: Vec<f64>,
    pub p_hat: Option<Vec<f64>>,
    pub p_floor: f64,
    pub label_bound: f64,
    pub epsilon: f64,
    pub regime: Regime,
    pub seed: u64,
}

impl GridModel {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.d, self.l)
    }

    /// `sign(q̂)` at the cell of `x`, with `sign(0) = +1`.
    pub fn predict_class(&self, x: &[f64]) -> Result<f64> {
        let cell = self.grid()?.cell_of(x);
        Ok(sign(self.q_hat[cell]))
    }

    /// `q̂/p̂` at the cell of `x`, clipped to `[-T, T]`; 0 where `|p̂| < p_floor`.
    pub fn predict_reg(&self, x: &[f64], t: f64) -> Result<f64> {
        let p_hat = self
            .p_hat
            .as_ref()
            .ok_or_else(|| Error::param("model", "classification model has no cell masses"))?;
        let cell = self.grid()?.cell_of(x);
        Ok(ratio(self.q_hat[cell], p_hat[cell], self.p_floor, t))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Spec(format!(
                "unsupported model schema {}",
                model.schema_version
            )));
        }
        if model.q_hat.len() != model.order
            || model.p_hat.as_ref().is_some_and(|p| p.len() != model.order)
        {
            return Err(Error::Spec("model vectors do not match its order".into()));
        }
        let grid = model.grid()?;
        if grid.cells() != model.cells || grid.order() != model.order {
            return Err(Error::Spec(
                "model grid does not match its cell count".into(),
            ));
        }
        Ok(model)
    }
}

pub(crate) fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

pub(crate) fn ratio(q: f64, p: f64, floor: f64, t: f64) -> f64 {
    if !(p.abs() >= floor) {
        0.0
    } else {
        (q / p).clamp(-t, t)
    }
}
