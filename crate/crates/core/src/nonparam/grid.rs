use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::next_power_of_two;

/// Largest number of cells a grid may have.
pub const MAX_CELLS: usize = 1 << 22;

/// Partition of `[0, 1]^d` into cubes of side `l`; the last cube on each
/// axis is short when `1/l` is not an integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    d: usize,
    side: f64,
    per_axis: usize,
}

impl Grid {
    pub fn new(d: usize, side: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("d", "dimension must be at least 1"));
        }
        if !(side > 0.0 && side <= 1.0) {
            return Err(Error::param(
                "l",
                format!("bin side must lie in (0, 1], got {side}"),
            ));
        }
        let per_axis = ((1.0 / side) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let cells = (per_axis as f64).powi(d as i32);
        if cells > MAX_CELLS as f64 {
            return Err(Error::param(
                "l",
                format!("{cells} cells exceed the limit {MAX_CELLS}"),
            ));
        }
        Ok(Self { d, side, per_axis })
    }

    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn side(&self) -> f64 {
        self.side
    }
    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    /// Number of cells `B`.
    pub fn cells(&self) -> usize {
        self.per_axis.pow(self.d as u32)
    }

    /// Hadamard order `K = 2^⌈log₂ B⌉`.
    pub fn order(&self) -> usize {
        next_power_of_two(self.cells())
    }

    /// 0-based cell of `x`. A point on a cell boundary belongs to the lower
    /// cell; coordinate 0 is the fastest-varying index.
    pub fn cell_of(&self, x: &[f64]) -> usize {
        let mut index = 0;
        let mut stride = 1;
        for &v in x.iter().take(self.d) {
            let c = ((v / self.side).ceil() - 1.0).max(0.0) as usize;
            index += c.min(self.per_axis - 1) * stride;
            stride *= self.per_axis;
        }
        index
    }
}
