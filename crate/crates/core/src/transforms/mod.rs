//! Orthogonal transforms used to move data between supports: Sylvester
//! Hadamard matrices and Kashin tight-frame representations.

mod hadamard;
pub(crate) mod kashin;

pub use hadamard::{fwht, is_power_of_two, next_power_of_two, HadamardMatrix};
pub use kashin::{build_kashin_frame, KashinConfig, KashinFrame};
