use serde::{Deserialize, Serialize};

/// A rate precondition that did not hold for a run. Estimation still
/// proceeds; the harness records the warning next to the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub check: String,
    pub observed: f64,
    pub required: f64,
}

impl Warning {
    pub fn new(check: impl Into<String>, observed: f64, required: f64) -> Self {
        Self {
            check: check.into(),
            observed,
            required,
        }
    }
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: observed {:.4} < required {:.4}",
            self.check, self.observed, self.required
        )
    }
}
