use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Convergence status of a numerical estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Status {
    Converged,
    /// The error indicator exceeds the relative floor; the value is partial.
    NonConverged,
    /// Geometric growth detected; `panel` is the index where it was seen.
    Divergent { panel: usize },
}

/// Truncation parameters attached to every estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Series truncation (number of Taylor coefficients kept), if any.
    pub series: Option<usize>,
    /// Radial grid depth `j` (grid reaches `1 - 2^-j`).
    pub depth: u32,
    /// Angular node count, if a polar rule was used.
    pub angular: Option<usize>,
}

/// A nonnegative numerical value with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub err: f64,
    pub truncation: Truncation,
    /// Which quantity this is, e.g. `"hardy2_lp"`.
    pub tag: String,
    pub status: Status,
    /// Anchor where a supremum was attained.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor: Option<[f64; 2]>,
}

impl NormEstimate {
    pub fn new(tag: &str, value: f64, err: f64, truncation: Truncation) -> Self {
        NormEstimate {
            value,
            err: err.abs(),
            truncation,
            tag: tag.to_string(),
            status: Status::Converged,
            anchor: None,
        }
    }

    pub fn zero(tag: &str, truncation: Truncation) -> Self {
        Self::new(tag, 0.0, 0.0, truncation)
    }

    pub fn divergent(tag: &str, panel: usize, truncation: Truncation) -> Self {
        NormEstimate {
            value: f64::INFINITY,
            err: f64::INFINITY,
            truncation,
            tag: tag.to_string(),
            status: Status::Divergent { panel },
            anchor: None,
        }
    }

    pub fn with_anchor(mut self, a: Complex64) -> Self {
        self.anchor = Some([a.re, a.im]);
        self
    }

    pub fn with_status(mut self, s: Status) -> Self {
        self.status = s;
        self
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self.status, Status::Divergent { .. })
    }

    /// Mark non-converged when the relative error exceeds `floor`.
    pub fn check_floor(mut self, floor: f64) -> Self {
        if self.status == Status::Converged && self.err > floor * self.value.abs().max(f64::MIN_POSITIVE) {
            self.status = Status::NonConverged;
        }
        self
    }
}
