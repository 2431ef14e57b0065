use super::{CMatrix, LinalgError};

/// Absolute/relative tolerance pair used by every numerical decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 1e-10,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Result<Self, LinalgError> {
        if !(abs >= 0.0 && rel >= 0.0) || !abs.is_finite() || !rel.is_finite() {
            return Err(LinalgError::InvalidTolerance(format!(
                "abs={abs}, rel={rel} must be finite and non-negative"
            )));
        }
        if abs == 0.0 && rel == 0.0 {
            return Err(LinalgError::InvalidTolerance(
                "abs and rel cannot both be zero".into(),
            ));
        }
        Ok(Tolerance { abs, rel })
    }

    /// Same value for both components.
    pub fn uniform(value: f64) -> Result<Self, LinalgError> {
        Self::new(value, value)
    }

    /// `abs + rel·scale`.
    pub fn threshold(&self, scale: f64) -> f64 {
        self.abs + self.rel * scale
    }

    /// Threshold for matrix-level residuals: `abs + rel·n·‖A‖_F`.
    pub fn scaled(&self, a: &CMatrix) -> f64 {
        self.threshold(a.n() as f64 * a.norm_fro())
    }
}
