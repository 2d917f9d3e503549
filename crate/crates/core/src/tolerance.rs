use serde::{Deserialize, Serialize};

/// Shared numerical tolerance: two quantities agree when they are within
/// `abs` absolutely or within `rel` relatively, whichever is looser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance { abs: 1e-10, rel: 1e-9 };

    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    /// Allowed slack for a quantity whose natural magnitude is `scale`.
    pub fn slack(&self, scale: f64) -> f64 {
        self.abs.max(self.rel * scale.abs())
    }

    pub fn close(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.slack(a.abs().max(b.abs()))
    }

    /// `value ≥ 0` up to slack relative to `scale`.
    pub fn nonneg(&self, value: f64, scale: f64) -> bool {
        value >= -self.slack(scale)
    }

    /// Seminorm treated as zero.
    pub fn is_null(&self, norm: f64) -> bool {
        norm <= self.abs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn looser_of_abs_and_rel() {
        let t = Tolerance::DEFAULT;
        assert!(t.close(1.0, 1.0 + 5e-11));
        assert!(t.close(1e6, 1e6 + 1e-4));
        assert!(!t.close(1.0, 1.0 + 1e-8));
        assert!(t.nonneg(-1e-11, 0.0));
        assert!(!t.nonneg(-1e-6, 1.0));
    }
}
