use serde::{Deserialize, Serialize};

use super::{normal_quantile, StatsError};

/// Inputs of a two-proportion non-inferiority sample size calculation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoninferiorityDesign {
    pub p_standard: f64,
    pub p_test: f64,
    pub margin: f64,
    /// One-sided significance level.
    pub alpha: f64,
    pub power: f64,
}

impl NoninferiorityDesign {
    pub fn new(p_standard: f64, p_test: f64, margin: f64, alpha: f64, power: f64) -> Result<Self, StatsError> {
        let d = Self {
            p_standard,
            p_test,
            margin,
            alpha,
            power,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        let open01 = |v: f64| v > 0.0 && v < 1.0;
        let bad = |m: &str| Err(StatsError::InvalidDesign(m.into()));
        if !open01(self.p_standard) || !open01(self.p_test) || !open01(self.margin) {
            return bad("proportions and margin must lie strictly between 0 and 1");
        }
        if !open01(self.alpha) || !open01(self.power) {
            return bad("alpha and power must lie strictly between 0 and 1");
        }
        if self.margin <= (self.p_standard - self.p_test).abs() {
            return bad("margin must exceed the assumed difference |p_standard - p_test|");
        }
        Ok(())
    }
}

/// Per-group sample size for a one-sided non-inferiority comparison of two
/// proportions, unpooled normal approximation:
///
/// `n = ⌈(z₁₋α + z_power)² (p_s(1−p_s) + p_t(1−p_t)) / (δ − (p_s − p_t))²⌉`
pub fn noninferiority_sample_size(design: &NoninferiorityDesign) -> Result<u64, StatsError> {
    design.validate()?;
    let NoninferiorityDesign {
        p_standard: ps,
        p_test: pt,
        margin,
        alpha,
        power,
    } = *design;
    let z = normal_quantile(1.0 - alpha) + normal_quantile(power);
    let variance = ps * (1.0 - ps) + pt * (1.0 - pt);
    let gap = margin - (ps - pt);
    if gap <= 0.0 {
        return Err(StatsError::InvalidDesign("non-positive effective margin".into()));
    }
    let n = z * z * variance / (gap * gap);
    // keep an exact integer from being bumped up by rounding noise
    Ok((n - 1e-9).ceil().max(1.0) as u64)
}
