use serde::Serialize;

use super::{ContingencyTable2x2, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub p_value: f64,
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chi_square_sf_1df(statistic: f64) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    libm::erfc((0.5 * statistic).sqrt()).clamp(0.0, 1.0)
}

/// Pearson chi-square test of independence on a 2×2 table.
///
/// `χ² = N (|ad − bc| − k)² / ((a+b)(c+d)(a+c)(b+d))` with `k = N/2` under
/// the Yates continuity correction and `k = 0` without it. The corrected
/// deviation `|ad − bc| − N/2` is floored at zero, so tables closer to
/// independence than the correction itself give `χ² = 0` and `p = 1`.
pub fn chi_square_2x2(table: &ContingencyTable2x2, yates: bool) -> Result<ChiSquare, StatsError> {
    if table.has_zero_marginal() {
        return Err(StatsError::ZeroMarginal(table.as_array()));
    }
    let [a, b, c, d] = table.as_array().map(|v| v as f64);
    let n = a + b + c + d;
    let mut deviation = (a * d - b * c).abs();
    if yates {
        deviation = (deviation - 0.5 * n).max(0.0);
    }
    let denom = (a + b) * (c + d) * (a + c) * (b + d);
    let statistic = n * deviation * deviation / denom;
    Ok(ChiSquare {
        statistic,
        p_value: chi_square_sf_1df(statistic),
    })
}
