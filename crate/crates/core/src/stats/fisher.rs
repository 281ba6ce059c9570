use super::ContingencyTable2x2;

/// Tolerance for treating two point probabilities as tied.
const TIE_TOLERANCE: f64 = 1e-7;

fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Two-sided Fisher exact test.
///
/// With all margins fixed the table is determined by `a`, which follows a
/// hypergeometric law. The p-value sums the probabilities of every table
/// whose probability does not exceed the observed one (within a relative
/// tolerance of 1e-7 for ties).
pub fn fisher_exact_2x2(table: &ContingencyTable2x2) -> f64 {
    let [r1, r2] = table.row_totals();
    let [c1, _] = table.col_totals();
    let n = table.total();
    if table.has_zero_marginal() {
        return 1.0;
    }
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let denom = ln_choose(n, c1);
    let ln_p = |x: u64| ln_choose(r1, x) + ln_choose(r2, c1 - x) - denom;

    let observed = ln_p(table.a);
    let cutoff = observed + TIE_TOLERANCE.ln_1p();
    let total: f64 = (lo..=hi)
        .map(ln_p)
        .filter(|&lp| lp <= cutoff)
        .map(f64::exp)
        .sum();
    total.clamp(0.0, 1.0)
}
