//! Rate tables from the original three-grader study, kept as golden data.
//!
//! Each cell holds the true-negative and false-negative counts of one
//! grader in one sigma band and the p-value exactly as it was printed.

use serde::Serialize;

use super::{significance_test, ContingencyTable2x2, TestUsed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReferenceCell {
    /// 1 for the main four-band study, 2 for the refined medium bands.
    pub table: u8,
    pub grader: u8,
    pub category: &'static str,
    /// Images per group (originals = modified).
    pub group_size: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub reported_p: &'static str,
}

const fn cell(table: u8, grader: u8, category: &'static str, group_size: u64, tn: u64, fn_: u64, reported_p: &'static str) -> ReferenceCell {
    ReferenceCell {
        table,
        grader,
        category,
        group_size,
        tn,
        fn_,
        reported_p,
    }
}

pub const REFERENCE_CELLS: [ReferenceCell; 18] = [
    cell(1, 1, "LDA", 100, 85, 77, "0.21"),
    cell(1, 1, "MDA", 100, 85, 76, "0.15"),
    cell(1, 1, "HDA", 100, 91, 75, "4e-4"),
    cell(1, 1, "CTRL", 20, 20, 13, "8e-3"),
    cell(1, 2, "LDA", 100, 75, 71, "0.63"),
    cell(1, 2, "MDA", 100, 73, 65, "0.28"),
    cell(1, 2, "HDA", 100, 81, 61, "3e-3"),
    cell(1, 2, "CTRL", 20, 17, 4, "4e-3"),
    cell(1, 3, "LDA", 100, 76, 76, "1"),
    cell(1, 3, "MDA", 100, 80, 63, "0.01"),
    cell(1, 3, "HDA", 100, 83, 50, "1e-4"),
    cell(1, 3, "CTRL", 20, 15, 4, "1e-3"),
    cell(2, 1, "S7-9", 100, 89, 93, "0.43"),
    cell(2, 1, "S10-11", 100, 73, 58, "0.037"),
    cell(2, 2, "S7-9", 100, 93, 89, "0.47"),
    cell(2, 2, "S10-11", 100, 48, 27, "0.003"),
    cell(2, 3, "S7-9", 100, 99, 93, "0.55"),
    cell(2, 3, "S10-11", 100, 80, 50, "<1e-3"),
];

impl ReferenceCell {
    pub fn contingency(&self) -> ContingencyTable2x2 {
        ContingencyTable2x2::new(
            self.tn,
            self.group_size - self.tn,
            self.fn_,
            self.group_size - self.fn_,
        )
    }

    /// Whether the printed p-value is below 0.05.
    pub fn reported_significant(&self) -> bool {
        match DisplayedP::parse(self.reported_p) {
            Some(DisplayedP::Below(bound)) => bound <= 0.05,
            Some(DisplayedP::Value { value, .. }) => value < 0.05,
            None => false,
        }
    }
}

/// A p-value as printed, with the precision implied by its notation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DisplayedP {
    /// `0.21` (2 decimals), `4e-4` (1 significant figure), `1` (0 decimals).
    Value { value: f64, precision: Precision },
    /// `<1e-3`.
    Below(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Decimals(u32),
    SignificantFigures(u32),
}

impl DisplayedP {
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some(rest) = text.strip_prefix('<') {
            return rest.trim().parse().ok().map(Self::Below);
        }
        let value: f64 = text.parse().ok()?;
        let precision = match text.split_once(['e', 'E']) {
            Some((mantissa, _)) => {
                let digits = mantissa
                    .chars()
                    .filter(char::is_ascii_digit)
                    .skip_while(|&c| c == '0')
                    .count();
                Precision::SignificantFigures(digits.max(1) as u32)
            }
            None => Precision::Decimals(text.split_once('.').map_or(0, |(_, f)| f.len() as u32)),
        };
        Some(Self::Value { value, precision })
    }

    /// True when `p` prints as this value at this precision, rounding half
    /// away from zero.
    pub fn matches(&self, p: f64) -> bool {
        match *self {
            Self::Below(bound) => p < bound,
            Self::Value { value, precision } => {
                let rounded = match precision {
                    Precision::Decimals(k) => round_to(p, 10f64.powi(-(k as i32))),
                    Precision::SignificantFigures(s) => {
                        if p <= 0.0 {
                            0.0
                        } else {
                            let exp = p.log10().floor() as i32;
                            round_to(p, 10f64.powi(exp + 1 - s as i32))
                        }
                    }
                };
                (rounded - value).abs() <= 1e-9 * value.abs().max(1e-300)
            }
        }
    }
}

fn round_to(p: f64, quantum: f64) -> f64 {
    (p / quantum).round() * quantum
}

/// True when `p` agrees with a printed p-value at its displayed precision.
pub fn agrees_at_display_precision(p: f64, displayed: &str) -> bool {
    DisplayedP::parse(displayed).is_some_and(|d| d.matches(p))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceComparison {
    pub cell: ReferenceCell,
    pub test_used: TestUsed,
    pub p_value: f64,
    pub agrees: bool,
    pub same_significance: bool,
}

/// Recomputes every reference cell with the engine's test selection.
pub fn reproduce_reference() -> Vec<ReferenceComparison> {
    REFERENCE_CELLS
        .iter()
        .map(|cell| {
            let (test_used, p_value) = significance_test(&cell.contingency());
            ReferenceComparison {
                cell: *cell,
                test_used,
                p_value,
                agrees: agrees_at_display_precision(p_value, cell.reported_p),
                same_significance: (p_value < 0.05) == cell.reported_significant(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_notations() {
        assert_eq!(
            DisplayedP::parse("0.21"),
            Some(DisplayedP::Value {
                value: 0.21,
                precision: Precision::Decimals(2)
            })
        );
        assert_eq!(
            DisplayedP::parse("4e-4"),
            Some(DisplayedP::Value {
                value: 4e-4,
                precision: Precision::SignificantFigures(1)
            })
        );
        assert_eq!(
            DisplayedP::parse("1"),
            Some(DisplayedP::Value {
                value: 1.0,
                precision: Precision::Decimals(0)
            })
        );
        assert_eq!(DisplayedP::parse("<1e-3"), Some(DisplayedP::Below(1e-3)));
        assert_eq!(DisplayedP::parse("n/a"), None);
    }

    #[test]
    fn display_agreement() {
        assert!(agrees_at_display_precision(0.20705, "0.21"));
        assert!(!agrees_at_display_precision(0.2149, "0.20"));
        assert!(agrees_at_display_precision(0.0122, "0.01"));
        assert!(agrees_at_display_precision(0.003068, "3e-3"));
        assert!(!agrees_at_display_precision(0.0036, "3e-3"));
        assert!(agrees_at_display_precision(0.037298, "0.037"));
        assert!(agrees_at_display_precision(1.0, "1"));
        assert!(agrees_at_display_precision(1.7e-5, "<1e-3"));
        assert!(!agrees_at_display_precision(2e-3, "<1e-3"));
    }

    #[test]
    fn reported_significance() {
        let sig: Vec<bool> = REFERENCE_CELLS.iter().map(|c| c.reported_significant()).collect();
        assert_eq!(
            sig,
            [false, false, true, true, false, false, true, true, false, true, true, true, false, true, false, true, false, true]
        );
    }

    #[test]
    fn contingency_layout() {
        let c = REFERENCE_CELLS[11];
        assert_eq!(c.contingency(), ContingencyTable2x2::new(15, 5, 4, 16));
    }
}
