use serde::{Deserialize, Serialize};

/// 2×2 counts. Rows are groups (original, modified); columns are verdicts
/// (labelled original, labelled modified).
///
/// ```text
///                  labelled original   labelled modified
/// original group          a                   b
/// modified group          c                   d
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContingencyTable2x2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable2x2 {
    pub const fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Self { a, b, c, d }
    }

    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    pub fn row_totals(&self) -> [u64; 2] {
        [self.a + self.b, self.c + self.d]
    }

    pub fn col_totals(&self) -> [u64; 2] {
        [self.a + self.c, self.b + self.d]
    }

    pub fn has_zero_marginal(&self) -> bool {
        self.row_totals().contains(&0) || self.col_totals().contains(&0)
    }

    /// Expected counts under independence, in `[a, b, c, d]` order.
    pub fn expected(&self) -> [f64; 4] {
        let n = self.total() as f64;
        let [r1, r2] = self.row_totals().map(|v| v as f64);
        let [c1, c2] = self.col_totals().map(|v| v as f64);
        if n == 0.0 {
            return [0.0; 4];
        }
        [r1 * c1 / n, r1 * c2 / n, r2 * c1 / n, r2 * c2 / n]
    }

    pub fn min_expected(&self) -> f64 {
        self.expected().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Both rows and both columns exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.d, self.c, self.b, self.a)
    }

    pub fn as_array(&self) -> [u64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}
