use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{chi_square_2x2, fisher_exact_2x2, ContingencyTable2x2, StatsError};
use crate::session::{Session, Verdict};
use crate::study::{GroundTruth, StudyManifest};

/// Expected-count threshold below which the exact test replaces chi-square.
const MIN_EXPECTED_FOR_CHI_SQUARE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestUsed {
    YatesChiSquare,
    FisherExact,
}

impl std::fmt::Display for TestUsed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::YatesChiSquare => "yates_chi_square",
            Self::FisherExact => "fisher_exact",
        })
    }
}

/// Yates-corrected chi-square when every expected count is at least 5,
/// otherwise Fisher's exact test.
pub fn significance_test(table: &ContingencyTable2x2) -> (TestUsed, f64) {
    if table.min_expected() >= MIN_EXPECTED_FOR_CHI_SQUARE {
        if let Ok(r) = chi_square_2x2(table, true) {
            return (TestUsed::YatesChiSquare, r.p_value);
        }
    }
    (TestUsed::FisherExact, fisher_exact_2x2(table))
}

/// Counts one finished session's final verdicts for one category.
///
/// `a`: originals labelled original (true negatives), `b`: originals
/// labelled modified, `c`: modified labelled original (false negatives),
/// `d`: modified labelled modified.
pub fn tabulate(
    manifest: &StudyManifest,
    session: &Session,
    category: &str,
) -> Result<ContingencyTable2x2, StatsError> {
    check_session(manifest, session)?;
    if manifest.category(category).is_none() {
        return Err(StatsError::UnknownCategory(category.to_string()));
    }
    let mut t = ContingencyTable2x2::new(0, 0, 0, 0);
    for (&position, &verdict) in session.verdicts() {
        let item = manifest
            .displayed(position)
            .expect("session item count matches the manifest");
        if item.category != category {
            continue;
        }
        let cell = match (item.ground_truth, verdict) {
            (GroundTruth::Original, Verdict::Original) => &mut t.a,
            (GroundTruth::Original, Verdict::Modified) => &mut t.b,
            (GroundTruth::Modified, Verdict::Original) => &mut t.c,
            (GroundTruth::Modified, Verdict::Modified) => &mut t.d,
        };
        *cell += 1;
    }
    Ok(t)
}

fn check_session(manifest: &StudyManifest, session: &Session) -> Result<(), StatsError> {
    if session.study_id() != manifest.study_id {
        return Err(StatsError::StudyMismatch {
            session: session.session_id().to_string(),
            expected: manifest.study_id.clone(),
            found: session.study_id().to_string(),
        });
    }
    if session.item_count() != manifest.item_count() {
        return Err(StatsError::ItemCountMismatch {
            session: session.session_id().to_string(),
            expected: manifest.item_count(),
            found: session.item_count(),
        });
    }
    if !session.is_finished() {
        return Err(StatsError::Unfinished(session.session_id().to_string()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub grader_id: String,
    pub session_id: String,
    pub category: String,
    /// Originals labelled original.
    pub tn_count: u64,
    /// Modified images labelled original.
    pub fn_count: u64,
    pub n_original: u64,
    pub n_modified: u64,
    pub tn_rate: f64,
    pub fn_rate: f64,
    pub p_value: f64,
    pub test_used: TestUsed,
}

impl RateRow {
    pub fn table(&self) -> ContingencyTable2x2 {
        ContingencyTable2x2::new(
            self.tn_count,
            self.n_original - self.tn_count,
            self.fn_count,
            self.n_modified - self.fn_count,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub study_id: String,
    pub categories: Vec<String>,
    pub rows: Vec<RateRow>,
}

fn rate(count: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        count as f64 / n as f64
    }
}

/// Tabulates and tests every (session, category) cell. Rows follow the
/// session order given, then the manifest's category order.
pub fn analyze_study(manifest: &StudyManifest, sessions: &[Session]) -> Result<RateReport, StatsError> {
    let mut rows = Vec::with_capacity(sessions.len() * manifest.categories.len());
    for session in sessions {
        check_session(manifest, session)?;
        for category in &manifest.categories {
            let t = tabulate(manifest, session, &category.name)?;
            let (test_used, p_value) = significance_test(&t);
            let [n_original, n_modified] = t.row_totals();
            rows.push(RateRow {
                grader_id: session.grader_id().to_string(),
                session_id: session.session_id().to_string(),
                category: category.name.clone(),
                tn_count: t.a,
                fn_count: t.c,
                n_original,
                n_modified,
                tn_rate: rate(t.a, n_original),
                fn_rate: rate(t.c, n_modified),
                p_value,
                test_used,
            });
        }
    }
    Ok(RateReport {
        study_id: manifest.study_id.clone(),
        categories: manifest.categories.iter().map(|c| c.name.clone()).collect(),
        rows,
    })
}

/// Two decimals from 0.01 up, one significant figure in scientific notation
/// below that: `0.21`, `0.01`, `3e-3`, `1`.
pub fn format_p(p: f64) -> String {
    if p >= 0.995 {
        "1".to_string()
    } else if p >= 0.01 {
        format!("{p:.2}")
    } else if p > 0.0 {
        format!("{p:.0e}")
    } else {
        "0".to_string()
    }
}

impl RateReport {
    pub fn row(&self, session_id: &str, category: &str) -> Option<&RateRow> {
        self.rows
            .iter()
            .find(|r| r.session_id == session_id && r.category == category)
    }

    /// Aligned text table: one line per session, `TN FN p` per category.
    pub fn render_table(&self) -> String {
        let mut sessions: Vec<(&str, &str)> = Vec::new();
        for r in &self.rows {
            if !sessions.iter().any(|(s, _)| *s == r.session_id) {
                sessions.push((&r.session_id, &r.grader_id));
            }
        }
        let label_width = sessions
            .iter()
            .map(|(_, g)| g.chars().count())
            .chain(["grader".len()])
            .max()
            .unwrap_or(6);
        const CELL: usize = 24;

        let mut out = String::new();
        let _ = write!(out, "{:label_width$}", "");
        for c in &self.categories {
            let n = self
                .rows
                .iter()
                .find(|r| &r.category == c)
                .map(|r| r.n_original + r.n_modified)
                .unwrap_or(0);
            let _ = write!(out, "  {:<CELL$}", format!("{c} (n={n})"));
        }
        out.push('\n');
        let _ = write!(out, "{:label_width$}", "grader");
        for _ in &self.categories {
            let _ = write!(out, "  {:<CELL$}", format!("{:>5} {:>5} {:>8}", "TN", "FN", "p"));
        }
        out.push('\n');
        for (session_id, grader) in sessions {
            let _ = write!(out, "{grader:label_width$}");
            for c in &self.categories {
                let cell = match self.row(session_id, c) {
                    Some(r) => format!("{:>5} {:>5} {:>8}", r.tn_count, r.fn_count, format_p(r.p_value)),
                    None => String::new(),
                };
                let _ = write!(out, "  {cell:<CELL$}");
            }
            out.push('\n');
        }
        out
    }
}
