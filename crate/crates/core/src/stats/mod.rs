//! Rate tables and significance tests for grading sessions.

mod chi_square;
mod fisher;
mod normal;
pub mod reference;
mod report;
mod sample_size;
mod table;

use thiserror::Error;

pub use chi_square::{chi_square_2x2, chi_square_sf_1df, ChiSquare};
pub use fisher::fisher_exact_2x2;
pub use normal::{normal_cdf, normal_quantile};
pub use report::{analyze_study, format_p, significance_test, tabulate, RateReport, RateRow, TestUsed};
pub use sample_size::{noninferiority_sample_size, NoninferiorityDesign};
pub use table::ContingencyTable2x2;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("table {0:?} has an empty row or column")]
    ZeroMarginal([u64; 4]),
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("session {0} is not finished")]
    Unfinished(String),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("session {session} belongs to study {found}, expected {expected}")]
    StudyMismatch {
        session: String,
        expected: String,
        found: String,
    },
    #[error("session {session} has {found} items, study has {expected}")]
    ItemCountMismatch {
        session: String,
        expected: usize,
        found: usize,
    },
}
