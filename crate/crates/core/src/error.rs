use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeformError {
    #[error("image dimensions {width}x{height} are too small (need at least 2x2)")]
    Dimensions { width: usize, height: usize },
    #[error("buffer holds {actual} values, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("control grid must be at least 2x2, got {rows}x{cols}")]
    GridShape { rows: usize, cols: usize },
    #[error("sigma must be finite and non-negative, got {0}")]
    Sigma(f64),
    #[error("displacement field contains NaN or infinite values")]
    NonFiniteField,
    #[error("image is {image:?} but field is {field:?}")]
    DimensionMismatch {
        image: (usize, usize),
        field: (usize, usize),
    },
    #[error("field {width}x{height} has no interior pixels")]
    NoInterior { width: usize, height: usize },
    #[error("grid overlay spacing must be at least 2, got {0}")]
    Spacing(usize),
    #[error("field check needs at least one trial")]
    NoTrials,
}
