use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;
use crate::DeformError;

pub const DEFAULT_GRID_ROWS: usize = 3;
pub const DEFAULT_GRID_COLS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellDisplacement {
    pub dx: f64,
    pub dy: f64,
}

/// Coarse lattice of random control displacements, in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationGrid {
    rows: usize,
    cols: usize,
    cells: Vec<CellDisplacement>,
    sigma: f64,
    seed: u64,
}

/// Samples `rows × cols` control displacements, each component `sigma * z`
/// with `z` standard normal.
///
/// Cells are filled row-major. Each cell consumes one Box–Muller pair from a
/// [`SplitMix64`] stream seeded with `seed`: the cosine branch becomes `dx`,
/// the sine branch `dy`. The stream does not depend on `sigma`, so grids for
/// different sigmas with the same seed are exact scalar multiples.
pub fn sample_grid(
    rows: usize,
    cols: usize,
    sigma: f64,
    seed: u64,
) -> Result<DeformationGrid, DeformError> {
    if rows < 2 || cols < 2 {
        return Err(DeformError::GridShape { rows, cols });
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(DeformError::Sigma(sigma));
    }
    let mut rng = SplitMix64::new(seed);
    let cells = (0..rows * cols)
        .map(|_| {
            let (z0, z1) = rng.normal_pair();
            CellDisplacement {
                dx: sigma * z0,
                dy: sigma * z1,
            }
        })
        .collect();
    Ok(DeformationGrid {
        rows,
        cols,
        cells,
        sigma,
        seed,
    })
}

impl DeformationGrid {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cells(&self) -> &[CellDisplacement] {
        &self.cells
    }

    pub fn cell(&self, row: usize, col: usize) -> CellDisplacement {
        self.cells[row * self.cols + col]
    }

    pub fn dx_values(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.dx).collect()
    }

    pub fn dy_values(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.dy).collect()
    }

    /// Pixel coordinate of control node `(row, col)` in a `width × height`
    /// image. Nodes span the full image, corners included.
    pub fn node_position(&self, row: usize, col: usize, width: usize, height: usize) -> (f64, f64) {
        (
            node_coordinate(col, self.cols, width),
            node_coordinate(row, self.rows, height),
        )
    }
}

pub(crate) fn node_coordinate(index: usize, count: usize, extent: usize) -> f64 {
    index as f64 * (extent - 1) as f64 / (count - 1) as f64
}
