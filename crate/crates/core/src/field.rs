use serde::{Deserialize, Serialize};

use crate::grid::{node_coordinate, DeformationGrid};
use crate::pixel::check_dims;
use crate::spline::SplineSurface;
use crate::DeformError;

/// Dense per-pixel displacement `(ux, uy)` in pixels, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementField {
    width: usize,
    height: usize,
    ux: Vec<f64>,
    uy: Vec<f64>,
}

impl DisplacementField {
    pub fn new(width: usize, height: usize, ux: Vec<f64>, uy: Vec<f64>) -> Result<Self, DeformError> {
        check_dims(width, height)?;
        let expected = width * height;
        for len in [ux.len(), uy.len()] {
            if len != expected {
                return Err(DeformError::BufferLength {
                    expected,
                    actual: len,
                });
            }
        }
        if ux.iter().chain(&uy).any(|v| !v.is_finite()) {
            return Err(DeformError::NonFiniteField);
        }
        Ok(Self {
            width,
            height,
            ux,
            uy,
        })
    }

    pub fn zero(width: usize, height: usize) -> Result<Self, DeformError> {
        Self::new(width, height, vec![0.0; width * height], vec![0.0; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> (f64, f64),
    ) -> Result<Self, DeformError> {
        let mut ux = Vec::with_capacity(width * height);
        let mut uy = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                ux.push(a);
                uy.push(b);
            }
        }
        Self::new(width, height, ux, uy)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ux(&self) -> &[f64] {
        &self.ux
    }

    pub fn uy(&self) -> &[f64] {
        &self.uy
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.ux[i], self.uy[i])
    }

    /// Largest displacement magnitude over all pixels.
    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes().fold(0.0, f64::max)
    }

    pub fn min_magnitude(&self) -> f64 {
        self.magnitudes().fold(f64::INFINITY, f64::min)
    }

    fn magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.ux.iter().zip(&self.uy).map(|(a, b)| a.hypot(*b))
    }

    /// Largest absolute central-difference partial derivative of either
    /// component over interior pixels.
    pub fn max_abs_gradient(&self) -> f64 {
        let mut worst: f64 = 0.0;
        self.for_each_interior_gradient(|g| {
            worst = worst.max(g.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
        });
        worst
    }

    /// Calls `f([dux/dx, dux/dy, duy/dx, duy/dy])` for every interior pixel.
    fn for_each_interior_gradient(&self, mut f: impl FnMut([f64; 4])) {
        let w = self.width;
        for y in 1..self.height.saturating_sub(1) {
            for x in 1..w.saturating_sub(1) {
                let i = y * w + x;
                f([
                    (self.ux[i + 1] - self.ux[i - 1]) * 0.5,
                    (self.ux[i + w] - self.ux[i - w]) * 0.5,
                    (self.uy[i + 1] - self.uy[i - 1]) * 0.5,
                    (self.uy[i + w] - self.uy[i - w]) * 0.5,
                ]);
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, DeformError> {
        Self::new(
            self.width,
            self.height,
            self.ux.iter().map(|v| v * factor).collect(),
            self.uy.iter().map(|v| v * factor).collect(),
        )
    }
}

/// The continuous spline interpolant behind a [`DisplacementField`].
#[derive(Debug, Clone)]
pub struct SplineField {
    width: usize,
    height: usize,
    ux: SplineSurface,
    uy: SplineSurface,
}

impl SplineField {
    /// Places the grid's control nodes at
    /// `(j (width-1)/(cols-1), i (height-1)/(rows-1))` and fits one natural
    /// cubic tensor-product surface per displacement component.
    pub fn fit(grid: &DeformationGrid, width: usize, height: usize) -> Result<Self, DeformError> {
        check_dims(width, height)?;
        let x_knots: Vec<f64> = (0..grid.cols())
            .map(|j| node_coordinate(j, grid.cols(), width))
            .collect();
        let y_knots: Vec<f64> = (0..grid.rows())
            .map(|i| node_coordinate(i, grid.rows(), height))
            .collect();
        Ok(Self {
            width,
            height,
            ux: SplineSurface::new(x_knots.clone(), y_knots.clone(), grid.dx_values()),
            uy: SplineSurface::new(x_knots, y_knots, grid.dy_values()),
        })
    }

    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        (self.ux.eval(x, y), self.uy.eval(x, y))
    }

    pub fn rasterize(&self) -> Result<DisplacementField, DeformError> {
        DisplacementField::new(
            self.width,
            self.height,
            self.ux.rasterize(self.width, self.height),
            self.uy.rasterize(self.width, self.height),
        )
    }
}

/// Interpolates the control grid to a dense per-pixel field.
pub fn build_field(
    grid: &DeformationGrid,
    width: usize,
    height: usize,
) -> Result<DisplacementField, DeformError> {
    SplineField::fit(grid, width, height)?.rasterize()
}

/// Minimum over interior pixels of `det(I + ∇u)`, with `∇u` from central
/// differences. Positive means no fold-over anywhere.
pub fn min_jacobian(field: &DisplacementField) -> Result<f64, DeformError> {
    if field.width < 3 || field.height < 3 {
        return Err(DeformError::NoInterior {
            width: field.width,
            height: field.height,
        });
    }
    let mut min = f64::INFINITY;
    field.for_each_interior_gradient(|[dxx, dxy, dyx, dyy]| {
        let det = (1.0 + dxx) * (1.0 + dyy) - dxy * dyx;
        min = min.min(det);
    });
    Ok(min)
}
