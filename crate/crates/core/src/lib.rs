//! Elastic deformation of 8-bit grayscale B-scans, and the tooling around a
//! blinded grading study of the deformed images.
//!
//! The deformation pipeline is three steps:
//!
//! 1. [`sample_grid`]: a coarse `rows × cols` lattice of 2D displacements,
//!    each component drawn from `N(0, σ²)` through a seeded, documented RNG.
//! 2. [`build_field`]: tensor-product natural cubic splines spread the
//!    lattice over every pixel.
//! 3. [`warp`]: each output pixel samples the source bilinearly at its
//!    displaced position.
//!
//! [`deform`] runs all three. The [`study`], [`session`] and [`stats`]
//! modules build blinded study sets, record grader verdicts and analyse
//! them.

mod error;

pub mod diagnostics;
pub mod field;
pub mod grid;
pub mod overlay;
pub mod pixel;
pub mod raster;
pub mod rng;
pub mod session;
pub mod spline;
pub mod stats;
pub mod study;
pub mod warp;

pub use error::DeformError;
pub use field::{build_field, min_jacobian, DisplacementField, SplineField};
pub use grid::{sample_grid, CellDisplacement, DeformationGrid};
pub use overlay::render_grid_overlay;
pub use pixel::PixelGrid;
pub use raster::{load_image, save_image, RasterError};
pub use warp::{deform, warp, BorderPolicy, Deformation};
