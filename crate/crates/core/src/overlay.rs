//! Grid-line visualisation of a displacement field.

use crate::field::DisplacementField;
use crate::pixel::PixelGrid;
use crate::DeformError;

pub const OVERLAY_INTENSITY: u8 = 255;

/// Polylines of a regular lattice with spacing `spacing`, each vertex at
/// integer `(x, y)` moved to `(x + ux, y + uy)`.
///
/// Horizontal lines come first (top to bottom), then vertical lines (left to
/// right). Every line has one vertex per pixel along it.
pub fn displaced_grid_lines(
    field: &DisplacementField,
    spacing: usize,
) -> Result<Vec<Vec<(f64, f64)>>, DeformError> {
    if spacing < 2 {
        return Err(DeformError::Spacing(spacing));
    }
    let (w, h) = (field.width(), field.height());
    let vertex = |x: usize, y: usize| {
        let (ux, uy) = field.at(x, y);
        (x as f64 + ux, y as f64 + uy)
    };
    let mut lines = Vec::new();
    for y in (0..h).step_by(spacing) {
        lines.push((0..w).map(|x| vertex(x, y)).collect());
    }
    for x in (0..w).step_by(spacing) {
        lines.push((0..h).map(|y| vertex(x, y)).collect());
    }
    Ok(lines)
}

/// Largest distance any overlay vertex moves from its undisplaced position.
pub fn max_vertex_displacement(field: &DisplacementField, spacing: usize) -> Result<f64, DeformError> {
    if spacing < 2 {
        return Err(DeformError::Spacing(spacing));
    }
    let mut worst: f64 = 0.0;
    for y in 0..field.height() {
        for x in 0..field.width() {
            if y % spacing == 0 || x % spacing == 0 {
                let (ux, uy) = field.at(x, y);
                worst = worst.max(ux.hypot(uy));
            }
        }
    }
    Ok(worst)
}

/// Draws the displaced lattice onto a copy of `image`.
pub fn render_grid_overlay(
    image: &PixelGrid,
    field: &DisplacementField,
    spacing: usize,
) -> Result<PixelGrid, DeformError> {
    if image.width() != field.width() || image.height() != field.height() {
        return Err(DeformError::DimensionMismatch {
            image: (image.width(), image.height()),
            field: (field.width(), field.height()),
        });
    }
    let mut out = image.clone();
    for line in displaced_grid_lines(field, spacing)? {
        for pair in line.windows(2) {
            draw_segment(&mut out, pair[0], pair[1]);
        }
        if line.len() == 1 {
            plot(&mut out, line[0].0, line[0].1);
        }
    }
    Ok(out)
}

fn plot(img: &mut PixelGrid, x: f64, y: f64) {
    let (xr, yr) = (x.round(), y.round());
    if xr >= 0.0 && yr >= 0.0 && (xr as usize) < img.width() && (yr as usize) < img.height() {
        img.set(xr as usize, yr as usize, OVERLAY_INTENSITY);
    }
}

fn draw_segment(img: &mut PixelGrid, a: (f64, f64), b: (f64, f64)) {
    let steps = (b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil().max(1.0);
    // segments longer than the image diagonal are clipped by `plot` anyway
    let steps = steps.min(4.0 * (img.width() + img.height()) as f64) as usize;
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        plot(img, a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
    }
}
