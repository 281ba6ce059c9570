use serde::{Deserialize, Serialize};

use crate::field::{build_field, DisplacementField};
use crate::grid::{sample_grid, DeformationGrid};
use crate::pixel::PixelGrid;
use crate::DeformError;

/// How samples that land outside the raster are resolved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BorderPolicy {
    /// Repeat the nearest edge pixel.
    #[default]
    Clamp,
    /// Treat everything outside as black.
    Zero,
    /// Mirror about the edge pixel centres (`-1 -> 1`, `w -> w - 2`).
    Reflect,
}

impl std::str::FromStr for BorderPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clamp" => Ok(Self::Clamp),
            "zero" => Ok(Self::Zero),
            "reflect" => Ok(Self::Reflect),
            other => Err(format!("unknown border policy `{other}` (clamp, zero, reflect)")),
        }
    }
}

impl std::fmt::Display for BorderPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Clamp => "clamp",
            Self::Zero => "zero",
            Self::Reflect => "reflect",
        })
    }
}

impl BorderPolicy {
    /// Maps an integer coordinate to an in-range index, or `None` for zero fill.
    #[inline]
    fn resolve(self, i: i64, n: usize) -> Option<usize> {
        let last = n as i64 - 1;
        if (0..=last).contains(&i) {
            return Some(i as usize);
        }
        match self {
            Self::Clamp => Some(i.clamp(0, last) as usize),
            Self::Zero => None,
            Self::Reflect => {
                if last == 0 {
                    return Some(0);
                }
                let period = 2 * last;
                let m = i.rem_euclid(period);
                Some(if m > last { period - m } else { m } as usize)
            }
        }
    }
}

#[inline]
fn fetch(image: &PixelGrid, x: i64, y: i64, border: BorderPolicy) -> f64 {
    match (
        border.resolve(x, image.width()),
        border.resolve(y, image.height()),
    ) {
        (Some(x), Some(y)) => f64::from(image.get(x, y)),
        _ => 0.0,
    }
}

/// Bilinear sample at a continuous coordinate.
pub fn sample_bilinear(image: &PixelGrid, x: f64, y: f64, border: BorderPolicy) -> f64 {
    // bound coordinates so the integer conversion below cannot saturate
    let limit = 4.0 * (image.width().max(image.height()) as f64) + 4.0;
    let x = x.clamp(-limit, limit);
    let y = y.clamp(-limit, limit);
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (xi, yi) = (x0 as i64, y0 as i64);

    let p00 = fetch(image, xi, yi, border);
    if fx == 0.0 && fy == 0.0 {
        return p00;
    }
    let p10 = fetch(image, xi + 1, yi, border);
    let p01 = fetch(image, xi, yi + 1, border);
    let p11 = fetch(image, xi + 1, yi + 1, border);
    let top = p00 + fx * (p10 - p00);
    let bottom = p01 + fx * (p11 - p01);
    top + fy * (bottom - top)
}

/// Round-half-up to the 8-bit range.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Backward-mapped warp: `out(x, y) = in(x + ux(x, y), y + uy(x, y))`.
pub fn warp(
    image: &PixelGrid,
    field: &DisplacementField,
    border: BorderPolicy,
) -> Result<PixelGrid, DeformError> {
    if image.width() != field.width() || image.height() != field.height() {
        return Err(DeformError::DimensionMismatch {
            image: (image.width(), image.height()),
            field: (field.width(), field.height()),
        });
    }
    PixelGrid::from_fn(image.width(), image.height(), |x, y| {
        let (ux, uy) = field.at(x, y);
        quantize(sample_bilinear(image, x as f64 + ux, y as f64 + uy, border))
    })
}

/// Output of [`deform`] with every intermediate kept for auditing.
#[derive(Debug, Clone)]
pub struct Deformation {
    pub image: PixelGrid,
    pub grid: DeformationGrid,
    pub field: DisplacementField,
}

/// Samples a control grid, interpolates it and warps `image` with it.
pub fn deform(
    image: &PixelGrid,
    sigma: f64,
    seed: u64,
    grid_dims: (usize, usize),
    border: BorderPolicy,
) -> Result<Deformation, DeformError> {
    let grid = sample_grid(grid_dims.0, grid_dims.1, sigma, seed)?;
    let field = build_field(&grid, image.width(), image.height())?;
    let image = warp(image, &field, border)?;
    Ok(Deformation { image, grid, field })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: usize, h: usize, data: &[u8]) -> PixelGrid {
        PixelGrid::new(w, h, data.to_vec()).unwrap()
    }

    fn constant(w: usize, h: usize, dx: f64, dy: f64) -> DisplacementField {
        DisplacementField::from_fn(w, h, |_, _| (dx, dy)).unwrap()
    }

    #[test]
    fn zero_field_is_identity() {
        let src = PixelGrid::from_fn(17, 9, |x, y| (x * 13 + y * 7) as u8).unwrap();
        let out = warp(&src, &DisplacementField::zero(17, 9).unwrap(), BorderPolicy::Clamp).unwrap();
        assert_eq!(out, src);
    }

    #[test]
    fn unit_shift_with_clamp() {
        let src = img(2, 2, &[0, 100, 200, 255]);
        let out = warp(&src, &constant(2, 2, 1.0, 0.0), BorderPolicy::Clamp).unwrap();
        assert_eq!(out.as_bytes(), &[100, 100, 255, 255]);
    }

    #[test]
    fn half_pixel_is_midpoint() {
        // two identical rows [0, 100]
        let src = img(2, 2, &[0, 100, 0, 100]);
        let out = warp(&src, &constant(2, 2, 0.5, 0.0), BorderPolicy::Clamp).unwrap();
        assert_eq!(out.row(0), &[50, 100]);
        assert_eq!(out.row(1), &[50, 100]);
    }

    #[test]
    fn zero_border_fills_black() {
        let src = img(2, 2, &[10, 20, 30, 40]);
        let out = warp(&src, &constant(2, 2, 1.0, 0.0), BorderPolicy::Zero).unwrap();
        assert_eq!(out.as_bytes(), &[20, 0, 40, 0]);
    }

    #[test]
    fn reflect_border_mirrors() {
        let src = img(3, 2, &[10, 20, 30, 10, 20, 30]);
        let out = warp(&src, &constant(3, 2, 2.0, 0.0), BorderPolicy::Reflect).unwrap();
        // x=0 -> 2, x=1 -> 3 -> 1, x=2 -> 4 -> 0
        assert_eq!(out.row(0), &[30, 20, 10]);
    }

    #[test]
    fn reflect_index_mapping() {
        let r = BorderPolicy::Reflect;
        assert_eq!(r.resolve(-1, 5), Some(1));
        assert_eq!(r.resolve(5, 5), Some(3));
        assert_eq!(r.resolve(-9, 5), Some(1));
        assert_eq!(r.resolve(8, 5), Some(0));
        assert_eq!(r.resolve(-3, 1), Some(0));
    }

    #[test]
    fn integer_shift_matches_array_shift() {
        let src = PixelGrid::from_fn(12, 8, |x, y| (x * 20 + y) as u8).unwrap();
        let out = warp(&src, &constant(12, 8, -3.0, 2.0), BorderPolicy::Clamp).unwrap();
        for y in 0..8 {
            for x in 0..12 {
                let sx = (x as i64 - 3).clamp(0, 11) as usize;
                let sy = (y + 2).min(7);
                assert_eq!(out.get(x, y), src.get(sx, sy));
            }
        }
    }

    #[test]
    fn quantize_rounds_half_up() {
        assert_eq!(quantize(0.5), 1);
        assert_eq!(quantize(0.49999), 0);
        assert_eq!(quantize(254.5), 255);
        assert_eq!(quantize(300.0), 255);
        assert_eq!(quantize(-3.0), 0);
    }

    #[test]
    fn huge_displacements_stay_in_bounds() {
        let src = img(2, 2, &[1, 2, 3, 4]);
        for border in [BorderPolicy::Clamp, BorderPolicy::Zero, BorderPolicy::Reflect] {
            warp(&src, &constant(2, 2, 1e12, -1e12), border).unwrap();
        }
    }

    #[test]
    fn dimension_mismatch() {
        let src = img(2, 2, &[1, 2, 3, 4]);
        let f = DisplacementField::zero(3, 2).unwrap();
        assert!(matches!(
            warp(&src, &f, BorderPolicy::Clamp),
            Err(DeformError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_sigma_deform_is_identity() {
        let src = PixelGrid::from_fn(31, 23, |x, y| ((x * y) % 251) as u8).unwrap();
        let d = deform(&src, 0.0, 1234, (3, 3), BorderPolicy::Clamp).unwrap();
        assert_eq!(d.image, src);
    }

    #[test]
    fn border_policy_parses() {
        assert_eq!("reflect".parse::<BorderPolicy>().unwrap(), BorderPolicy::Reflect);
        assert!("wrap".parse::<BorderPolicy>().is_err());
        assert_eq!(BorderPolicy::default().to_string(), "clamp");
    }
}
