use crate::DeformError;

/// Row-major 8-bit grayscale raster.
#[derive(Clone, PartialEq, Eq)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for PixelGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PixelGrid")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl PixelGrid {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, DeformError> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(DeformError::BufferLength {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, DeformError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, DeformError> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Mean absolute intensity difference; `None` when dimensions differ.
    pub fn mean_abs_diff(&self, other: &PixelGrid) -> Option<f64> {
        if self.width != other.width || self.height != other.height {
            return None;
        }
        let total: u64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| u64::from(a.abs_diff(b)))
            .sum();
        Some(total as f64 / self.data.len() as f64)
    }
}

pub(crate) fn check_dims(width: usize, height: usize) -> Result<(), DeformError> {
    if width < 2 || height < 2 {
        return Err(DeformError::Dimensions { width, height });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_mismatched() {
        assert!(PixelGrid::new(1, 5, vec![0; 5]).is_err());
        assert!(PixelGrid::new(2, 2, vec![0; 3]).is_err());
        assert!(PixelGrid::new(2, 2, vec![0; 4]).is_ok());
    }

    #[test]
    fn row_major_layout() {
        let g = PixelGrid::from_fn(3, 2, |x, y| (10 * y + x) as u8).unwrap();
        assert_eq!(g.as_bytes(), &[0, 1, 2, 10, 11, 12]);
        assert_eq!(g.get(2, 1), 12);
        assert_eq!(g.row(1), &[10, 11, 12]);
    }

    #[test]
    fn mean_abs_diff_counts_every_pixel() {
        let a = PixelGrid::filled(2, 2, 10).unwrap();
        let b = PixelGrid::new(2, 2, vec![10, 14, 6, 10]).unwrap();
        assert_eq!(a.mean_abs_diff(&b), Some(2.0));
        assert_eq!(a.mean_abs_diff(&PixelGrid::filled(3, 2, 0).unwrap()), None);
    }
}
