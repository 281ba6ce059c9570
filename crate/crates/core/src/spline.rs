//! Natural cubic splines and their tensor-product surfaces.

/// 1D natural cubic spline (zero second derivative at both ends).
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    moments: Vec<f64>,
}

impl NaturalCubicSpline {
    /// Fits through `(knots[i], values[i])`. Knots must be strictly increasing
    /// and there must be at least two of them.
    pub fn fit(knots: &[f64], values: &[f64]) -> Self {
        assert_eq!(knots.len(), values.len());
        assert!(knots.len() >= 2);
        debug_assert!(knots.windows(2).all(|w| w[1] > w[0]));
        let moments = solve_moments(knots, values);
        Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            moments,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = segment_index(&self.knots, x);
        let (x0, x1) = (self.knots[k], self.knots[k + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.values[k]
            + b * self.values[k + 1]
            + ((a * a * a - a) * self.moments[k] + (b * b * b - b) * self.moments[k + 1]) * h * h
                / 6.0
    }
}

/// Tridiagonal system for the interior moments, solved by the Thomas
/// algorithm. Both end moments are zero.
fn solve_moments(knots: &[f64], values: &[f64]) -> Vec<f64> {
    let n = knots.len();
    let mut moments = vec![0.0; n];
    if n < 3 {
        return moments;
    }
    let m = n - 2;
    let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    let mut diag = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 1..n - 1 {
        diag.push(2.0 * (h[i - 1] + h[i]));
        rhs.push(
            6.0 * ((values[i + 1] - values[i]) / h[i] - (values[i] - values[i - 1]) / h[i - 1]),
        );
    }
    // forward sweep; sub-diagonal entry for row r is h[r], super-diagonal h[r + 1]
    for r in 1..m {
        let w = h[r] / diag[r - 1];
        diag[r] -= w * h[r];
        rhs[r] -= w * rhs[r - 1];
    }
    moments[m] = rhs[m - 1] / diag[m - 1];
    for r in (0..m - 1).rev() {
        moments[r + 1] = (rhs[r] - h[r + 1] * moments[r + 2]) / diag[r];
    }
    moments
}

fn segment_index(knots: &[f64], x: f64) -> usize {
    let last = knots.len() - 2;
    match knots.binary_search_by(|k| k.total_cmp(&x)) {
        Ok(i) => i.min(last),
        Err(i) => i.saturating_sub(1).min(last),
    }
}

/// Basis weights `w[p][j]`: the spline through the unit vector `e_j`,
/// evaluated at sample position `p`. Any spline through `v` evaluates to
/// `Σ_j w[p][j] v[j]` at `p`.
pub(crate) fn basis_weights(knots: &[f64], samples: impl Iterator<Item = f64>) -> Vec<Vec<f64>> {
    let n = knots.len();
    let bases: Vec<NaturalCubicSpline> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            NaturalCubicSpline::fit(knots, &e)
        })
        .collect();
    samples
        .map(|p| bases.iter().map(|s| s.eval(p)).collect())
        .collect()
}

/// Tensor-product natural cubic spline over a regular lattice of knots.
///
/// `values` is row-major with `y_knots.len()` rows and `x_knots.len()`
/// columns.
#[derive(Debug, Clone)]
pub struct SplineSurface {
    x_knots: Vec<f64>,
    y_knots: Vec<f64>,
    values: Vec<f64>,
}

impl SplineSurface {
    pub fn new(x_knots: Vec<f64>, y_knots: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), x_knots.len() * y_knots.len());
        Self {
            x_knots,
            y_knots,
            values,
        }
    }

    /// Continuous evaluation at an arbitrary point.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let cols = self.x_knots.len();
        let along_x: Vec<f64> = self
            .values
            .chunks_exact(cols)
            .map(|row| NaturalCubicSpline::fit(&self.x_knots, row).eval(x))
            .collect();
        NaturalCubicSpline::fit(&self.y_knots, &along_x).eval(y)
    }

    /// Samples the surface on the integer pixel lattice `0..width × 0..height`,
    /// row-major.
    pub fn rasterize(&self, width: usize, height: usize) -> Vec<f64> {
        let rows = self.y_knots.len();
        let cols = self.x_knots.len();
        let wx = basis_weights(&self.x_knots, (0..width).map(|x| x as f64));
        let wy = basis_weights(&self.y_knots, (0..height).map(|y| y as f64));

        // interpolate each knot row across x first: rows × width
        let mut rows_x = vec![0.0; rows * width];
        for i in 0..rows {
            let data = &self.values[i * cols..(i + 1) * cols];
            for (x, w) in wx.iter().enumerate() {
                rows_x[i * width + x] = w.iter().zip(data).map(|(w, v)| w * v).sum();
            }
        }
        let mut out = vec![0.0; width * height];
        for (y, w) in wy.iter().enumerate() {
            let line = &mut out[y * width..(y + 1) * width];
            for (i, &wi) in w.iter().enumerate() {
                if wi == 0.0 {
                    continue;
                }
                let src = &rows_x[i * width..(i + 1) * width];
                for (o, s) in line.iter_mut().zip(src) {
                    *o += wi * s;
                }
            }
        }
        out
    }
}
