//! Independent reference computations for the test suites.
//!
//! Nothing in here shares code with `elastoct-core`. Each routine takes the
//! slow, obvious route: dense linear systems instead of tridiagonal sweeps,
//! exact integer arithmetic instead of log-gamma sums.

/// Solves `a * x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is row-major, `n × n`. Panics on a singular system.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        assert!(a[pivot][col].abs() > 1e-300, "singular system");
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (dst, src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Piecewise cubic `c0 + c1 t + c2 t² + c3 t³` per segment, `t = x - knot[i]`.
#[derive(Debug, Clone)]
pub struct DenseCubicSpline {
    knots: Vec<f64>,
    coeffs: Vec<[f64; 4]>,
}

impl DenseCubicSpline {
    /// Natural cubic spline through `(knots[i], values[i])`, obtained from the
    /// full `4(n-1)` unknown coefficient system.
    pub fn natural(knots: &[f64], values: &[f64]) -> Self {
        assert_eq!(knots.len(), values.len());
        let n = knots.len();
        assert!(n >= 2);
        let segs = n - 1;
        let unknowns = 4 * segs;
        let mut a = Vec::with_capacity(unknowns);
        let mut b = Vec::with_capacity(unknowns);
        let row = || vec![0.0; unknowns];

        for s in 0..segs {
            let h = knots[s + 1] - knots[s];
            // value at left knot
            let mut r = row();
            r[4 * s] = 1.0;
            a.push(r);
            b.push(values[s]);
            // value at right knot
            let mut r = row();
            r[4 * s] = 1.0;
            r[4 * s + 1] = h;
            r[4 * s + 2] = h * h;
            r[4 * s + 3] = h * h * h;
            a.push(r);
            b.push(values[s + 1]);
        }
        for s in 0..segs.saturating_sub(1) {
            let h = knots[s + 1] - knots[s];
            // first derivative continuity
            let mut r = row();
            r[4 * s + 1] = 1.0;
            r[4 * s + 2] = 2.0 * h;
            r[4 * s + 3] = 3.0 * h * h;
            r[4 * (s + 1) + 1] = -1.0;
            a.push(r);
            b.push(0.0);
            // second derivative continuity
            let mut r = row();
            r[4 * s + 2] = 2.0;
            r[4 * s + 3] = 6.0 * h;
            r[4 * (s + 1) + 2] = -2.0;
            a.push(r);
            b.push(0.0);
        }
        // natural ends
        let mut r = row();
        r[2] = 2.0;
        a.push(r);
        b.push(0.0);
        let last = segs - 1;
        let h = knots[n - 1] - knots[n - 2];
        let mut r = row();
        r[4 * last + 2] = 2.0;
        r[4 * last + 3] = 6.0 * h;
        a.push(r);
        b.push(0.0);

        let x = solve_dense(a, b);
        let coeffs = (0..segs)
            .map(|s| [x[4 * s], x[4 * s + 1], x[4 * s + 2], x[4 * s + 3]])
            .collect();
        Self {
            knots: knots.to_vec(),
            coeffs,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let segs = self.coeffs.len();
        let mut s = 0;
        while s + 1 < segs && x >= self.knots[s + 1] {
            s += 1;
        }
        let t = x - self.knots[s];
        let c = self.coeffs[s];
        c[0] + t * (c[1] + t * (c[2] + t * c[3]))
    }
}

/// Evenly spaced knots spanning `[0, extent - 1]`.
pub fn span_knots(count: usize, extent: usize) -> Vec<f64> {
    (0..count)
        .map(|j| j as f64 * (extent - 1) as f64 / (count - 1) as f64)
        .collect()
}

/// Tensor-product natural spline surface evaluated at `(x, y)`.
///
/// `values` is row-major `rows × cols`; rows run along y.
pub fn tensor_spline_eval(
    values: &[f64],
    rows: usize,
    cols: usize,
    width: usize,
    height: usize,
    x: f64,
    y: f64,
) -> f64 {
    let xk = span_knots(cols, width);
    let yk = span_knots(rows, height);
    let along_x: Vec<f64> = (0..rows)
        .map(|i| DenseCubicSpline::natural(&xk, &values[i * cols..(i + 1) * cols]).eval(x))
        .collect();
    DenseCubicSpline::natural(&yk, &along_x).eval(y)
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Two-sided Fisher exact p-value by exhaustive enumeration with exact
/// integer weights. A table is counted when its weight does not exceed the
/// observed one.
pub fn fisher_exhaustive(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let r1 = a + b;
    let r2 = c + d;
    let c1 = a + c;
    let weight = |x: u64| binomial(r1, x) * binomial(r2, c1 - x);
    let observed = weight(a);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let mut total: u128 = 0;
    let mut tail: u128 = 0;
    for x in lo..=hi {
        let w = weight(x);
        total += w;
        if w <= observed {
            tail += w;
        }
    }
    tail as f64 / total as f64
}

/// Squared two-proportion z statistic with pooled variance.
pub fn two_proportion_z_squared(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let n1 = (a + b) as f64;
    let n2 = (c + d) as f64;
    let p1 = a as f64 / n1;
    let p2 = c as f64 / n2;
    let pooled = (a + c) as f64 / (n1 + n2);
    let se2 = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2);
    (p1 - p2).powi(2) / se2
}
