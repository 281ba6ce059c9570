use elastoct_core::diagnostics::{field_check, FieldCheckConfig};
use elastoct_core::overlay::max_vertex_displacement;
use elastoct_core::{
    build_field, deform, min_jacobian, sample_grid, warp, BorderPolicy, DisplacementField, PixelGrid,
    SplineField,
};
use elastoct_core::spline::{NaturalCubicSpline, SplineSurface};
use elastoct_oracles::{span_knots, tensor_spline_eval, DenseCubicSpline};
use proptest::prelude::*;

const W: usize = 496;
const H: usize = 352;

fn scan_like(width: usize, height: usize) -> PixelGrid {
    PixelGrid::from_fn(width, height, |x, y| {
        let band = (y / 6 + x / 31) % 7;
        (band * 30 + (x * 3 + y * 5) % 17) as u8
    })
    .unwrap()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[test]
fn hat_slice_matches_hand_solved_spline() {
    // one interior moment: (2h/3) M1 = -8/h with h = 100, so M1 = -0.0012
    // and S(50) = 2 + (t^3 - t) h^2 M1 / 6 at t = 1/2, which is 2.75
    let oracle = DenseCubicSpline::natural(&[0.0, 100.0, 200.0], &[0.0, 4.0, 0.0]);
    assert!((oracle.eval(50.0) - 2.75).abs() < 1e-12);
    let spline = NaturalCubicSpline::fit(&[0.0, 100.0, 200.0], &[0.0, 4.0, 0.0]);
    assert!((spline.eval(50.0) - 2.75).abs() < 1e-12);
    let surface = SplineSurface::new(vec![0.0, 100.0, 200.0], vec![0.0, 10.0], vec![0.0, 4.0, 0.0, 0.0, 4.0, 0.0]);
    assert!((surface.eval(50.0, 5.0) - 2.75).abs() < 1e-12);
}

#[test]
fn field_passes_through_nodes() {
    for seed in 0..20u64 {
        let sigma = 0.5 + seed as f64;
        let grid = sample_grid(3, 3, sigma, seed).unwrap();
        let field = build_field(&grid, W, H).unwrap();
        let spline = SplineField::fit(&grid, W, H).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let cell = grid.cell(i, j);
                let (x, y) = grid.node_position(i, j, W, H);
                let (ux, uy) = spline.eval(x, y);
                assert!((ux - cell.dx).abs() < 1e-9 && (uy - cell.dy).abs() < 1e-9);
                if x.fract() == 0.0 && y.fract() == 0.0 {
                    let (fx, fy) = field.at(x as usize, y as usize);
                    assert!((fx - cell.dx).abs() < 1e-9 && (fy - cell.dy).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn field_is_linear_in_sigma() {
    for seed in [1u64, 7, 42, 1000] {
        let a = build_field(&sample_grid(3, 3, 3.5, seed).unwrap(), W, H).unwrap();
        let b = build_field(&sample_grid(3, 3, 7.0, seed).unwrap(), W, H).unwrap();
        for (x, y) in a.ux().iter().zip(b.ux()).chain(a.uy().iter().zip(b.uy())) {
            assert!((2.0 * x - y).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spline_matches_dense_oracle(
        rows in 2usize..=5,
        cols in 2usize..=5,
        width in 2usize..=40,
        height in 2usize..=40,
        sigma in 0.0f64..20.0,
        seed in any::<u64>(),
    ) {
        let grid = sample_grid(rows, cols, sigma, seed).unwrap();
        let field = build_field(&grid, width, height).unwrap();
        let (dx, dy) = (grid.dx_values(), grid.dy_values());
        for y in 0..height {
            for x in 0..width {
                let (ux, uy) = field.at(x, y);
                let ox = tensor_spline_eval(&dx, rows, cols, width, height, x as f64, y as f64);
                let oy = tensor_spline_eval(&dy, rows, cols, width, height, x as f64, y as f64);
                prop_assert!((ux - ox).abs() < 1e-9, "ux {} vs {}", ux, ox);
                prop_assert!((uy - oy).abs() < 1e-9, "uy {} vs {}", uy, oy);
            }
        }
    }

    #[test]
    fn integer_translation_is_a_clamped_shift(
        tx in -5i32..=5,
        ty in -5i32..=5,
        seed in any::<u64>(),
    ) {
        let (w, h) = (13usize, 9usize);
        let mut rng = elastoct_core::rng::SplitMix64::new(seed);
        let image = PixelGrid::from_fn(w, h, |_, _| rng.below(256) as u8).unwrap();
        let field = DisplacementField::from_fn(w, h, |_, _| (tx as f64, ty as f64)).unwrap();
        let out = warp(&image, &field, BorderPolicy::Clamp).unwrap();
        for y in 0..h {
            for x in 0..w {
                let sx = (x as i32 + tx).clamp(0, w as i32 - 1) as usize;
                let sy = (y as i32 + ty).clamp(0, h as i32 - 1) as usize;
                prop_assert_eq!(out.get(x, y), image.get(sx, sy));
            }
        }
    }
}

#[test]
fn oracle_knots_match_node_positions() {
    let grid = sample_grid(4, 5, 1.0, 3).unwrap();
    let xk = span_knots(5, W);
    let yk = span_knots(4, H);
    for (i, &y) in yk.iter().enumerate() {
        for (j, &x) in xk.iter().enumerate() {
            assert_eq!(grid.node_position(i, j, W, H), (x, y));
        }
    }
}

#[test]
fn zero_sigma_is_identity() {
    let image = scan_like(W, H);
    for border in [BorderPolicy::Clamp, BorderPolicy::Zero, BorderPolicy::Reflect] {
        let d = deform(&image, 0.0, 99, (3, 3), border).unwrap();
        assert_eq!(d.image, image);
    }
}

#[test]
fn deform_is_deterministic() {
    let image = scan_like(W, H);
    let a = deform(&image, 7.0, 42, (3, 3), BorderPolicy::Clamp).unwrap();
    let b = deform(&image, 7.0, 42, (3, 3), BorderPolicy::Clamp).unwrap();
    assert_eq!(a.image, b.image);
    assert_eq!(a.grid, b.grid);
    assert_eq!(a.field, b.field);
}

#[test]
fn golden_deform_raster() {
    let image = scan_like(W, H);
    let d = deform(&image, 7.0, 42, (3, 3), BorderPolicy::Clamp).unwrap();
    assert!(d.image.mean_abs_diff(&image).unwrap() > 0.0);
    assert_eq!(fnv1a(d.image.as_bytes()), GOLDEN_RASTER_FNV1A);
}

// frozen after an independent resampling of the traced golden grid agreed
const GOLDEN_RASTER_FNV1A: u64 = 15445068228260099931;

#[test]
fn smooth_without_foldover_up_to_sigma_nine() {
    let report = field_check(&FieldCheckConfig {
        width: W,
        height: H,
        sigma: 9.0,
        grid: (3, 3),
        trials: 200,
        seed: 5,
    })
    .unwrap();
    assert_eq!(report.foldovers, 0);
    assert!(report.min_jacobian > 0.0);
    assert!(report.max_abs_gradient < 1.0, "{}", report.max_abs_gradient);
}

#[test]
fn stronger_sigma_curves_overlay_more() {
    for seed in 0..25u64 {
        let weak = build_field(&sample_grid(3, 3, 1.0, seed).unwrap(), W, H).unwrap();
        let strong = build_field(&sample_grid(3, 3, 24.0, seed).unwrap(), W, H).unwrap();
        assert!(max_vertex_displacement(&strong, 16).unwrap() > max_vertex_displacement(&weak, 16).unwrap());
    }
}

#[test]
fn affine_field_jacobian() {
    let field = DisplacementField::from_fn(20, 15, |x, _| (0.1 * x as f64, 0.0)).unwrap();
    assert!((min_jacobian(&field).unwrap() - 1.1).abs() < 1e-6);
}
