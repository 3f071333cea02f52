use vacpol_core::dispersion::CutoffModel;
use vacpol_core::kernel::{
    b0_closed, b0_quad, b0_zero, b_t_quad, b_t_reduced, b_t_zero_closed, tabulate_kernel, Method,
};
use vacpol_core::quadrature::QuadOptions;
use vacpol_core::Error;

#[test]
fn sharp_kernel_vanishes_at_twice_the_cutoff() {
    for lambda in [0.5, 1.0, 10.0] {
        assert!(b0_closed(lambda, 2.0 * lambda).unwrap().abs() < 1e-14);
        assert_eq!(b0_closed(lambda, 3.0 * lambda).unwrap(), 0.0);
    }
}

#[test]
fn sharp_closed_form_agrees_with_quadrature() {
    let opts = QuadOptions::new(1e-13, 1e-12);
    for lambda in [1.0, 10.0] {
        for r in [0.0, 0.3, 1.0, 1.9, 4.0] {
            let r = r * lambda / 2.0;
            let closed = b0_closed(lambda, r).unwrap();
            let quad = b0_quad(lambda, r, opts).unwrap();
            assert!((closed - quad.value).abs() <= 1e-10 * closed.abs().max(1e-3), "lambda {lambda}, r {r}");
        }
    }
    assert_eq!(b0_closed(1.0, 0.0).unwrap(), b0_zero(1.0).unwrap());
    assert!(b0_quad(1.0, 2.5, opts).is_err());
}

#[test]
fn linear_profile_routes_agree() {
    for (lambda, r) in [(4.0, 0.0), (4.0, 1.0), (10.0, 3.0)] {
        let nested = b_t_quad(lambda, r, 1e-11).unwrap().value;
        let reduced = b_t_reduced(lambda, r, 1e-11).unwrap().value;
        assert!((nested - reduced).abs() < 1e-9, "lambda {lambda}, r {r}");
    }
    let zero = b_t_quad(4.0, 0.0, 1e-12).unwrap().value;
    assert!((zero - b_t_zero_closed(4.0).unwrap()).abs() < 1e-9);
}

#[test]
fn tables_are_non_negative_and_report_errors() {
    let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
    let sharp = tabulate_kernel(&CutoffModel::sharp(1.0).unwrap(), &grid, Method::ClosedForm, 1e-10).unwrap();
    assert_eq!(sharp.len(), grid.len());
    assert!(sharp.values.iter().all(|&v| v >= 0.0));
    assert!(sharp.max_error() <= 1e-10);

    let smooth = CutoffModel::smooth_linear(4.0).unwrap();
    let table = tabulate_kernel(&smooth, &grid[..6], Method::Quadrature2D, 1e-10).unwrap();
    assert!(table.values.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(matches!(CutoffModel::sharp(-1.0), Err(Error::Domain { .. }) | Err(Error::InvalidInput(_))));
    assert!(b0_closed(1.0, -0.5).is_err());
    let model = CutoffModel::sharp(1.0).unwrap();
    assert!(tabulate_kernel(&model, &[1.0, 0.5], Method::ClosedForm, 1e-10).is_err());
}

/// `f = F⁻¹(B)` for the linear profile against a two-exponential (Yukawa)
/// representation integrated independently to four significant figures.
#[test]
fn smooth_inverse_transform_matches_yukawa_oracle() {
    use vacpol_core::response::{invert_kernel, polarization_inverse_kernel, smooth_kernel_grid};
    let radii = [0.01, 0.05, 0.1, 0.5, 1.0, 2.0, 4.0];
    let cases: [(f64, [f64; 7]); 2] = [
        (4.0, [42.27, 6.913, 2.700, 8.851e-2, 6.630e-3, 1.544e-4, 4.912e-7]),
        (10.0, [246.9, 31.30, 9.199, 9.682e-2, 5.855e-3, 1.385e-4, 4.545e-7]),
    ];
    for (lambda, expected) in cases {
        let model = CutoffModel::smooth_linear(lambda).unwrap();
        let grid = smooth_kernel_grid(lambda, 1024);
        let table = tabulate_kernel(&model, &grid, Method::Quadrature2D, 1e-12).unwrap();
        let kernel = polarization_inverse_kernel(&model, &table).unwrap();
        let f = invert_kernel(&kernel, &radii).unwrap();
        for ((x, got), want) in radii.iter().zip(&f).zip(expected) {
            assert!((got - want).abs() <= 1e-3 * want, "lambda {lambda}, x {x}: {got} vs {want}");
        }
    }
}

/// The smooth and sharp values at the origin approach each other like
/// `log Λ / Λ²`.
#[test]
fn smooth_and_sharp_origin_values_converge() {
    let gap = |l: f64| b0_zero(l).unwrap() - b_t_zero_closed(l).unwrap();
    let (g10, g100) = (gap(10.0), gap(100.0));
    let scaled = |l: f64, g: f64| g * l * l / l.ln();
    let ratio = scaled(10.0, g10) / scaled(100.0, g100);
    assert!(g10.abs() > g100.abs());
    assert!((0.8..1.25).contains(&ratio), "scaled ratio {ratio}");
}
