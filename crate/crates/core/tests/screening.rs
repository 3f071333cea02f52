use vacpol_core::bounds::{energy_bracket, pair_creation_theta, self_energy};
use vacpol_core::dispersion::CutoffModel;
use vacpol_core::kernel::{tabulate_kernel, Method};
use vacpol_core::quadrature::QuadOptions;
use vacpol_core::response::{build_kernel, fixed_point_screen, screen, screening_grid};
use vacpol_core::sources::{coulomb_pairing, coulomb_pairing_real, RadialDensity};
use vacpol_core::transform::{radial_forward, radial_inverse};

fn sharp_kernel(lambda: f64, alpha: f64) -> vacpol_core::response::ResponseKernel {
    let model = CutoffModel::sharp(lambda).unwrap();
    let grid = screening_grid(&model, 512);
    let table = tabulate_kernel(&model, &grid, Method::ClosedForm, 1e-13).unwrap();
    build_kernel(&model, alpha, &table).unwrap()
}

#[test]
fn observed_charge_satisfies_the_screening_identity() {
    let kernel = sharp_kernel(10.0, 0.1);
    let nu = RadialDensity::gaussian(2.0, 1.0).unwrap();
    let res = screen(&kernel, &nu).unwrap();
    assert!(res.observed_charge < 2.0 && res.observed_charge > 0.0);
    assert!(res.identity_residual < 1e-14);
    let expected = 0.1 / (1.0 + 0.1 * res.b_zero);
    assert!((res.alpha_phys - expected).abs() < 1e-15);
}

#[test]
fn zero_coupling_gives_no_vacuum_charge() {
    let kernel = sharp_kernel(10.0, 0.0);
    let nu = RadialDensity::exponential(1.0, 0.5).unwrap();
    let res = screen(&kernel, &nu).unwrap();
    assert!(res.rho_vac_hat.iter().all(|&v| v == 0.0));
    assert_eq!(res.observed_charge, 1.0);
}

#[test]
fn iteration_matches_direct_solution() {
    let kernel = sharp_kernel(10.0, 0.05);
    let nu = RadialDensity::gaussian(1.0, 1.0).unwrap();
    let direct = screen(&kernel, &nu).unwrap();
    let (iter, _) = fixed_point_screen(&kernel, &nu, &direct.k_grid, 1e-13, 1000).unwrap();
    let gap = direct
        .rho_vac_hat
        .iter()
        .zip(&iter.rho_vac_hat)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-11, "gap {gap}");
}

#[test]
fn gaussian_round_trip_and_pairing() {
    let opts = QuadOptions::new(1e-13, 1e-12);
    let g = |r: f64| (-0.5 * r * r).exp();
    for x in [0.0, 0.5, 2.0] {
        let back = radial_inverse(|k| radial_forward(g, 12.0, k, opts).unwrap(), 12.0, x, opts).unwrap();
        assert!((back - g(x)).abs() < 1e-8, "x {x}");
    }
    let nu = RadialDensity::gaussian(1.0, 1.0).unwrap();
    let fourier = coulomb_pairing(&nu, &nu, opts).unwrap().value;
    let real = coulomb_pairing_real(&nu, &nu, opts).unwrap().value;
    assert!((fourier - real).abs() < 1e-8 * fourier);
    assert!((self_energy(&nu).unwrap() - fourier).abs() < 1e-10);
}

#[test]
fn bracket_and_theta() {
    assert_eq!(energy_bracket(-2.0, 0.0, 1.0).unwrap(), (2.0, 2.0));
    let (lo, hi) = energy_bracket(1.0, 0.1, 0.5).unwrap();
    assert!((hi - lo - 0.025).abs() < 1e-15);
    assert!(energy_bracket(1.0, -0.1, 0.5).is_err());
    let small = pair_creation_theta(0.01, 0.5).unwrap();
    assert!(small.sufficient_condition && (small.gap_lower - (1.0 - small.theta)).abs() < 1e-15);
    let big = pair_creation_theta(10.0, 0.5).unwrap();
    assert!(!big.sufficient_condition && big.gap_lower == 0.0);
}
