use proptest::prelude::*;

use vacpol_core::bounds::{energy_bracket, self_energy};
use vacpol_core::dispersion::{dirac_multiplier, CutoffModel};
use vacpol_core::quadrature::QuadOptions;
use vacpol_core::sources::{coulomb_pairing, coulomb_pairing_real, RadialDensity};

fn families() -> Vec<RadialDensity> {
    let mut all = Vec::new();
    for w in [0.3, 1.0, 2.5] {
        all.push(RadialDensity::gaussian(1.5, w).unwrap());
        all.push(RadialDensity::exponential(1.5, w).unwrap());
        all.push(RadialDensity::uniform_ball(1.5, w).unwrap());
    }
    all
}

#[test]
fn fourier_and_real_space_pairings_agree() {
    let opts = QuadOptions::new(1e-13, 1e-11);
    for nu in families() {
        let a = coulomb_pairing(&nu, &nu, opts).unwrap().value;
        let b = coulomb_pairing_real(&nu, &nu, opts).unwrap().value;
        assert!((a - b).abs() <= 1e-6 * a, "{:?}: {a} vs {b}", nu.spec());
    }
}

#[test]
fn self_pairing_is_homogeneous_of_degree_one() {
    for nu in families() {
        for lambda in [0.5, 3.0] {
            let d = self_energy(&nu).unwrap();
            let scaled = self_energy(&nu.rescaled(lambda).unwrap()).unwrap();
            assert!((scaled - lambda * d).abs() <= 1e-8 * lambda * d, "{:?}", nu.spec());
            assert_eq!(nu.rescaled(lambda).unwrap().charge(), nu.charge());
        }
    }
}

#[test]
fn transform_is_continuous_at_the_origin() {
    for nu in families() {
        let at0 = nu.fourier_hat(0.0).unwrap();
        let near = nu.fourier_hat(1e-8).unwrap();
        assert!((near - at0).abs() <= 1e-6 * at0.abs());
    }
}

#[test]
fn gaussian_self_energy_closed_form() {
    let nu = RadialDensity::gaussian(2.0, 0.7).unwrap();
    let exact = 4.0 / (0.7 * std::f64::consts::PI.sqrt());
    assert!((self_energy(&nu).unwrap() - exact).abs() < 1e-10 * exact);
}

proptest! {
    #[test]
    fn bracket_width_is_half_the_pairing(q in -5.0f64..5.0, alpha in 0.0f64..1.0, w in 0.2f64..3.0) {
        let nu = RadialDensity::gaussian(1.0, w).unwrap();
        let d = self_energy(&nu).unwrap();
        let (lo, hi) = energy_bracket(q, alpha, d).unwrap();
        prop_assert_eq!(hi, q.abs());
        prop_assert!(((hi - lo) - 0.5 * alpha * d).abs() <= 4.0 * f64::EPSILON * hi.max(1.0));
    }

    #[test]
    fn regularized_symbol_dominates_the_energy(p in 0.0f64..1e3, lambda in 1.0f64..1e3) {
        let model = CutoffModel::smooth_linear(lambda).unwrap();
        let d = dirac_multiplier(&model, p).unwrap();
        let expected = 1.0 + (p / lambda).powi(2);
        prop_assert!(d.multiplier >= d.energy);
        prop_assert!((d.multiplier / d.energy - expected).abs() <= 1e-12 * expected);
    }
}
