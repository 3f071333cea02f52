//! Smooth cut-off kernel `B_Λ^ζ(r)` as a double integral over `(t, u)`.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_3, PI};

use super::Estimate;
use crate::dispersion::CutoffModel;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_pieces, QuadOptions};

/// Split point between the two parametrizations of `t`.
const T_SPLIT: f64 = 0.5;

/// `B = π⁻¹ ∫₀¹ dt / (t (1 + r²t²/4)) ∫₀^√(1-t²) (1 - u²)/(1 + Ψ(t, u)) du`.
///
/// `psi(t, 1 - t², u)` must be non-negative. Near `t = 1` the substitution
/// `t = cos θ`, `u = sin θ · v` removes the square-root edge; near `t = 0` the
/// substitution `t = e^{-s}` is used and truncated where the growth floor
/// `ζ(x) >= ε x^{ε/2}` bounds the remainder below a tenth of `tol`.
fn double_integral<P>(lambda: f64, epsilon: f64, r: f64, tol: f64, psi: P) -> Result<Estimate>
where
    P: Fn(f64, f64, f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner_opts = QuadOptions::new(tol * 1e-2, 1e-13);
    let inner = |t: f64, om: f64, umax: f64| -> f64 {
        let g = |u: f64| (1.0 - u * u) / (1.0 + psi(t, om, u).max(0.0));
        match integrate(g, 0.0, umax, inner_opts) {
            Ok(q) => q.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let weight = |t: f64| 1.0 / (1.0 + 0.25 * r * r * t * t);

    // t in [T_SPLIT, 1]: t = cos(theta), u = sin(theta) v.
    let upper = |theta: f64| {
        let (st, ct) = theta.sin_cos();
        let om = st * st;
        let g = |v: f64| {
            let u = st * v;
            (1.0 - u * u) / (1.0 + psi(ct, om, u).max(0.0))
        };
        let iv = match integrate(g, 0.0, 1.0, inner_opts) {
            Ok(q) => q.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        };
        weight(ct) / ct * st * st * iv
    };
    let theta_max = T_SPLIT.acos();
    debug_assert!((theta_max - FRAC_PI_3).abs() < 1e-15);
    let outer_opts = QuadOptions::new(0.4 * tol * PI, 1e-13);
    let a = integrate(upper, 0.0, theta_max, outer_opts)?;

    // t in (0, T_SPLIT]: t = e^{-s}. Truncation point from the growth floor:
    // the remainder is at most 4/(3ε²) (Λ/√0.75)^ε T^ε for T <= 1/E(Λ).
    let budget = 0.1 * tol * PI;
    let c = 4.0 / (3.0 * epsilon * epsilon) * (lambda / 0.75f64.sqrt()).powf(epsilon);
    let t_cut = (budget / c).powf(1.0 / epsilon).min(1.0 / (1.0 + lambda * lambda).sqrt()).min(T_SPLIT);
    let tail_bound = c * t_cut.powf(epsilon) / PI;
    let s_max = -t_cut.ln();
    let lower = |s: f64| {
        let t = (-s).exp();
        let om = (1.0 - t) * (1.0 + t);
        weight(t) * inner(t, om, om.sqrt())
    };
    let s0 = -T_SPLIT.ln();
    // Break the s-range so the adaptive rule sees the peak near t ~ 1/max(r, Λ).
    let mut breaks = vec![s0];
    let mut s = s0 + 2.0;
    while s < s_max {
        breaks.push(s);
        s += 4.0;
    }
    breaks.push(s_max);
    let mut b = Estimate {
        value: 0.0,
        error: 0.0,
    };
    let piece_opts = QuadOptions::new(0.4 * tol * PI / breaks.len() as f64, 1e-13);
    for w in breaks.windows(2) {
        let q = integrate(&lower, w[0], w[1], piece_opts)?;
        b.value += q.value;
        b.error += q.error;
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(Estimate {
        value: (a.value + b.value) / PI,
        error: (a.error + b.error) / PI + tail_bound,
    })
}

/// Smooth kernel for a general profile, through the `Ψ(r, t, u)` form with
/// `η(x) = ζ((x² - 1)/Λ²)`, `v = r u/2`, `w = √(r²/4 + 1/t²)`.
pub fn b_zeta_quad(model: &CutoffModel, r: f64, tol: f64) -> Result<Estimate> {
    if model.is_sharp() {
        return Err(Error::Precondition(
            "b_zeta_quad needs a smooth cut-off model".into(),
        ));
    }
    model.ensure_usable()?;
    if !(r >= 0.0) {
        return Err(Error::domain("b_zeta_quad", r, "[0, inf)"));
    }
    let l2 = model.lambda() * model.lambda();
    let eta = |x2m1: f64| model.zeta((x2m1 / l2).max(0.0));
    let psi = |t: f64, om: f64, u: f64| {
        let v = 0.5 * r * u;
        // w² - 1 = r²/4 + (1 - t²)/t², kept separate to avoid cancellation.
        let w2m1 = 0.25 * r * r + om / (t * t);
        let w = (1.0 + w2m1).sqrt();
        // (w ± v)² - 1 = (w² - 1) ± 2wv + v².
        let ep = eta(w2m1 + 2.0 * w * v + v * v);
        let em = eta(w2m1 - 2.0 * w * v + v * v);
        0.5 * (ep + em) + v / (2.0 * w) * (ep - em)
    };
    double_integral(model.lambda(), model.epsilon().unwrap_or(1.0), r, tol, psi)
}

/// Smooth kernel for `ζ(t) = t`, where `Ψ = (r²/4 + (1-t²)/t² + 3r²u²/4)/Λ²`.
pub fn b_t_quad(lambda: f64, r: f64, tol: f64) -> Result<Estimate> {
    if !(lambda > 1.0) {
        return Err(Error::Precondition(format!(
            "the linear cut-off kernel is evaluated for Λ > 1, got {lambda}"
        )));
    }
    if !(r >= 0.0) {
        return Err(Error::domain("b_t_quad", r, "[0, inf)"));
    }
    let l2 = lambda * lambda;
    let psi = |t: f64, om: f64, u: f64| (0.25 * r * r + om / (t * t) + 0.75 * r * r * u * u) / l2;
    double_integral(lambda, 1.0, r, tol, psi)
}

/// `∫₀^U (1 - u²)/(1 + a u²) du` for `a >= 0`.
fn rational_moment(a: f64, big_u: f64) -> f64 {
    let x = a * big_u * big_u;
    if x < 0.1 {
        // Alternating series in a u²; 20 terms reach rounding for x < 0.1.
        let (mut sum, mut pow, u2) = (0.0, big_u, big_u * big_u);
        for n in 0..20 {
            let n2 = 2 * n as i32;
            sum += pow * (1.0 / (n2 + 1) as f64 - u2 / (n2 + 3) as f64);
            pow *= -x;
        }
        return sum;
    }
    let sa = a.sqrt();
    -big_u / a + (1.0 + 1.0 / a) * (big_u * sa).atan() / sa
}

/// [`b_t_quad`] with the inner `u` integral done in closed form, leaving one
/// adaptive integral over `t = cos θ`. Used for tabulation, where the nested
/// rule would be too slow for dense grids.
pub fn b_t_reduced(lambda: f64, r: f64, tol: f64) -> Result<Estimate> {
    if !(lambda > 1.0) {
        return Err(Error::Precondition(format!(
            "the linear cut-off kernel is evaluated for Λ > 1, got {lambda}"
        )));
    }
    if !(r >= 0.0) {
        return Err(Error::domain("b_t_reduced", r, "[0, inf)"));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    let l2 = lambda * lambda;
    let c = 0.75 * r * r;
    let g = |theta: f64| {
        let (st, t) = theta.sin_cos();
        if t <= 0.0 {
            return 0.0;
        }
        let d = l2 + 0.25 * r * r + st * st / (t * t);
        let j = rational_moment(c / d, st);
        l2 * j / (d * t * (1.0 + 0.25 * r * r * t * t)) * st
    };
    // Breaks at t = 2^-j resolve the peaks near t ~ 1/Λ and t ~ 2/r.
    let scale = lambda.max(r).max(1.0);
    let levels = (scale.log2().ceil() as i32 + 12).max(12);
    let mut breaks: Vec<f64> = (0..=levels).map(|j| 2f64.powi(-j).acos()).collect();
    breaks.push(std::f64::consts::FRAC_PI_2);
    let q = integrate_pieces(g, &breaks, QuadOptions::new(tol * PI, 1e-13))?;
    Ok(Estimate {
        value: q.value / PI,
        error: q.error / PI,
    })
}

/// Closed form of `B_Λ^ζ(0)` for `ζ(t) = t`, `Λ > 1`:
/// `Λ²(3Λ(2Λ²-3) artanh(s/Λ) + (8-5Λ²) s) / (9π s (Λ²-1)²)`, `s = √(Λ²-1)`.
pub fn b_t_zero_closed(lambda: f64) -> Result<f64> {
    if !(lambda > 1.0) {
        return Err(Error::domain("b_t_zero_closed", lambda, "(1, inf)"));
    }
    let l2 = lambda * lambda;
    let s = ((lambda - 1.0) * (lambda + 1.0)).sqrt();
    // artanh(s/Λ) = ln(Λ + s) because Λ² - s² = 1.
    let at = (lambda + s).ln();
    let num = l2 * (3.0 * lambda * (2.0 * l2 - 3.0) * at + (8.0 - 5.0 * l2) * s);
    let den = 9.0 * PI * s * ((lambda - 1.0) * (lambda + 1.0)).powi(2);
    Ok(num / den)
}

/// `B_Λ^ζ(0)` for a general profile by the one-dimensional form
/// `π⁻¹ ∫₀¹ (z² - z⁴/3) / ((1 - z²)(1 + ζ(z²/(Λ²(1-z²))))) dz`.
pub fn b_zeta_zero(model: &CutoffModel, tol: f64) -> Result<Estimate> {
    model.ensure_usable()?;
    let l2 = model.lambda() * model.lambda();
    if model.is_sharp() {
        let z = model.lambda() / (1.0 + l2).sqrt();
        let f = |z: f64| z * z * (1.0 - z * z / 3.0) / ((1.0 - z) * (1.0 + z)) / PI;
        let q = integrate(f, 0.0, z, QuadOptions::new(tol, 1e-13))?;
        return Ok(Estimate {
            value: q.value,
            error: q.error,
        });
    }
    let f = |z: f64| {
        let om = (1.0 - z) * (1.0 + z);
        let x = z * z / (l2 * om);
        z * z * (1.0 - z * z / 3.0) / (om * (1.0 + model.zeta(x))) / PI
    };
    let q = integrate(f, 0.0, 1.0, QuadOptions::new(tol, 1e-13))?;
    Ok(Estimate {
        value: q.value,
        error: q.error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_zero_matches_quadrature() {
        for &l in &[1.5, 4.0, 30.0] {
            let c = b_t_zero_closed(l).unwrap();
            let q = b_t_quad(l, 0.0, 1e-12).unwrap();
            assert!((c - q.value).abs() < 1e-10, "{l}: {c} {}", q.value);
            let m = CutoffModel::smooth_linear(l).unwrap();
            let z = b_zeta_zero(&m, 1e-13).unwrap();
            assert!((c - z.value).abs() < 1e-11);
        }
        assert!(b_t_zero_closed(1.0).is_err());
        assert!(b_t_quad(0.9, 0.0, 1e-8).is_err());
    }

    #[test]
    fn generic_path_reduces_to_linear() {
        let m = CutoffModel::smooth_linear(3.0).unwrap();
        for &r in &[0.0, 2.0, 20.0] {
            let a = b_zeta_quad(&m, r, 1e-11).unwrap().value;
            let b = b_t_quad(3.0, r, 1e-11).unwrap().value;
            assert!((a - b).abs() < 1e-10, "{r}: {a} {b}");
            assert!(a > 0.0);
        }
    }

    #[test]
    fn reduced_matches_nested() {
        for &l in &[1.5, 5.0, 40.0] {
            for &r in &[0.0, 0.3, 1.0, 7.0, 90.0, 2000.0] {
                let a = b_t_quad(l, r, 1e-11).unwrap().value;
                let b = b_t_reduced(l, r, 1e-12).unwrap().value;
                assert!((a - b).abs() < 2e-11, "{l} {r}: {a} {b}");
            }
            let z = b_t_zero_closed(l).unwrap();
            assert!((b_t_reduced(l, 0.0, 1e-13).unwrap().value - z).abs() < 1e-12);
        }
        assert!((rational_moment(0.099, 1.0) - rational_moment(0.1001, 1.0)).abs() < 1e-3);
    }

    #[test]
    fn sharp_zero_by_one_dimensional_route() {
        let m = CutoffModel::smooth_linear(10.0).unwrap();
        let s = b_zeta_zero(&CutoffModel::sharp(10.0).unwrap(), 1e-13).unwrap().value;
        let t = b_zeta_zero(&m, 1e-13).unwrap().value;
        assert!(t > 0.0 && (t - s).abs() < 0.05);
        let exact = crate::kernel::b0_zero(10.0).unwrap();
        assert!((s - exact).abs() < 1e-12);
    }

    #[test]
    fn rejects_sharp_and_unvalidated() {
        let s = CutoffModel::sharp(2.0).unwrap();
        assert!(matches!(b_zeta_quad(&s, 1.0, 1e-8), Err(Error::Precondition(_))));
        let z = crate::dispersion::ZetaFn::new("t", |x| x, |_| 1.0, |_| 0.0, |_| 0.0);
        let m = CutoffModel::smooth_custom(2.0, std::sync::Arc::new(z), 1.0).unwrap();
        assert!(matches!(b_zeta_quad(&m, 1.0, 1e-8), Err(Error::Precondition(_))));
        let (m, rep) = m.validate();
        assert!(rep.passed);
        assert!(b_zeta_quad(&m, 1.0, 1e-8).is_ok());
    }
}
