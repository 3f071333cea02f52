//! Sine and cosine integrals.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

const EULER: f64 = 0.577_215_664_901_532_9;

/// Returns `(Si(x), Ci(x))`. `Ci` is only meaningful for `x > 0`.
pub fn sici(x: f64) -> (f64, f64) {
    let t = x.abs();
    if t == 0.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    let (si, ci) = if t > 2.0 {
        // Continued fraction for E1(i t), modified Lentz.
        let fpmin = 1e-300;
        let mut b = Complex64::new(1.0, t);
        let mut c = Complex64::new(1.0 / fpmin, 0.0);
        let mut d = b.inv();
        let mut h = d;
        for i in 2..200 {
            let a = -((i - 1) as f64).powi(2);
            b += 2.0;
            d = (a * d + b).inv();
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
                break;
            }
        }
        h *= Complex64::new(t.cos(), -t.sin());
        (FRAC_PI_2 + h.im, -h.re)
    } else {
        let mut sum = 0.0;
        let mut sums = 0.0;
        let mut sumc = 0.0;
        let mut sign = 1.0;
        let mut fact = 1.0;
        let mut odd = true;
        for k in 1..200 {
            fact *= t / k as f64;
            let term = fact / k as f64;
            sum += sign * term;
            let err = term / sum.abs();
            if odd {
                sign = -sign;
                sums = sum;
                sum = sumc;
            } else {
                sumc = sum;
                sum = sums;
            }
            if err < 1e-17 {
                break;
            }
            odd = !odd;
        }
        (sums, sumc + t.ln() + EULER)
    };
    (if x < 0.0 { -si } else { si }, ci)
}

/// `pi/2 - Si(z)` for `z >= 0`, accurate for large `z` where the difference is small.
pub fn si_complement(z: f64) -> f64 {
    if z <= 2.0 {
        return FRAC_PI_2 - sici(z).0;
    }
    // Same continued fraction, keeping only the oscillating remainder.
    let fpmin = 1e-300;
    let mut b = Complex64::new(1.0, z);
    let mut c = Complex64::new(1.0 / fpmin, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 2..200 {
        let a = -((i - 1) as f64).powi(2);
        b += 2.0;
        d = (a * d + b).inv();
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    h *= Complex64::new(z.cos(), -z.sin());
    -h.im
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};

    #[test]
    fn against_quadrature() {
        for &x in &[0.1, 1.0, 1.9, 2.1, 5.0, 17.3, 60.0] {
            let q = integrate(
                |t: f64| if t == 0.0 { 1.0 } else { t.sin() / t },
                0.0,
                x,
                QuadOptions::new(1e-14, 1e-13),
            )
            .unwrap()
            .value;
            let (si, _) = sici(x);
            assert!((si - q).abs() < 1e-13, "x={x}: {si} vs {q}");
        }
    }

    #[test]
    fn known_values() {
        let (si, ci) = sici(1.0);
        assert!((si - 0.946_083_070_367_183).abs() < 1e-14);
        assert!((ci - 0.337_403_922_900_968_1).abs() < 1e-14);
        let (si, ci) = sici(10.0);
        assert!((si - 1.658_347_594_218_874).abs() < 1e-14);
        assert!((ci + 0.045_456_433_004_455_37).abs() < 1e-14);
        assert!((sici(-3.0).0 + sici(3.0).0).abs() < 1e-16);
    }

    #[test]
    fn complement_consistent() {
        for &z in &[0.5, 3.0, 40.0, 1e3] {
            let a = si_complement(z);
            let b = FRAC_PI_2 - sici(z).0;
            assert!((a - b).abs() < 1e-14, "{z}");
        }
        // Leading asymptotic cos(z)/z.
        let z = 1e5;
        assert!((si_complement(z) - z.cos() / z).abs() < 2e-10);
    }
}
