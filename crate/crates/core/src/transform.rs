//! Radial Fourier transforms in the unitary convention.
//!
//! For a radial `g`, `ĝ(k) = √(2/π) k⁻¹ ∫₀^∞ g(r) r sin(kr) dr`; the inverse has the
//! same form with the roles of `r` and `k` exchanged.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::quadrature::{integrate, GaussRule, QuadOptions, QuadResult};
use crate::special::si_complement;

/// `√(2/π)`, the radial prefactor of the unitary transform.
pub fn unitary_prefactor() -> f64 {
    FRAC_2_PI.sqrt()
}

/// Half-periods of `sin(sx)` grouped into one adaptive piece.
const HALF_PERIODS_PER_PIECE: f64 = 4.0;

/// `∫_a^b f(s) s sin(sx) ds` by adaptive quadrature on pieces a few
/// half-periods long. For `x = 0` the weight is `s²` (the `sin(sx)/x` limit,
/// so the result is divided by `x` implicitly: see [`sine_moment_over_x`]).
pub fn sine_moment<F>(f: F, a: f64, b: f64, x: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    weighted_pieces(|s| f(s) * s * (s * x).sin(), a, b, x, opts)
}

/// `x⁻¹ ∫_a^b f(s) s sin(sx) ds`, continuous at `x = 0` where it is `∫ f s² ds`.
pub fn sine_moment_over_x<F>(f: F, a: f64, b: f64, x: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    if x == 0.0 {
        return weighted_pieces(|s| f(s) * s * s, a, b, 0.0, opts);
    }
    let mut q = sine_moment(f, a, b, x, QuadOptions { abs_tol: opts.abs_tol * x, ..opts })?;
    q.value /= x;
    q.error /= x;
    Ok(q)
}

fn weighted_pieces<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, x: f64, opts: QuadOptions) -> Result<QuadResult> {
    if !(b >= a) {
        return Err(Error::InvalidInput(format!("bad interval [{a}, {b}]")));
    }
    let width = if x > 0.0 {
        HALF_PERIODS_PER_PIECE * std::f64::consts::PI / x
    } else {
        b - a
    };
    let n = (((b - a) / width).ceil() as usize).max(1);
    let piece = QuadOptions {
        abs_tol: opts.abs_tol / n as f64,
        ..opts
    };
    let mut out = QuadResult {
        value: 0.0,
        error: 0.0,
        intervals: 0,
    };
    for i in 0..n {
        let lo = a + (b - a) * i as f64 / n as f64;
        let hi = if i + 1 == n { b } else { a + (b - a) * (i + 1) as f64 / n as f64 };
        let q = integrate(&g, lo, hi, piece)?;
        out.value += q.value;
        out.error += q.error;
        out.intervals += q.intervals;
    }
    Ok(out)
}

/// `∫_a^b f(s) cos(sx) ds` on half-period pieces, like [`sine_moment`].
pub fn cosine_moment<F>(f: F, a: f64, b: f64, x: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    weighted_pieces(|s| f(s) * (s * x).cos(), a, b, x, opts)
}

/// Forward transform of a radial function supported (numerically) on `[0, r_max]`.
pub fn radial_forward<F>(g: F, r_max: f64, k: f64, opts: QuadOptions) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(k >= 0.0) {
        return Err(Error::domain("radial_forward", k, "[0, inf)"));
    }
    let q = sine_moment_over_x(g, 0.0, r_max, k, opts)?;
    Ok(unitary_prefactor() * q.value)
}

/// Inverse transform; identical to the forward one for radial functions.
pub fn radial_inverse<F>(h: F, k_max: f64, x: f64, opts: QuadOptions) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    radial_forward(h, k_max, x, opts)
}

/// `∫_K^∞ sin(kx)/k dk = π/2 − Si(Kx)`, the tail of an `a/k²` multiplier.
pub fn tail_inv_k2(k_max: f64, x: f64) -> f64 {
    if x == 0.0 {
        return FRAC_PI_2;
    }
    si_complement(k_max * x)
}

/// `∫_K^∞ sin(kx)/k³ dk`, the tail of an `a/k⁴` multiplier.
pub fn tail_inv_k4(k_max: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let z = k_max * x;
    let (s, c) = z.sin_cos();
    x * x * (s / (2.0 * z * z) + c / (2.0 * z) - 0.5 * si_complement(z))
}

/// Below this product of panel width and frequency a panel is integrated by
/// Gauss-Legendre rather than by exact oscillatory moments.
const FILON_SWITCH: f64 = 4.0;

/// Oscillatory integration of a piecewise cubic Hermite function against
/// `k sin(kx)`: on each panel the product is a quartic, whose moments against
/// `e^{ikx}` are exact.
#[derive(Debug, Clone)]
pub struct HermiteFilon {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    rule: GaussRule,
}

impl HermiteFilon {
    pub fn new(interp: &MonotoneCubic) -> Self {
        Self {
            x: interp.nodes().to_vec(),
            y: interp.values().to_vec(),
            d: interp.slopes().to_vec(),
            rule: GaussRule::new(12),
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Polynomial coefficients in `s = k − x_i` of the Hermite cubic on panel `i`.
    fn cubic(&self, i: usize) -> [f64; 4] {
        let h = self.x[i + 1] - self.x[i];
        let delta = (self.y[i + 1] - self.y[i]) / h;
        let (d0, d1) = (self.d[i], self.d[i + 1]);
        [
            self.y[i],
            d0,
            (3.0 * delta - 2.0 * d0 - d1) / h,
            (d0 + d1 - 2.0 * delta) / (h * h),
        ]
    }

    /// `∫ H(k) k sin(kx) dk` over the whole node range.
    pub fn sine_moment(&self, x: f64) -> f64 {
        (0..self.x.len() - 1).map(|i| self.panel(i, x)).sum()
    }

    /// `x⁻¹ ∫ H(k) k sin(kx) dk`, equal to `∫ H k² dk` at `x = 0`.
    pub fn sine_moment_over_x(&self, x: f64) -> f64 {
        if x == 0.0 {
            return (0..self.x.len() - 1)
                .map(|i| {
                    let c = self.cubic(i);
                    let a = self.x[i];
                    let h = self.x[i + 1] - a;
                    self.rule.integrate(|s| poly(&c, s) * (a + s) * (a + s), 0.0, h)
                })
                .sum();
        }
        self.sine_moment(x) / x
    }

    fn panel(&self, i: usize, x: f64) -> f64 {
        let a = self.x[i];
        let h = self.x[i + 1] - a;
        let c = self.cubic(i);
        if h * x < FILON_SWITCH {
            return self.rule.integrate(|s| poly(&c, s) * (a + s) * ((a + s) * x).sin(), 0.0, h);
        }
        // q(s) = H(s) (a + s).
        let q = [
            a * c[0],
            c[0] + a * c[1],
            c[1] + a * c[2],
            c[2] + a * c[3],
            c[3],
        ];
        let ix = Complex64::new(0.0, x);
        let eh = Complex64::from_polar(1.0, x * h);
        let mut j = (eh - 1.0) / ix;
        let mut acc = q[0] * j;
        let mut hn = 1.0;
        for (n, &qn) in q.iter().enumerate().skip(1) {
            hn *= h;
            j = (hn * eh - n as f64 * j) / ix;
            acc += qn * j;
        }
        (Complex64::from_polar(1.0, x * a) * acc).im
    }
}

fn poly(c: &[f64; 4], s: f64) -> f64 {
    ((c[3] * s + c[2]) * s + c[1]) * s + c[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> QuadOptions {
        QuadOptions::new(1e-14, 1e-13)
    }

    #[test]
    fn gaussian_forward_matches_identity() {
        for &k in &[0.0, 1e-8, 0.3, 2.0, 7.5] {
            let v = radial_forward(|r| (-0.5 * r * r).exp(), 12.0, k, opts()).unwrap();
            // (2π)^{-3/2} ∫ e^{-r²/2} d³r = 1.
            assert!((v - (-0.5 * k * k).exp()).abs() < 1e-12, "{k}: {v}");
        }
    }

    #[test]
    fn tails_match_quadrature() {
        for &(kk, x) in &[(5.0, 0.3), (20.0, 1.7), (3.0, 9.0)] {
            let q2 = sine_moment(|k: f64| k.powi(-2), kk, kk + 4000.0, x, QuadOptions::new(1e-9, 1e-12))
                .unwrap()
                .value;
            // The neglected part of the k⁻¹ tail is at most 2/(x (K + 4000)).
            assert!((q2 - tail_inv_k2(kk, x)).abs() < 2.0 / (x * (kk + 4000.0)) + 1e-10);
            let q4 = sine_moment(|k: f64| k.powi(-4), kk, kk + 400.0, x, QuadOptions::new(1e-12, 1e-12))
                .unwrap()
                .value;
            assert!((q4 - tail_inv_k4(kk, x)).abs() < 2.0 / (x * (kk + 400.0).powi(3)) + 1e-11, "{kk} {x}");
        }
    }

    #[test]
    fn filon_exact_on_cubics() {
        // A cubic is reproduced exactly by the Hermite data, so the moments are exact.
        let nodes: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let f = |k: f64| 1.0 + 0.5 * k - 0.03 * k * k + 0.001 * k * k * k;
        let vals: Vec<f64> = nodes.iter().map(|&k| f(k)).collect();
        let m = MonotoneCubic::new(nodes, vals).unwrap();
        let fil = HermiteFilon::new(&m);
        for &x in &[0.0, 0.5, 3.0, 40.0, 400.0] {
            let want = sine_moment_over_x(|k| m.eval_or(k, 0.0), 0.0, 10.0, x, QuadOptions::new(1e-11, 1e-12)).unwrap().value;
            let got = fil.sine_moment_over_x(x);
            assert!((got - want).abs() < 1e-10 * (1.0 + want.abs()), "{x}: {got} {want}");
        }
    }
}
