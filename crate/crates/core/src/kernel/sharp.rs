//! Sharp cut-off kernel `B_Λ⁰(r)`: closed form, reduced 1D quadrature,
//! 3D lens oracle, endpoint derivatives and the scaling limit.

use std::cell::RefCell;
use std::f64::consts::PI;

use astro_float::BigFloat;
use rayon::prelude::*;

use super::Estimate;
use crate::dispersion::{e, z_edge_unchecked};
use crate::error::{Error, Result};
use crate::precision::{to_f64, Hp};
use crate::quadrature::{integrate, QuadOptions};

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("cut-off", lambda, "(0, inf)"))
    }
}

fn check_r(what: &'static str, lambda: f64, r: f64) -> Result<()> {
    check_lambda(lambda)?;
    if r >= 0.0 && r <= 2.0 * lambda {
        Ok(())
    } else {
        Err(Error::domain(what, r, format!("[0, {}]", 2.0 * lambda)))
    }
}

/// Working precision for the closed form. The bracket cancels like `(E/r)^3`
/// near the origin and like `(E/(2Λ - r))^3` near the edge of the support.
fn closed_bits(lambda: f64, r: f64, delta: f64, target: usize) -> usize {
    let el = e(lambda);
    let loss = |x: f64| {
        if x > 0.0 {
            (el / x).log2().max(0.0)
        } else {
            1100.0
        }
    };
    target + 32 + (3.0 * (loss(r) + loss(delta))).ceil() as usize
}

/// `B_Λ⁰(0)` in extended precision.
fn zero_hp(lambda: f64, hp: &Hp) -> BigFloat {
    let one = hp.f(1.0);
    let l = hp.f(lambda);
    let el = hp.sqrt(&hp.add(&one, &hp.mul(&l, &l)));
    let z = hp.div(&l, &el);
    let z3 = hp.mul(&z, &hp.mul(&z, &z));
    let s = hp.add(
        &hp.sub(&hp.ratio(&z3, 1, 9), &hp.ratio(&z, 2, 3)),
        &hp.ratio(&hp.atanh(&z), 2, 3),
    );
    hp.div(&s, &hp.pi())
}

/// Closed form at `0 < r < 2Λ`, with `r` given in extended precision.
fn closed_hp(lambda: f64, r: &BigFloat, target: usize) -> BigFloat {
    let rf = to_f64(r);
    let delta = to_f64(&Hp::new(192).sub(&BigFloat::from_f64(2.0 * lambda, 64), r));
    let hp = Hp::new(closed_bits(lambda, rf, delta, target));
    let one = hp.f(1.0);
    let l = hp.f(lambda);
    let r2 = hp.mul(r, r);
    let r3 = hp.mul(&r2, r);
    let el = hp.sqrt(&hp.add(&one, &hp.mul(&l, &l)));
    let lr = hp.sub(&l, r);
    let e2 = hp.sqrt(&hp.add(&one, &hp.mul(&lr, &lr)));
    let s = hp.add(&el, &e2);
    // D = E(Λ) - E(Λ - r) without cancellation.
    let d = hp.div(&hp.mul(r, &hp.sub(&hp.ratio(&l, 2, 1), r)), &s);
    let z = hp.div(&d, r);
    let w = hp.ratio(&s, 1, 2);
    let q = hp.sqrt(&hp.add(&hp.f(4.0), &r2));

    let t1a = hp.ratio(&d, -4, 3);
    let t1b = hp.ratio(
        &hp.mul(&hp.mul(&hp.sub(&r2, &hp.f(2.0)), &q), &hp.atanh(&hp.div(&d, &q))),
        -2,
        3,
    );
    let t1c = hp.ratio(&hp.mul(&r3, &hp.atanh(&z)), 2, 3);

    let d2 = hp.mul(&d, &d);
    let d3 = hp.mul(&d2, &d);
    let el2 = hp.mul(&el, &el);
    let el3 = hp.mul(&el2, &el);
    let t2a = hp.sub(&hp.ratio(&d3, 1, 9), &hp.mul(&r2, &d));
    let t2b = hp.ratio(&hp.mul(&el, &d2), 1, 3);
    let t2c = hp.ratio(&hp.mul(&el2, &d), 4, 3);
    let coef = hp.sub(&hp.ratio(&el3, 8, 3), &hp.ratio(&hp.mul(&el, &r2), 2, 1));
    let t2d = hp.mul(&coef, &hp.ln(&hp.div(&w, &el)));

    let sum = [t1b, t1c, t2a, t2b, t2c, t2d]
        .iter()
        .fold(t1a, |acc, t| hp.add(&acc, t));
    hp.div(&sum, &hp.mul(&hp.pi(), &r3))
}

/// `B_Λ⁰(0) = π⁻¹ (Z³/9 - 2Z/3 + (2/3) artanh Z)` with `Z = Λ/E(Λ)`.
pub fn b0_zero(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let bits = 160 + (6.0 * lambda.log2().abs()).ceil() as usize;
    Ok(to_f64(&zero_hp(lambda, &Hp::new(bits))))
}

/// Sharp kernel by its explicit closed form.
///
/// Returns exactly 0 for `r >= 2Λ` and the exact limit at `r = 0`. The
/// expression is evaluated in extended precision sized to its cancellation,
/// so the result is accurate to double precision on the whole support.
pub fn b0_closed(lambda: f64, r: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(r >= 0.0) {
        return Err(Error::domain("b0_closed", r, "[0, inf)"));
    }
    if r >= 2.0 * lambda {
        return Ok(0.0);
    }
    if r == 0.0 {
        return b0_zero(lambda);
    }
    let rb = BigFloat::from_f64(r, 64);
    Ok(to_f64(&closed_hp(lambda, &rb, 64)).max(0.0))
}

/// Sharp kernel by adaptive quadrature of its reduced one-dimensional form
/// over `z ∈ [0, Z_Λ(r)]`.
pub fn b0_quad(lambda: f64, r: f64, opts: QuadOptions) -> Result<Estimate> {
    check_r("b0_quad", lambda, r)?;
    let zmax = z_edge_unchecked(lambda, r);
    let el = e(lambda);
    let f = |z: f64| {
        let om = (1.0 - z) * (1.0 + z);
        let a = z * z * (1.0 - z * z / 3.0) / (om * (1.0 + 0.25 * r * r * om));
        let b = z * (1.0 - z * z / 3.0) / (el - 0.5 * r * z);
        (a + 0.5 * r * b) / PI
    };
    let q = integrate(f, 0.0, zmax, opts)?;
    Ok(Estimate {
        value: q.value,
        error: q.error,
    })
}

/// Brute-force evaluation over the lens `{|q ± k/2| <= Λ}`.
///
/// The integrand is reduced to cylindrical coordinates around `k` and the
/// bracket `(q+k/2)·(q-k/2) + 1 - E₊E₋` is rewritten as
/// `-k²(1+ρ²)/(1 + (q+k/2)·(q-k/2) + E₊E₋)`, which removes the `k⁻²`
/// prefactor and all cancellation. The result is non-negative.
pub fn b0_3d_oracle(lambda: f64, k: f64, opts: QuadOptions) -> Result<Estimate> {
    check_lambda(lambda)?;
    if !(k > 0.0 && k <= 2.0 * lambda) {
        return Err(Error::domain("b0_3d_oracle", k, format!("(0, {}]", 2.0 * lambda)));
    }
    if k == 2.0 * lambda {
        return Ok(Estimate::exact(0.0));
    }
    let h = 0.5 * k;
    let phi0 = (h / lambda).acos();
    let inner_opts = QuadOptions {
        abs_tol: opts.abs_tol * 1e-2 / phi0.max(1e-300),
        rel_tol: opts.rel_tol.min(1e-12),
        ..opts
    };
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner_err = RefCell::new(0.0f64);
    let outer = |phi: f64| {
        let (sp, cp) = phi.sin_cos();
        let s = lambda * cp - h;
        let rmax = lambda * sp;
        let g = |v: f64| {
            let rho = rmax * v;
            let rho2 = rho * rho;
            let ep = (1.0 + (s + h) * (s + h) + rho2).sqrt();
            let em = (1.0 + (s - h) * (s - h) + rho2).sqrt();
            let dot = s * s - h * h + rho2;
            rho * (1.0 + rho2) / ((1.0 + dot + ep * em) * ep * em * (ep + em))
        };
        match integrate(g, 0.0, 1.0, inner_opts) {
            Ok(r) => {
                *inner_err.borrow_mut() += r.error;
                lambda * sp * rmax * r.value
            }
            Err(err) => {
                failure.borrow_mut().get_or_insert(err);
                0.0
            }
        }
    };
    let q = integrate(outer, 0.0, phi0, opts)?;
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    let scale = 4.0 / PI;
    Ok(Estimate {
        value: scale * q.value,
        error: scale * q.error,
    })
}

fn binomial(n: usize, k: usize) -> i32 {
    (0..k).fold(1i64, |acc, j| acc * (n - j) as i64 / (j + 1) as i64) as i32
}

/// Derivative of order 1 to 3 of the sharp kernel on `[0, 2Λ]`.
///
/// Finite differences of the closed form with Richardson extrapolation, done
/// in extended precision. Central stencils are used in the interior and
/// one-sided stencils at (or close to) the end points `0` and `2Λ`, where the
/// exact end values `B(0)` and `B(2Λ) = 0` enter.
pub fn b0_derivatives(lambda: f64, r: f64, order: u8) -> Result<f64> {
    check_r("b0_derivatives", lambda, r)?;
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidInput(format!(
            "derivative order {order} not in 1..=3"
        )));
    }
    const TARGET: usize = 256;
    let n = order as usize;
    let eps = 2f64.powi(-(TARGET as i32));
    let h0 = 1e-3 * lambda.max(1.0) * eps.powf(1.0 / (n as f64 + 2.0));
    let hp = Hp::new(1024);
    let two_l = 2.0 * lambda;
    let r_hp = hp.f(r);
    let eval = |x: &BigFloat| -> BigFloat {
        let xf = to_f64(x);
        let delta = to_f64(&hp.sub(&hp.f(two_l), x));
        if xf <= 0.0 {
            zero_hp(lambda, &Hp::new(TARGET + 64 + (6.0 * lambda.log2().abs()).ceil() as usize))
        } else if delta <= 0.0 {
            hp.f(0.0)
        } else {
            closed_hp(lambda, x, TARGET)
        }
    };
    let half_width = if n == 3 { 2.0 } else { 1.0 };
    enum Stencil {
        Central,
        Forward,
        Backward,
    }
    let stencil = if r - half_width * h0 > 0.0 && r + half_width * h0 < two_l {
        Stencil::Central
    } else if r < lambda {
        Stencil::Forward
    } else {
        Stencil::Backward
    };
    let (levels, ratio): (usize, f64) = match stencil {
        Stencil::Central => (5, 4.0),
        _ => (8, 2.0),
    };
    let estimate = |h: f64| -> BigFloat {
        let hb = hp.f(h);
        let at = |j: f64| eval(&hp.add(&r_hp, &hp.mul(&hp.f(j), &hb)));
        let (coefs, denom): (Vec<(f64, i32)>, f64) = match stencil {
            Stencil::Central => match n {
                1 => (vec![(1.0, 1), (-1.0, -1)], 2.0),
                2 => (vec![(1.0, 1), (0.0, -2), (-1.0, 1)], 1.0),
                _ => (vec![(2.0, 1), (1.0, -2), (-1.0, 2), (-2.0, -1)], 2.0),
            },
            Stencil::Forward => (
                (0..=n)
                    .map(|j| {
                        let s = if (n - j) % 2 == 0 { 1 } else { -1 };
                        (j as f64, s * binomial(n, j))
                    })
                    .collect(),
                1.0,
            ),
            Stencil::Backward => (
                (0..=n)
                    .map(|j| {
                        let s = if j % 2 == 0 { 1 } else { -1 };
                        (-(j as f64), s * binomial(n, j))
                    })
                    .collect(),
                1.0,
            ),
        };
        let mut acc = hp.f(0.0);
        for (off, c) in coefs {
            acc = hp.add(&acc, &hp.mul(&hp.f(c as f64), &at(off)));
        }
        let hn = hp.mul(&hp.f(denom), &hb.powi(n, hp.bits, astro_float::RoundingMode::ToEven));
        hp.div(&acc, &hn)
    };
    // Richardson tableau.
    let mut rows: Vec<Vec<BigFloat>> = Vec::with_capacity(levels);
    for lev in 0..levels {
        let h = h0 / 2f64.powi(lev as i32);
        let mut row = vec![estimate(h)];
        for m in 1..=lev {
            let f = ratio.powi(m as i32);
            let num = hp.sub(&hp.mul(&hp.f(f), &row[m - 1]), &rows[lev - 1][m - 1]);
            row.push(hp.div(&num, &hp.f(f - 1.0)));
        }
        rows.push(row);
    }
    Ok(to_f64(&rows[levels - 1][levels - 1]))
}

fn check_binf(r: f64) -> Result<()> {
    if r > 0.0 && r <= 2.0 {
        Ok(())
    } else {
        Err(Error::domain("b_infinity", r, "(0, 2]"))
    }
}

/// Branch of the scaling limit used on `0 < r <= 1` (analytic on `0 < r < 2`).
pub fn b_infinity_inner(r: f64) -> f64 {
    let u = 1.0 - r;
    let br = (2.0 / 3.0 - r * r / 2.0) * ((2.0 - r) / 2.0).ln() - u.powi(3) / 36.0 + u * u / 6.0
        + (r * r / 4.0 - 7.0 / 12.0) * u
        - r * r / 4.0
        + 4.0 / 9.0
        + r.powi(3) / 6.0 * ((2.0 - r) / r).ln();
    4.0 / (PI * r.powi(3)) * br
}

/// Branch of the scaling limit used on `1 <= r <= 2` (analytic on `r > 0`).
pub fn b_infinity_outer(r: f64) -> f64 {
    let u = r - 1.0;
    let br = (2.0 / 3.0 - r * r / 2.0) * (r / 2.0).ln() - u.powi(3) / 36.0 + u * u / 6.0
        + (r * r / 4.0 - 7.0 / 12.0) * u
        - r * r / 4.0
        + 4.0 / 9.0;
    4.0 / (PI * r.powi(3)) * br
}

/// Limit of `B_Λ⁰(Λ r)` as `Λ → ∞`, for `0 < r <= 2`.
pub fn b_infinity(r: f64) -> Result<f64> {
    check_binf(r)?;
    Ok(if r >= 1.0 {
        b_infinity_outer(r)
    } else {
        b_infinity_inner(r)
    })
}

const SPLINE_DEGREE: usize = 24;

#[derive(Debug, Clone)]
struct Panel {
    a: f64,
    b: f64,
    // Chebyshev coefficients of the value and of the first three derivatives.
    coefs: [Vec<f64>; 4],
}

fn cheb_derivative(c: &[f64]) -> Vec<f64> {
    let n = c.len() - 1;
    let mut d = vec![0.0; c.len()];
    if n == 0 {
        return d;
    }
    d[n - 1] = 2.0 * n as f64 * c[n];
    for k in (1..n).rev() {
        d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
    }
    d[0] *= 0.5;
    d
}

fn clenshaw(c: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + c[0]
}

/// Piecewise Chebyshev representation of the sharp kernel on `[0, 2Λ]`.
///
/// Node values come from the closed form; panels are short compared with
/// the distance to the nearest complex singularity (which is 1), so values
/// and the first three derivatives are accurate to near double precision.
#[derive(Debug, Clone)]
pub struct SharpSpline {
    lambda: f64,
    panels: Vec<Panel>,
}

impl SharpSpline {
    pub fn new(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let two_l = 2.0 * lambda;
        let count = ((two_l / 0.5).ceil() as usize).max(4);
        let width = two_l / count as f64;
        let n = SPLINE_DEGREE;
        let nodes: Vec<(usize, usize, f64)> = (0..count)
            .flat_map(|p| {
                let a = p as f64 * width;
                let b = if p + 1 == count { two_l } else { a + width };
                (0..=n).map(move |j| {
                    let t = (PI * j as f64 / n as f64).cos();
                    (p, j, 0.5 * (a + b) + 0.5 * (b - a) * t)
                })
            })
            .collect();
        let values: Vec<f64> = nodes
            .par_iter()
            .map(|&(_, _, x)| b0_closed(lambda, x.clamp(0.0, two_l)))
            .collect::<Result<_>>()?;
        let mut panels = Vec::with_capacity(count);
        for p in 0..count {
            let a = p as f64 * width;
            let b = if p + 1 == count { two_l } else { a + width };
            let f = &values[p * (n + 1)..(p + 1) * (n + 1)];
            let mut c = vec![0.0; n + 1];
            for (k, ck) in c.iter_mut().enumerate() {
                let mut s = 0.0;
                for (j, fj) in f.iter().enumerate() {
                    let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                    s += w * fj * (PI * (j * k) as f64 / n as f64).cos();
                }
                *ck = 2.0 * s / n as f64;
            }
            c[0] *= 0.5;
            c[n] *= 0.5;
            let scale = 2.0 / (b - a);
            let d1: Vec<f64> = cheb_derivative(&c).iter().map(|v| v * scale).collect();
            let d2: Vec<f64> = cheb_derivative(&d1).iter().map(|v| v * scale).collect();
            let d3: Vec<f64> = cheb_derivative(&d2).iter().map(|v| v * scale).collect();
            panels.push(Panel {
                a,
                b,
                coefs: [c, d1, d2, d3],
            });
        }
        Ok(Self { lambda, panels })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Derivative of order 0..=3 at `r`; zero beyond `2Λ`.
    pub fn eval(&self, r: f64, order: usize) -> f64 {
        if r >= 2.0 * self.lambda || order > 3 {
            return 0.0;
        }
        let r = r.max(0.0);
        let w = self.panels[0].b - self.panels[0].a;
        let i = ((r / w) as usize).min(self.panels.len() - 1);
        let p = &self.panels[i];
        let t = (2.0 * r - p.a - p.b) / (p.b - p.a);
        clenshaw(&p.coefs[order], t)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> QuadOptions {
        QuadOptions::new(1e-300, 1e-13)
    }

    #[test]
    fn closed_form_end_values() {
        assert_eq!(b0_closed(3.0, 6.0).unwrap(), 0.0);
        assert_eq!(b0_closed(3.0, 7.0).unwrap(), 0.0);
        assert!(b0_closed(3.0, -1.0).is_err());
        let q = b0_quad(1.0, 0.0, tight()).unwrap().value;
        assert!((b0_closed(1.0, 0.0).unwrap() - q).abs() < 1e-15);
        // Continuity into the origin.
        let a = b0_closed(5.0, 1e-9).unwrap();
        let b = b0_closed(5.0, 0.0).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for &(l, r) in &[(1.0, 1.0), (1.0, 0.3), (2.0, 3.9), (10.0, 5.0), (100.0, 1e-3), (100.0, 199.0)] {
            let c = b0_closed(l, r).unwrap();
            let q = b0_quad(l, r, tight()).unwrap().value;
            assert!((c - q).abs() <= 1e-11 * q, "L={l} r={r}: {c} vs {q}");
        }
    }

    #[test]
    fn precision_is_sufficient() {
        // Doubling the guard bits must not move the double result.
        for &(l, r) in &[(1000.0, 1e-7), (1000.0, 1999.999), (3.0, 2.5), (0.1, 0.05)] {
            let rb = BigFloat::from_f64(r, 64);
            let a = to_f64(&closed_hp(l, &rb, 64));
            let b = to_f64(&closed_hp(l, &rb, 400));
            assert!((a - b).abs() <= 2e-16 * b.abs(), "L={l} r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn oracle_agrees() {
        let opts = QuadOptions::new(1e-9, 1e-10);
        for &(l, k) in &[(2.0, 1.0), (1.0, 0.5), (5.0, 9.0)] {
            let o = b0_3d_oracle(l, k, opts).unwrap().value;
            let q = b0_quad(l, k, tight()).unwrap().value;
            assert!((o - q).abs() < 1e-8, "{l} {k} {o} {q}");
        }
        assert_eq!(b0_3d_oracle(1.0, 2.0, opts).unwrap().value, 0.0);
        assert!(b0_3d_oracle(1.0, 0.0, opts).is_err());
    }

    #[test]
    fn edge_derivatives() {
        let l = 1.0;
        let el = e(l);
        let d1 = b0_derivatives(l, 2.0, 1).unwrap();
        assert!(d1.abs() < 1e-12);
        let d2 = b0_derivatives(l, 2.0, 2).unwrap();
        let expect = l / (4.0 * PI * el.powi(3));
        assert!((d2 - expect).abs() < 1e-10 * expect, "{d2} {expect}");
        // Interior central stencil against a quadrature difference.
        let h = 1e-4;
        let fd = (b0_quad(l, 0.7 + h, tight()).unwrap().value
            - b0_quad(l, 0.7 - h, tight()).unwrap().value)
            / (2.0 * h);
        assert!((b0_derivatives(l, 0.7, 1).unwrap() - fd).abs() < 1e-7);
        assert!(b0_derivatives(l, 0.7, 4).is_err());
    }

    #[test]
    fn scaling_limit() {
        assert!(b_infinity(2.0).unwrap().abs() < 1e-15);
        assert!((b_infinity_inner(1.0) - b_infinity_outer(1.0)).abs() < 1e-15);
        assert!(b_infinity(0.0).is_err());
        assert!(b_infinity(2.5).is_err());
        let lim = b_infinity(0.5).unwrap();
        let far = (b0_closed(200.0, 100.0).unwrap() - lim).abs();
        let near = (b0_closed(50.0, 25.0).unwrap() - lim).abs();
        assert!(far < near);
    }

    #[test]
    fn spline_tracks_closed_form() {
        let s = SharpSpline::new(3.0).unwrap();
        for i in 0..=97 {
            let r = 6.0 * i as f64 / 97.0;
            let c = b0_closed(3.0, r).unwrap();
            assert!((s.value(r) - c).abs() < 1e-14, "{r}");
        }
        for &r in &[0.0, 1.3, 5.99, 6.0] {
            for o in 1..=3u8 {
                let d = b0_derivatives(3.0, r, o).unwrap();
                let v = s.eval(r, o as usize);
                let v = if r == 6.0 { s.eval(r - 1e-12, o as usize) } else { v };
                assert!((v - d).abs() < 1e-7 * (1.0 + d.abs()), "r={r} o={o}: {v} vs {d}");
            }
        }
        assert_eq!(s.value(6.5), 0.0);
    }
}
