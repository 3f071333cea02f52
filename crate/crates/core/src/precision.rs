//! Thin arbitrary-precision layer used where double precision cancels badly.

use std::cell::RefCell;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

/// Working precision in bits, rounded up to a whole number of 64-bit words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hp {
    pub bits: usize,
}

impl Hp {
    pub fn new(bits: usize) -> Self {
        Self {
            bits: bits.max(64).div_ceil(64) * 64,
        }
    }

    pub fn f(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.bits)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.bits, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.bits, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.bits, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.bits, RM)
    }

    /// Multiply by a double (exactly representable scalars such as 2/3 are not, so
    /// rational factors should go through `ratio`).
    pub fn scale(&self, a: &BigFloat, s: f64) -> BigFloat {
        self.mul(a, &self.f(s))
    }

    /// `a * num / den` with exact integer numerator and denominator.
    pub fn ratio(&self, a: &BigFloat, num: i32, den: i32) -> BigFloat {
        self.div(&self.mul(a, &self.f(num as f64)), &self.f(den as f64))
    }

    pub fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(self.bits, RM)
    }

    pub fn ln(&self, a: &BigFloat) -> BigFloat {
        CONSTS.with(|c| a.ln(self.bits, RM, &mut c.borrow_mut()))
    }

    pub fn atanh(&self, a: &BigFloat) -> BigFloat {
        CONSTS.with(|c| a.atanh(self.bits, RM, &mut c.borrow_mut()))
    }

    pub fn pi(&self) -> BigFloat {
        CONSTS.with(|c| c.borrow_mut().pi(self.bits, RM))
    }
}

/// Nearest-ish double of a big float (truncation to 128 bits, then one rounding).
pub fn to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    let Some((words, _n, sign, exp, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let len = words.len();
    if len == 0 || words.iter().all(|&w| w == 0) {
        return 0.0;
    }
    // Mantissa is 0.m with the most significant word last.
    let hi = words[len - 1] as u128;
    let lo = if len >= 2 { words[len - 2] as u128 } else { 0 };
    let m = (hi << 64) | lo;
    let v = (m as f64) * 2f64.powi(exp - 128);
    let v = if !v.is_finite() || v == 0.0 {
        // Split the scaling to reach the extremes of the double range.
        (m as f64) * 2f64.powi(exp / 2 - 64) * 2f64.powi(exp - exp / 2 - 64)
    } else {
        v
    };
    match sign {
        Sign::Neg => -v,
        Sign::Pos => v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_doubles() {
        let hp = Hp::new(200);
        for &x in &[1.0, -3.5, 1e-300, 7.25e200, std::f64::consts::PI, 0.1, -1e-20] {
            assert_eq!(to_f64(&hp.f(x)), x);
        }
        assert_eq!(to_f64(&hp.f(0.0)), 0.0);
    }

    #[test]
    fn elementary_functions() {
        let hp = Hp::new(256);
        let l2 = to_f64(&hp.ln(&hp.f(2.0)));
        assert!((l2 - std::f64::consts::LN_2).abs() < 1e-16);
        let a = to_f64(&hp.atanh(&hp.f(0.5)));
        assert!((a - 0.549_306_144_334_054_8).abs() <= f64::EPSILON * a);
        let third = to_f64(&hp.ratio(&hp.f(1.0), 1, 3));
        assert_eq!(third, 1.0 / 3.0);
        assert!((to_f64(&hp.pi()) - std::f64::consts::PI).abs() < 1e-16);
    }
}
