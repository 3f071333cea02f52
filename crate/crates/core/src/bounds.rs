//! Closed-form brackets: energy bounds, the pair-creation parameter, the
//! `L¹` envelope of the response kernel and the ionization envelopes.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::b_t_zero_closed;
use crate::quadrature::QuadOptions;
use crate::sources::{coulomb_pairing, RadialDensity};

/// Tag carried by every output that depends on the user-supplied constant `C`.
pub const CONDITIONAL_TAG: &str = "conditional on supplied C";

/// `D(ν, ν)` with the default pairing tolerance.
pub fn self_energy(nu: &RadialDensity) -> Result<f64> {
    Ok(coulomb_pairing(nu, nu, QuadOptions::new(1e-12, 1e-11))?.value)
}

/// `(|q| − (α/2) D(ν, ν), |q|)`.
pub fn energy_bracket(q: f64, alpha: f64, d_nu: f64) -> Result<(f64, f64)> {
    if !(alpha >= 0.0) || !q.is_finite() || !(d_nu >= 0.0) {
        return Err(Error::InvalidInput(
            "energy bracket needs finite q, α ≥ 0 and D(ν, ν) ≥ 0".into(),
        ));
    }
    Ok((q.abs() - 0.5 * alpha * d_nu, q.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairCreation {
    pub theta: f64,
    /// `1 − θ`, or 0 when `θ ≥ 1` (no gap bound).
    pub gap_lower: f64,
    /// `θ < 1`, the sufficient condition for an unpolarized vacuum charge.
    pub sufficient_condition: bool,
}

/// `θ = α π^{1/6} 2^{11/6} D(ν, ν)^{1/2}`.
pub fn pair_creation_theta(alpha: f64, d_nu: f64) -> Result<PairCreation> {
    if !(alpha >= 0.0) || !(d_nu >= 0.0) {
        return Err(Error::InvalidInput("θ needs α ≥ 0 and D(ν, ν) ≥ 0".into()));
    }
    let theta = alpha * PI.powf(1.0 / 6.0) * 2f64.powf(11.0 / 6.0) * d_nu.sqrt();
    Ok(PairCreation {
        theta,
        gap_lower: if theta < 1.0 { 1.0 - theta } else { 0.0 },
        sufficient_condition: theta < 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ILambdaEnvelope {
    pub b_zero: f64,
    /// `αB(0)/(1 − αB(0))`.
    pub from_b_zero: f64,
    /// `x/(1 − x)` with `x = (2/(3π)) α log Λ`.
    pub log_majorant: f64,
}

/// Envelopes of `‖b‖_{L¹}` for `ζ(t) = t`, `Λ ≥ 4`.
pub fn i_lambda_envelope(alpha: f64, lambda: f64) -> Result<ILambdaEnvelope> {
    if !(lambda >= 4.0) {
        return Err(Error::Precondition(format!("the I_Λ envelope needs Λ ≥ 4, got {lambda}")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::domain("alpha", alpha, "[0, inf)"));
    }
    let x = 2.0 / (3.0 * PI) * alpha * lambda.ln();
    if !(x < 1.0) {
        return Err(Error::Precondition(format!(
            "log majorant undefined: (2/(3π)) α log Λ = {x} ≥ 1"
        )));
    }
    let b_zero = b_t_zero_closed(lambda)?;
    let y = alpha * b_zero;
    Ok(ILambdaEnvelope {
        b_zero,
        from_b_zero: y / (1.0 - y),
        log_majorant: x / (1.0 - x),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IonizationEnvelope {
    pub qm_lower: f64,
    pub qm_upper_bound: f64,
    pub constant_c: f64,
    pub tag: &'static str,
}

/// The two envelope expressions at a supplied universal constant `C`:
/// `q_m ≥ −C (Zα log Λ + 1/Λ + αD)/(1 − Cα log Λ)` and
/// `q_M ≤ (2Z + C (Zα log Λ + 1/Λ + αD))/(1 − Cα log Λ)`.
pub fn ionization_envelope(alpha: f64, lambda: f64, z: f64, d_nu: f64, c: f64) -> Result<IonizationEnvelope> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidInput(format!("constant C must be positive, got {c}")));
    }
    if !(lambda >= 4.0) {
        return Err(Error::Precondition(format!("the envelopes need Λ ≥ 4, got {lambda}")));
    }
    if !(alpha >= 0.0) || !(d_nu >= 0.0) || !(z > 0.0) {
        return Err(Error::InvalidInput(
            "the envelopes need α ≥ 0, D(ν, ν) ≥ 0 and Z > 0".into(),
        ));
    }
    let al = alpha * lambda.ln();
    if !(al < 1.0 / c) {
        return Err(Error::Precondition(format!(
            "envelope undefined: α log Λ = {al} ≥ 1/C = {}",
            1.0 / c
        )));
    }
    // C distributed over the sum so that α = 0 gives exactly C/Λ.
    let cs = c * z * al + c / lambda + c * alpha * d_nu;
    let den = 1.0 - c * al;
    Ok(IonizationEnvelope {
        qm_lower: -cs / den,
        qm_upper_bound: (2.0 * z + cs) / den,
        constant_c: c,
        tag: CONDITIONAL_TAG,
    })
}

/// Every bracket for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub q: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub coulomb_self_energy: f64,
    pub energy_lower: f64,
    pub energy_upper: f64,
    pub theta: f64,
    pub gap_lower: f64,
    pub sufficient_condition: bool,
    pub i_lambda: Option<ILambdaEnvelope>,
    pub ionization: Option<IonizationEnvelope>,
}

/// Assemble a [`BoundsReport`]; the ionization envelope is included only
/// when `c` is supplied, and the `I_Λ` envelope only where it is defined.
pub fn bounds_report(q: f64, alpha: f64, lambda: f64, nu: &RadialDensity, c: Option<f64>) -> Result<BoundsReport> {
    let d = self_energy(nu)?;
    let (lo, hi) = energy_bracket(q, alpha, d)?;
    let p = pair_creation_theta(alpha, d)?;
    let i_lambda = i_lambda_envelope(alpha, lambda).ok();
    let ionization = match c {
        Some(c) => Some(ionization_envelope(alpha, lambda, nu.charge(), d, c)?),
        None => None,
    };
    Ok(BoundsReport {
        q,
        alpha,
        lambda,
        coulomb_self_energy: d,
        energy_lower: lo,
        energy_upper: hi,
        theta: p.theta,
        gap_lower: p.gap_lower,
        sufficient_condition: p.sufficient_condition,
        i_lambda,
        ionization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_width_is_half_self_energy() {
        let nu = RadialDensity::gaussian(1.0, 1.0).unwrap();
        let d = self_energy(&nu).unwrap();
        let (lo, hi) = energy_bracket(1.0, 0.1, d).unwrap();
        assert_eq!(hi, 1.0);
        assert!((lo - (1.0 - 0.05 / PI.sqrt())).abs() < 1e-12);
        assert_eq!(hi - lo, 0.5 * 0.1 * d);
        assert_eq!(energy_bracket(-2.0, 0.3, 0.0).unwrap(), (2.0, 2.0));
    }

    #[test]
    fn theta_values() {
        let p = pair_creation_theta(0.0, 3.0).unwrap();
        assert_eq!((p.theta, p.gap_lower, p.sufficient_condition), (0.0, 1.0, true));
        let d = 1.0 / PI.sqrt();
        let p = pair_creation_theta(0.05, d).unwrap();
        let want = 0.05 * PI.powf(1.0 / 6.0) * 2f64.powf(11.0 / 6.0) * d.sqrt();
        assert!((p.theta - want).abs() < 1e-15);
        let alpha_one = 1.0 / (PI.powf(1.0 / 6.0) * 2f64.powf(11.0 / 6.0));
        let p = pair_creation_theta(alpha_one * 1.000001, 1.0).unwrap();
        assert!(!p.sufficient_condition);
        assert_eq!(p.gap_lower, 0.0);
    }

    #[test]
    fn envelopes() {
        let e = i_lambda_envelope(0.0, 10.0).unwrap();
        assert_eq!((e.from_b_zero, e.log_majorant), (0.0, 0.0));
        let a = 0.5 / (2.0 / (3.0 * PI) * 4f64.ln());
        let e = i_lambda_envelope(a, 4.0).unwrap();
        assert!((e.log_majorant - 1.0).abs() < 1e-12);
        assert!(e.from_b_zero <= e.log_majorant);
        assert!(i_lambda_envelope(0.1, 3.0).is_err());

        for &(l, c) in &[(100.0, 2.0), (100.0, 0.7), (7.0, 0.3)] {
            let z = ionization_envelope(0.0, l, 1.0, 0.5, c).unwrap();
            assert_eq!(z.qm_lower, -c / l);
            assert_eq!(z.qm_upper_bound, 2.0 + c / l);
        }
        assert_eq!(ionization_envelope(0.0, 9.0, 1.0, 0.0, 1.0).unwrap().tag, CONDITIONAL_TAG);
        assert!(matches!(
            ionization_envelope(0.5, 100.0, 1.0, 0.5, 1.0),
            Err(Error::Precondition(_))
        ));
    }
}
