//! Relativistic dispersion, ultraviolet cut-off models and the edge helpers
//! `W_Λ` and `Z_Λ` used by the sharp kernel.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// `E(p) = sqrt(1 + p^2)`.
pub fn energy(p: f64) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(Error::domain("energy", p, "[0, inf)"));
    }
    Ok(p.hypot(1.0))
}

/// Unchecked energy for internal use where the argument is a real momentum
/// component of either sign.
#[inline]
pub(crate) fn e(p: f64) -> f64 {
    p.hypot(1.0)
}

/// A cut-off profile `ζ : [0, ∞) -> [0, ∞)` with analytic derivatives.
pub trait Zeta: Send + Sync {
    fn value(&self, x: f64) -> f64;
    /// Derivative of order 1, 2 or 3.
    fn derivative(&self, x: f64, order: u8) -> f64;
    fn name(&self) -> String {
        "custom".into()
    }
}

/// `ζ(t) = t`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearZeta;

impl Zeta for LinearZeta {
    fn value(&self, x: f64) -> f64 {
        x
    }
    fn derivative(&self, _x: f64, order: u8) -> f64 {
        if order == 1 {
            1.0
        } else {
            0.0
        }
    }
    fn name(&self) -> String {
        "t".into()
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Profile given by four caller-supplied closures (value and three derivatives).
#[derive(Clone)]
pub struct ZetaFn {
    name: String,
    f: [ScalarFn; 4],
}

impl ZetaFn {
    pub fn new<F0, F1, F2, F3>(name: impl Into<String>, f: F0, d1: F1, d2: F2, d3: F3) -> Self
    where
        F0: Fn(f64) -> f64 + Send + Sync + 'static,
        F1: Fn(f64) -> f64 + Send + Sync + 'static,
        F2: Fn(f64) -> f64 + Send + Sync + 'static,
        F3: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            f: [Arc::new(f), Arc::new(d1), Arc::new(d2), Arc::new(d3)],
        }
    }
}

impl Zeta for ZetaFn {
    fn value(&self, x: f64) -> f64 {
        (self.f[0])(x)
    }
    fn derivative(&self, x: f64, order: u8) -> f64 {
        match order {
            1..=3 => (self.f[order as usize])(x),
            _ => f64::NAN,
        }
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CutoffKind {
    Sharp,
    SmoothLinear,
    SmoothCustom,
}

#[derive(Clone)]
enum Profile {
    None,
    Linear,
    Custom {
        zeta: Arc<dyn Zeta>,
        epsilon: f64,
        validated: bool,
    },
}

/// Which ultraviolet regularization is in force.
#[derive(Clone)]
pub struct CutoffModel {
    lambda: f64,
    profile: Profile,
}

impl fmt::Debug for CutoffModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("CutoffModel");
        d.field("kind", &self.kind()).field("lambda", &self.lambda);
        if let Profile::Custom {
            zeta,
            epsilon,
            validated,
        } = &self.profile
        {
            d.field("zeta", &zeta.name())
                .field("epsilon", epsilon)
                .field("validated", validated);
        }
        d.finish()
    }
}

/// Serializable description of a model, embedded in output headers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub kind: CutoffKind,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("cut-off", lambda, "(0, inf)"))
    }
}

impl CutoffModel {
    pub fn sharp(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            lambda,
            profile: Profile::None,
        })
    }

    pub fn smooth_linear(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            lambda,
            profile: Profile::Linear,
        })
    }

    /// A custom profile. It cannot be used by kernel evaluators until
    /// [`CutoffModel::validate`] has accepted it.
    pub fn smooth_custom(lambda: f64, zeta: Arc<dyn Zeta>, epsilon: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !(epsilon > 0.0) {
            return Err(Error::domain("growth exponent", epsilon, "(0, inf)"));
        }
        Ok(Self {
            lambda,
            profile: Profile::Custom {
                zeta,
                epsilon,
                validated: false,
            },
        })
    }

    /// Run [`validate_cutoff`] and, on success, mark the model usable.
    pub fn validate(mut self) -> (Self, CutoffReport) {
        let report = validate_cutoff(&self);
        if let Profile::Custom { validated, .. } = &mut self.profile {
            *validated = report.passed;
        }
        (self, report)
    }

    pub fn kind(&self) -> CutoffKind {
        match self.profile {
            Profile::None => CutoffKind::Sharp,
            Profile::Linear => CutoffKind::SmoothLinear,
            Profile::Custom { .. } => CutoffKind::SmoothCustom,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_sharp(&self) -> bool {
        matches!(self.profile, Profile::None)
    }

    /// Growth exponent of the profile (1 for the linear one, none for sharp).
    pub fn epsilon(&self) -> Option<f64> {
        match &self.profile {
            Profile::None => None,
            Profile::Linear => Some(1.0),
            Profile::Custom { epsilon, .. } => Some(*epsilon),
        }
    }

    /// Asymptotic statements in Λ are only meaningful from Λ = 4 on.
    pub fn in_asymptotic_regime(&self) -> bool {
        self.lambda >= 4.0
    }

    /// Errors unless the model may be fed to a kernel evaluator.
    pub fn ensure_usable(&self) -> Result<()> {
        match &self.profile {
            Profile::Custom {
                validated: false,
                zeta,
                ..
            } => Err(Error::Precondition(format!(
                "custom cut-off profile '{}' has not passed validation",
                zeta.name()
            ))),
            _ => Ok(()),
        }
    }

    /// `ζ(x)`, identically zero for the sharp model.
    pub fn zeta(&self, x: f64) -> f64 {
        match &self.profile {
            Profile::None => 0.0,
            Profile::Linear => x,
            Profile::Custom { zeta, .. } => zeta.value(x),
        }
    }

    pub fn zeta_derivative(&self, x: f64, order: u8) -> f64 {
        match &self.profile {
            Profile::None => 0.0,
            Profile::Linear => LinearZeta.derivative(x, order),
            Profile::Custom { zeta, .. } => zeta.derivative(x, order),
        }
    }

    pub fn spec(&self) -> ModelSpec {
        let (zeta, epsilon) = match &self.profile {
            Profile::None => (None, None),
            Profile::Linear => (Some("t".to_string()), Some(1.0)),
            Profile::Custom { zeta, epsilon, .. } => (Some(zeta.name()), Some(*epsilon)),
        };
        ModelSpec {
            kind: self.kind(),
            lambda: self.lambda,
            zeta,
            epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionPoint {
    pub p: f64,
    pub energy: f64,
    /// `|D^ζ(p)| = E(p) (1 + ζ(p²/Λ²))`.
    pub multiplier: f64,
}

/// Modulus of the regularized free Dirac symbol at momentum `p`.
///
/// For the sharp model, momenta above Λ are reported as [`Error::OutOfBand`].
pub fn dirac_multiplier(model: &CutoffModel, p: f64) -> Result<DispersionPoint> {
    let energy = energy(p)?;
    model.ensure_usable()?;
    if model.is_sharp() && p > model.lambda {
        return Err(Error::OutOfBand {
            p,
            lambda: model.lambda,
        });
    }
    let l = model.lambda;
    Ok(DispersionPoint {
        p,
        energy,
        multiplier: energy * (1.0 + model.zeta(p * p / (l * l))),
    })
}

fn check_edge_arg(what: &'static str, lambda: f64, r: f64) -> Result<()> {
    check_lambda(lambda)?;
    if r >= 0.0 && r <= 2.0 * lambda {
        Ok(())
    } else {
        Err(Error::domain(what, r, format!("[0, {}]", 2.0 * lambda)))
    }
}

/// `W_Λ(r) = (E(Λ) + E(Λ - r)) / 2`.
pub fn w_upper(lambda: f64, r: f64) -> Result<f64> {
    check_edge_arg("w_upper", lambda, r)?;
    Ok(0.5 * (e(lambda) + e(lambda - r)))
}

/// `Z_Λ(r) = (E(Λ) - E(Λ - r)) / r`, continuous at `r = 0` with value `Λ/E(Λ)`.
///
/// Evaluated as `(2Λ - r)/(E(Λ) + E(Λ - r))`, which is algebraically identical
/// and has no cancellation anywhere on `[0, 2Λ]`.
pub fn z_edge(lambda: f64, r: f64) -> Result<f64> {
    check_edge_arg("z_edge", lambda, r)?;
    Ok(z_edge_unchecked(lambda, r))
}

#[inline]
pub(crate) fn z_edge_unchecked(lambda: f64, r: f64) -> f64 {
    (2.0 * lambda - r) / (e(lambda) + e(lambda - r))
}

/// One sampled condition of [`validate_cutoff`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub check: String,
    pub x: f64,
    pub detail: String,
}

/// Result of the sampling-based check of the cut-off assumptions.
///
/// This is a sampled certificate: it can refute the assumptions but cannot
/// prove them for all `x >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffReport {
    pub certificate: &'static str,
    pub passed: bool,
    pub samples: usize,
    pub x_max: f64,
    /// Smallest constant making the derivative-domination bound hold on the samples.
    pub constant_c: f64,
    pub violations: Vec<Violation>,
    /// Violation of the most basic failed assumption, largest first; `None` when passed.
    pub worst: Option<Violation>,
}

/// Logarithmic sample grid on `[0, x_max]` (zero included).
pub fn validation_grid(x_max: f64, per_decade: usize) -> Vec<f64> {
    let lo = -8.0f64;
    let hi = x_max.log10();
    let n = ((hi - lo) * per_decade as f64).ceil() as usize;
    let mut g = vec![0.0];
    g.extend((0..=n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / n as f64)));
    g
}

/// Sample the cut-off profile and test `ζ(0) = 0`, monotonicity, the growth
/// floor `ζ(x) >= ε x^{ε/2}` for `x >= 1`, and report the smallest `C` with
/// `(1 + x^p)|ζ^{(p)}(x)| <= C (1 + ζ(x))`, `p = 1, 2, 3`.
pub fn validate_cutoff(model: &CutoffModel) -> CutoffReport {
    let x_max = 1e6;
    let grid = validation_grid(x_max, 200);
    let eps = model.epsilon();
    let mut violations: Vec<(f64, Violation)> = Vec::new();
    let mut c_max = 0.0f64;
    if model.is_sharp() {
        return CutoffReport {
            certificate: "sampled certificate",
            passed: true,
            samples: 0,
            x_max,
            constant_c: 0.0,
            violations: vec![],
            worst: None,
        };
    }
    let eps = eps.unwrap_or(1.0);
    let z0 = model.zeta(0.0);
    if z0.abs() > 1e-14 || !z0.is_finite() {
        violations.push((
            z0.abs(),
            Violation {
                check: "zero at origin".into(),
                x: 0.0,
                detail: format!("zeta(0) = {z0}"),
            },
        ));
    }
    let mut prev = z0;
    for &x in &grid {
        let z = model.zeta(x);
        let d1 = model.zeta_derivative(x, 1);
        let scale = 1.0 + z.abs();
        if !z.is_finite() || !d1.is_finite() {
            violations.push((
                f64::INFINITY,
                Violation {
                    check: "finite".into(),
                    x,
                    detail: format!("zeta = {z}, zeta' = {d1}"),
                },
            ));
            continue;
        }
        if z < prev - 1e-12 * scale || d1 < -1e-12 * (1.0 + d1.abs()) {
            violations.push((
                ((prev - z).max(-d1)) / scale,
                Violation {
                    check: "monotonicity".into(),
                    x,
                    detail: format!("zeta = {z} after {prev}, zeta' = {d1}"),
                },
            ));
        }
        prev = z;
        if x >= 1.0 {
            let floor = eps * x.powf(eps / 2.0);
            if z < floor {
                violations.push((
                    (floor - z) / floor,
                    Violation {
                        check: "growth floor".into(),
                        x,
                        detail: format!("zeta = {z} < {floor} = eps x^(eps/2)"),
                    },
                ));
            }
        }
        for p in 1..=3u8 {
            let dp = model.zeta_derivative(x, p);
            let c = (1.0 + x.powi(p as i32)) * dp.abs() / (1.0 + z.max(0.0));
            if c.is_finite() {
                c_max = c_max.max(c);
            } else {
                violations.push((
                    f64::INFINITY,
                    Violation {
                        check: format!("derivative bound p={p}"),
                        x,
                        detail: format!("non-finite ratio, derivative = {dp}"),
                    },
                ));
            }
        }
    }
    // The most basic failed assumption is reported first, then the largest offence.
    let rank = |v: &Violation| match v.check.as_str() {
        "finite" => 0,
        "zero at origin" => 1,
        "monotonicity" => 2,
        "growth floor" => 3,
        _ => 4,
    };
    let worst = violations
        .iter()
        .max_by(|a, b| rank(&b.1).cmp(&rank(&a.1)).then(a.0.total_cmp(&b.0)))
        .map(|(_, v)| v.clone());
    CutoffReport {
        certificate: "sampled certificate",
        passed: violations.is_empty(),
        samples: grid.len(),
        x_max,
        constant_c: c_max,
        violations: violations.into_iter().map(|(_, v)| v).collect(),
        worst,
    }
}
