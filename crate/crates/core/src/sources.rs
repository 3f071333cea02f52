//! Radial external charge densities, their transforms and the Coulomb pairing.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::kernel::Estimate;
use crate::quadrature::{integrate_pieces, GaussRule, QuadOptions};
use crate::transform::{unitary_prefactor, HermiteFilon};

/// `(2π)^{-3/2}`.
fn unitary_norm() -> f64 {
    (2.0 * PI).powf(-1.5)
}

/// Relative tolerance of the charge check for tabulated densities.
pub const CHARGE_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
struct Table {
    interp: MonotoneCubic,
    filon: HermiteFilon,
    /// Charge enclosed up to each node.
    enclosed: Vec<f64>,
    /// `4π ∫_{r_i}^{r_max} ν s ds` at each node.
    outer: Vec<f64>,
    charge: f64,
    rule: GaussRule,
}

impl Table {
    fn build(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r[0] < 0.0 {
            return Err(Error::InvalidInput("tabulated radii must be non-negative".into()));
        }
        let interp = MonotoneCubic::new(r, v)?;
        let rule = GaussRule::new(4);
        let x = interp.nodes();
        let n = x.len();
        let mut enclosed = vec![0.0; n];
        // Below the first node the density is held at its first value.
        enclosed[0] = 4.0 / 3.0 * PI * interp.values()[0] * x[0].powi(3);
        for i in 1..n {
            let q = rule.integrate(|s| interp.eval_or(s, 0.0) * s * s, x[i - 1], x[i]);
            enclosed[i] = enclosed[i - 1] + 4.0 * PI * q;
        }
        let mut outer = vec![0.0; n];
        for i in (0..n - 1).rev() {
            let q = rule.integrate(|s| interp.eval_or(s, 0.0) * s, x[i], x[i + 1]);
            outer[i] = outer[i + 1] + 4.0 * PI * q;
        }
        let filon = HermiteFilon::new(&interp);
        Ok(Self {
            charge: enclosed[n - 1],
            interp,
            filon,
            enclosed,
            outer,
            rule,
        })
    }

    fn value(&self, r: f64) -> f64 {
        let (a, _) = self.interp.domain();
        if r < a {
            return self.interp.values()[0];
        }
        self.interp.eval_or(r, 0.0)
    }

    fn node_index(&self, r: f64) -> usize {
        self.interp.nodes().partition_point(|&v| v <= r)
    }

    fn enclosed(&self, r: f64) -> f64 {
        let x = self.interp.nodes();
        let (a, b) = self.interp.domain();
        if r <= a {
            return 4.0 / 3.0 * PI * self.interp.values()[0] * r.powi(3);
        }
        if r >= b {
            return self.charge;
        }
        let i = self.node_index(r) - 1;
        self.enclosed[i] + 4.0 * PI * self.rule.integrate(|s| self.interp.eval_or(s, 0.0) * s * s, x[i], r)
    }

    fn outer(&self, r: f64) -> f64 {
        let x = self.interp.nodes();
        let (a, b) = self.interp.domain();
        if r >= b {
            return 0.0;
        }
        if r <= a {
            return self.outer[0] + 2.0 * PI * self.interp.values()[0] * (a * a - r * r);
        }
        let i = self.node_index(r) - 1;
        self.outer[i + 1] + 4.0 * PI * self.rule.integrate(|s| self.interp.eval_or(s, 0.0) * s, r, x[i + 1])
    }

    /// `√(2/π)(|ν(R)| R + TV(ν r))`: with one integration by parts,
    /// `|ν̂(k)| ≤ bound / k²`.
    fn decay_constant(&self) -> f64 {
        let x = self.interp.nodes();
        let (_, b) = self.interp.domain();
        let mut tv = 0.0;
        let mut prev = 0.0;
        let samples = 16 * x.len();
        for j in 1..=samples {
            let s = b * j as f64 / samples as f64;
            let cur = self.value(s) * s;
            tv += (cur - prev).abs();
            prev = cur;
        }
        let last = *self.interp.values().last().unwrap_or(&0.0);
        unitary_prefactor() * (last.abs() * b + tv)
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Gaussian { sigma: f64 },
    Exponential { a: f64 },
    UniformBall { radius: f64 },
    Tabulated(Box<Table>),
}

/// Serializable summary of a density, embedded in output headers.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SourceSpec {
    Gaussian { z: f64, sigma: f64 },
    Exponential { z: f64, a: f64 },
    UniformBall { z: f64, radius: f64 },
    Tabulated { z: f64, nodes: usize, r_max: f64 },
}

/// A spherically symmetric charge distribution `ν` of total charge `Z`.
#[derive(Debug, Clone)]
pub struct RadialDensity {
    z: f64,
    kind: Kind,
}

fn check_scale(what: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(what, v, "(0, inf)"))
    }
}

fn check_charge(z: f64) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("total charge {z} is not finite")))
    }
}

impl RadialDensity {
    /// `ν(r) = Z (2πσ²)^{-3/2} e^{-r²/(2σ²)}`.
    pub fn gaussian(z: f64, sigma: f64) -> Result<Self> {
        check_charge(z)?;
        check_scale("sigma", sigma)?;
        Ok(Self {
            z,
            kind: Kind::Gaussian { sigma },
        })
    }

    /// `ν(r) = Z e^{-r/a} / (8π a³)`.
    pub fn exponential(z: f64, a: f64) -> Result<Self> {
        check_charge(z)?;
        check_scale("decay length", a)?;
        Ok(Self {
            z,
            kind: Kind::Exponential { a },
        })
    }

    /// Uniform charge `3Z/(4πR³)` inside radius `R`.
    pub fn uniform_ball(z: f64, radius: f64) -> Result<Self> {
        check_charge(z)?;
        check_scale("radius", radius)?;
        Ok(Self {
            z,
            kind: Kind::UniformBall { radius },
        })
    }

    /// Tabulated density, monotone-cubic between nodes and zero beyond the last
    /// one. When `declared_z` is given, the integrated charge must match it.
    pub fn tabulated(r: Vec<f64>, values: Vec<f64>, declared_z: Option<f64>) -> Result<Self> {
        let table = Table::build(r, values)?;
        let z = table.charge;
        if let Some(d) = declared_z {
            if !((z - d).abs() <= CHARGE_CHECK_TOL * d.abs().max(f64::MIN_POSITIVE)) {
                return Err(Error::InvalidInput(format!(
                    "tabulated density integrates to {z}, declared charge is {d}"
                )));
            }
        }
        Ok(Self {
            z,
            kind: Kind::Tabulated(Box::new(table)),
        })
    }

    /// Parse two numeric columns (radius, value); `#` starts a comment.
    pub fn parse_table(text: &str, declared_z: Option<f64>) -> Result<Self> {
        let mut r = Vec::new();
        let mut v = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::InvalidInput(format!(
                    "line {}: expected two columns, found {}",
                    n + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("line {}: '{s}': {e}", n + 1)))
            };
            r.push(parse(cols[0])?);
            v.push(parse(cols[1])?);
        }
        Self::tabulated(r, v, declared_z)
    }

    pub fn load_table(path: &Path, declared_z: Option<f64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_table(&text, declared_z)
    }

    pub fn charge(&self) -> f64 {
        self.z
    }

    pub fn spec(&self) -> SourceSpec {
        let z = self.z;
        match &self.kind {
            Kind::Gaussian { sigma } => SourceSpec::Gaussian { z, sigma: *sigma },
            Kind::Exponential { a } => SourceSpec::Exponential { z, a: *a },
            Kind::UniformBall { radius } => SourceSpec::UniformBall { z, radius: *radius },
            Kind::Tabulated(t) => SourceSpec::Tabulated {
                z,
                nodes: t.interp.nodes().len(),
                r_max: t.interp.domain().1,
            },
        }
    }

    /// `ν_λ(x) = λ³ ν(λx)`, which keeps the charge and multiplies `D(ν, ν)` by `λ`.
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        check_scale("rescaling factor", lambda)?;
        Ok(match &self.kind {
            Kind::Gaussian { sigma } => Self::gaussian(self.z, sigma / lambda)?,
            Kind::Exponential { a } => Self::exponential(self.z, a / lambda)?,
            Kind::UniformBall { radius } => Self::uniform_ball(self.z, radius / lambda)?,
            Kind::Tabulated(t) => {
                let r = t.interp.nodes().iter().map(|x| x / lambda).collect();
                let v = t.interp.values().iter().map(|y| y * lambda.powi(3)).collect();
                Self::tabulated(r, v, None)?
            }
        })
    }

    /// Density at radius `r`.
    pub fn real_space(&self, r: f64) -> f64 {
        let z = self.z;
        match &self.kind {
            Kind::Gaussian { sigma } => {
                z * (2.0 * PI * sigma * sigma).powf(-1.5) * (-0.5 * (r / sigma).powi(2)).exp()
            }
            Kind::Exponential { a } => z * (-r / a).exp() / (8.0 * PI * a.powi(3)),
            Kind::UniformBall { radius } => {
                if r <= *radius {
                    3.0 * z / (4.0 * PI * radius.powi(3))
                } else {
                    0.0
                }
            }
            Kind::Tabulated(t) => t.value(r),
        }
    }

    /// Unitary transform `ν̂(k)`, real by radial symmetry.
    pub fn fourier_hat(&self, k: f64) -> Result<f64> {
        if !(k >= 0.0) {
            return Err(Error::domain("fourier_hat", k, "[0, inf)"));
        }
        let c = unitary_norm() * self.z;
        Ok(match &self.kind {
            Kind::Gaussian { sigma } => c * (-0.5 * (sigma * k).powi(2)).exp(),
            Kind::Exponential { a } => c / (1.0 + (a * k).powi(2)).powi(2),
            Kind::UniformBall { radius } => c * ball_form(k * radius),
            Kind::Tabulated(t) => {
                // Constant core below the first node, then the Hermite panels.
                let a = t.interp.domain().0;
                let core = if a > 0.0 {
                    t.interp.values()[0] * 4.0 / 3.0 * PI * a.powi(3) * unitary_norm() * ball_form(k * a)
                } else {
                    0.0
                };
                core + unitary_prefactor() * t.filon.sine_moment_over_x(k)
            }
        })
    }

    /// Largest momentum at which the tabulation resolves `sin(kr)` (two panels
    /// per oscillation). Infinite for the analytic families.
    pub fn resolved_momentum(&self) -> f64 {
        match &self.kind {
            Kind::Tabulated(t) => {
                let h = t
                    .interp
                    .nodes()
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(0.0, f64::max);
                PI / h
            }
            _ => f64::INFINITY,
        }
    }

    /// Charge inside radius `r`, `4π ∫₀^r ν s² ds`.
    pub fn enclosed_charge(&self, r: f64) -> f64 {
        let z = self.z;
        match &self.kind {
            Kind::Gaussian { sigma } => {
                let t = r / sigma;
                z * (libm::erf(t / std::f64::consts::SQRT_2) - unitary_prefactor() * t * (-0.5 * t * t).exp())
            }
            Kind::Exponential { a } => {
                let t = r / a;
                // 1 - e^{-t}(1 + t + t²/2), written to avoid cancellation at small t.
                if t < 0.5 {
                    z * exp_tail_series(t)
                } else {
                    z * (1.0 - (-t).exp() * (1.0 + t + 0.5 * t * t))
                }
            }
            Kind::UniformBall { radius } => z * (r / radius).min(1.0).powi(3),
            Kind::Tabulated(t) => t.enclosed(r),
        }
    }

    /// `4π ∫_r^∞ ν(s) s ds`, the potential at `r` due to charge outside `r`.
    pub fn outer_potential(&self, r: f64) -> f64 {
        let z = self.z;
        match &self.kind {
            Kind::Gaussian { sigma } => z * unitary_prefactor() / sigma * (-0.5 * (r / sigma).powi(2)).exp(),
            Kind::Exponential { a } => z * (r + a) * (-r / a).exp() / (2.0 * a * a),
            Kind::UniformBall { radius } => {
                if r < *radius {
                    1.5 * z * (radius * radius - r * r) / radius.powi(3)
                } else {
                    0.0
                }
            }
            Kind::Tabulated(t) => t.outer(r),
        }
    }

    /// Electrostatic potential `(ν ∗ |·|⁻¹)(r)` by Newton's theorem.
    pub fn potential(&self, r: f64) -> f64 {
        let inner = if r > 0.0 { self.enclosed_charge(r) / r } else { 0.0 };
        inner + self.outer_potential(r)
    }

    /// Radius beyond which the density is negligible (below `1e-20` of its
    /// charge scale) or exactly zero.
    pub fn extent(&self) -> f64 {
        match &self.kind {
            Kind::Gaussian { sigma } => 10.0 * sigma,
            Kind::Exponential { a } => 60.0 * a,
            Kind::UniformBall { radius } => *radius,
            Kind::Tabulated(t) => t.interp.domain().1,
        }
    }

    /// Points where the density or its derivatives jump.
    fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            Kind::UniformBall { radius } => vec![*radius],
            Kind::Tabulated(t) => t.interp.nodes().to_vec(),
            _ => Vec::new(),
        }
    }

    /// Envelope `|ν̂(k)| ≤ c k^{-p}` valid for `k ≥ k0`, as `(c, p, k0)`;
    /// `p = ∞` means faster than any power.
    fn fourier_envelope(&self) -> (f64, f64, f64) {
        let c = unitary_norm() * self.z.abs();
        match &self.kind {
            Kind::Gaussian { sigma } => (c, f64::INFINITY, 1.0 / sigma),
            Kind::Exponential { a } => (c / a.powi(4), 4.0, 1.0 / a),
            // |3(sin x - x cos x)/x³| <= 6/x² for x >= 1.
            Kind::UniformBall { radius } => (6.0 * c / (radius * radius), 2.0, 1.0 / radius),
            Kind::Tabulated(t) => {
                let a = t.interp.domain().0;
                let core = if a > 0.0 {
                    t.interp.values()[0].abs() * 4.0 / 3.0 * PI * a * unitary_norm() * 6.0
                } else {
                    0.0
                };
                (t.decay_constant() + core, 2.0, 0.0)
            }
        }
    }
}

/// `3(sin x − x cos x)/x³`, with its series near zero.
fn ball_form(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        return 1.0 - x2 / 10.0 + x2 * x2 / 280.0 - x2 * x2 * x2 / 15120.0;
    }
    let (s, c) = x.sin_cos();
    3.0 * (s - x * c) / (x * x * x)
}

/// `1 − e^{-t}(1 + t + t²/2)` summed as `e^{-t} Σ_{n≥3} tⁿ/n!`, free of cancellation.
fn exp_tail_series(t: f64) -> f64 {
    let mut term = t * t * t / 6.0;
    let mut sum = 0.0;
    let mut n = 3.0;
    while term > 1e-18 * sum || sum == 0.0 {
        sum += term;
        n += 1.0;
        term *= t / n;
        if term == 0.0 {
            break;
        }
    }
    (-t).exp() * sum
}

/// `D(f, g) = 4π ∫ |k|⁻² f̂ ĝ d³k = 16π² ∫₀^∞ f̂(k) ĝ(k) dk`.
pub fn coulomb_pairing(f: &RadialDensity, g: &RadialDensity, opts: QuadOptions) -> Result<Estimate> {
    if f.z == 0.0 || g.z == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let (cf, pf, kf) = f.fourier_envelope();
    let (cg, pg, kg) = g.fourier_envelope();
    let p = pf + pg;
    let k0 = kf.max(kg).max(1e-300);
    // Choose the cut so the envelope tail, c K^{1-p}/(p-1), is below a tenth of the budget.
    let budget = 0.1 * opts.abs_tol.max(opts.rel_tol * 16.0 * PI * PI * f.fourier_hat(0.0)?.abs() * g.fourier_hat(0.0)?.abs() * k0);
    let c = cf * cg * 16.0 * PI * PI;
    let (k_max, tail) = if p.is_infinite() {
        // At least one Gaussian factor: e^{-σ²k²/2} with σ the smaller Gaussian scale.
        let sigma = [f, g]
            .iter()
            .filter_map(|d| match d.kind {
                Kind::Gaussian { sigma } => Some(sigma),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min);
        (9.0 / sigma, 0.0)
    } else {
        let k = (c / ((p - 1.0) * budget)).powf(1.0 / (p - 1.0)).max(k0);
        (k, c * k.powf(1.0 - p) / (p - 1.0))
    };
    // Resolve the oscillation of compactly supported factors.
    let scale = f.extent().max(g.extent());
    let step = (PI / scale).min(k_max);
    let n = ((k_max / step).ceil() as usize).clamp(1, 200_000);
    let breaks: Vec<f64> = (0..=n).map(|i| k_max * i as f64 / n as f64).collect();
    let integrand = |k: f64| {
        let a = f.fourier_hat(k).unwrap_or(f64::NAN);
        let b = g.fourier_hat(k).unwrap_or(f64::NAN);
        16.0 * PI * PI * a * b
    };
    let q = integrate_pieces(integrand, &breaks, QuadOptions { abs_tol: opts.abs_tol * 0.9, ..opts })?;
    if !q.value.is_finite() {
        return Ok(Estimate {
            value: f64::INFINITY,
            error: f64::INFINITY,
        });
    }
    Ok(Estimate {
        value: q.value,
        error: q.error + tail,
    })
}

/// Real-space pairing `∬ f(x) g(y) / |x − y|` as `4π ∫ f(r) φ_g(r) r² dr`.
pub fn coulomb_pairing_real(f: &RadialDensity, g: &RadialDensity, opts: QuadOptions) -> Result<Estimate> {
    if f.z == 0.0 || g.z == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let r_max = f.extent();
    let mut breaks = vec![0.0];
    let mut kinks: Vec<f64> = f.kinks().into_iter().chain(g.kinks()).filter(|&k| k > 0.0 && k < r_max).collect();
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    breaks.extend(kinks);
    breaks.push(r_max);
    let q = integrate_pieces(|r: f64| 4.0 * PI * f.real_space(r) * g.potential(r) * r * r, &breaks, opts)?;
    Ok(Estimate {
        value: q.value,
        error: q.error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> QuadOptions {
        QuadOptions::new(1e-12, 1e-11)
    }

    #[test]
    fn transforms_match_identities() {
        let g = RadialDensity::gaussian(2.0, 0.7).unwrap();
        for &k in &[0.0f64, 0.5, 3.0] {
            let want = unitary_norm() * 2.0 * (-0.5 * (0.7 * k).powi(2)).exp();
            assert!((g.fourier_hat(k).unwrap() - want).abs() < 1e-15);
        }
        let b = RadialDensity::uniform_ball(1.0, 2.0).unwrap();
        let direct = |k: f64| {
            crate::transform::radial_forward(|r| b.real_space(r), 2.0, k, QuadOptions::new(1e-14, 1e-13)).unwrap()
        };
        for &k in &[0.0, 0.004, 1.3, 9.0] {
            assert!((b.fourier_hat(k).unwrap() - direct(k)).abs() < 1e-12, "{k}");
        }
        let e = RadialDensity::exponential(1.0, 0.5).unwrap();
        assert!((e.fourier_hat(1e-8).unwrap() - e.fourier_hat(0.0).unwrap()).abs() <= 1e-6 * e.fourier_hat(0.0).unwrap());
    }

    #[test]
    fn enclosed_charge_and_potential_are_consistent() {
        for d in [
            RadialDensity::gaussian(1.0, 1.3).unwrap(),
            RadialDensity::exponential(2.0, 0.4).unwrap(),
            RadialDensity::uniform_ball(1.5, 0.8).unwrap(),
        ] {
            for &r in &[1e-3f64, 0.3, 0.8, 2.0, 9.0] {
                let q = integrate_pieces(
                    |s: f64| 4.0 * PI * d.real_space(s) * s * s,
                    &[0.0, r.min(d.extent()), r],
                    QuadOptions::new(1e-15, 1e-13),
                )
                .unwrap()
                .value;
                assert!((q - d.enclosed_charge(r)).abs() < 1e-12, "{:?} {r}", d.spec());
            }
            assert!((d.enclosed_charge(1e4) - d.charge()).abs() < 1e-12);
            // Far outside, the potential is that of a point charge.
            assert!((d.potential(200.0) * 200.0 - d.charge()).abs() < 1e-12);
        }
    }

    #[test]
    fn self_pairing_gaussian() {
        let g = RadialDensity::gaussian(1.5, 0.6).unwrap();
        let want = 1.5 * 1.5 / (0.6 * PI.sqrt());
        let f = coulomb_pairing(&g, &g, opts()).unwrap().value;
        let r = coulomb_pairing_real(&g, &g, opts()).unwrap().value;
        assert!((f - want).abs() < 1e-10 * want);
        assert!((r - want).abs() < 1e-10 * want);
    }

    #[test]
    fn pairing_is_symmetric_and_zero_for_zero() {
        let a = RadialDensity::exponential(1.0, 0.8).unwrap();
        let b = RadialDensity::uniform_ball(2.0, 1.5).unwrap();
        let ab = coulomb_pairing(&a, &b, opts()).unwrap().value;
        let ba = coulomb_pairing(&b, &a, opts()).unwrap().value;
        assert!((ab - ba).abs() < 1e-9 * ab.abs());
        let zero = RadialDensity::gaussian(0.0, 1.0).unwrap();
        assert_eq!(coulomb_pairing(&zero, &a, opts()).unwrap().value, 0.0);
    }

    #[test]
    fn table_parsing_and_charge_check() {
        let text = "# radius value\n0.0 1.0\n0.5, 0.8 # inline\n\n1.0 0.0\n";
        let t = RadialDensity::parse_table(text, None).unwrap();
        assert!(t.charge() > 0.0);
        assert!(RadialDensity::parse_table(text, Some(t.charge() * (1.0 + 1e-6))).is_err());
        assert!(RadialDensity::parse_table(text, Some(t.charge())).is_ok());
        assert!(RadialDensity::parse_table("1 2 3\n", None).is_err());
        assert!(RadialDensity::parse_table("1 x\n", None).is_err());
        assert_eq!(t.real_space(1.5), 0.0);
    }

    #[test]
    fn tabulated_gaussian_reproduces_analytic() {
        let g = RadialDensity::gaussian(1.0, 1.0).unwrap();
        let r: Vec<f64> = (0..=800).map(|i| i as f64 * 0.0125).collect();
        let v: Vec<f64> = r.iter().map(|&x| g.real_space(x)).collect();
        let t = RadialDensity::tabulated(r, v, Some(1.0)).unwrap();
        for &k in &[0.0, 0.7, 2.5, 6.0] {
            let e = (t.fourier_hat(k).unwrap() - g.fourier_hat(k).unwrap()).abs();
            assert!(e < 1e-9, "{k}: {e}");
        }
        let dt = coulomb_pairing_real(&t, &t, opts()).unwrap().value;
        let dg = 1.0 / PI.sqrt();
        assert!((dt - dg).abs() < 1e-8);
        assert!(t.resolved_momentum() > 200.0);
    }
}
