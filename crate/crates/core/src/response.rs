//! Position-space linear response, screening of radial charges and
//! charge renormalization.
//!
//! With unitary transforms the linearized vacuum density is
//! `ρ̂(k) = R(k) ν̂(k)`, `R = αB/(1 + αB)`, so `ρ = b ∗ ν` with
//! `b(x) = (2π² x)⁻¹ ∫₀^∞ R(k) k sin(kx) dk` and `∫ b = R(0)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::dispersion::{e, CutoffModel};
use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::kernel::{b0_zero, Estimate, KernelTable, SharpSpline};
use crate::quadrature::{integrate_pieces, QuadOptions};
use crate::sources::RadialDensity;
use crate::transform::{
    cosine_moment, sine_moment_over_x, tail_inv_k2, tail_inv_k4, unitary_prefactor,
    HermiteFilon,
};

/// Above this value of `|x| Λ` the sharp inversion uses the integrated-by-parts form.
pub const BY_PARTS_SWITCH: f64 = 20.0;

/// Relative agreement required between a sharp table and the closed form.
const TABLE_AGREEMENT: f64 = 1e-9;

/// Which function of `B` is being inverted.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Multiplier {
    /// `αB/(1 + αB)`.
    Ratio,
    /// `B` itself.
    Identity,
}

#[derive(Debug, Clone)]
enum Spectrum {
    Sharp(SharpSpline),
    Table {
        b: MonotoneCubic,
        /// `B ≈ c₁/k² + c₂/k⁴` beyond the table.
        b_tail: (f64, f64),
        m: MonotoneCubic,
        m_filon: HermiteFilon,
        m_tail: (f64, f64),
        k_max: f64,
    },
}

/// The kernel `b` in momentum space, ready for inversion.
#[derive(Debug, Clone)]
pub struct ResponseKernel {
    model: CutoffModel,
    alpha: f64,
    multiplier: Multiplier,
    spectrum: Spectrum,
    b_zero: f64,
    sup_b: f64,
    table_error: f64,
}

/// Evaluation route for the sharp-cut-off inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Auto,
    Direct,
    ByParts,
}

/// Fit `y ≈ c₁/k² + c₂/k⁴` through the last two nodes.
fn tail_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len();
    let (k1, k2) = (x[n - 2], x[n - 1]);
    let (u1, u2) = (y[n - 2] * k1 * k1, y[n - 1] * k2 * k2);
    let c2 = (u2 - u1) / (1.0 / (k2 * k2) - 1.0 / (k1 * k1));
    (u2 - c2 / (k2 * k2), c2)
}

impl ResponseKernel {
    fn new(model: &CutoffModel, alpha: f64, table: &KernelTable, multiplier: Multiplier) -> Result<Self> {
        model.ensure_usable()?;
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::domain("alpha", alpha, "[0, inf)"));
        }
        if table.model.kind() != model.kind() || table.model.lambda() != model.lambda() {
            return Err(Error::Precondition(
                "kernel table was computed for a different cut-off model".into(),
            ));
        }
        if let Some((i, v)) = table.values.iter().enumerate().find(|(_, v)| !(**v >= -1e-12)) {
            return Err(Error::Invariant(format!(
                "non-negativity: kernel table value {v} at grid index {i} (k = {})",
                table.grid[i]
            )));
        }
        let lambda = model.lambda();
        let table_error = table.max_error();
        let (spectrum, b_zero) = if model.is_sharp() {
            let spline = SharpSpline::new(lambda)?;
            for (i, (&k, &v)) in table.grid.iter().zip(&table.values).enumerate() {
                let s = spline.value(k);
                if (s - v).abs() > TABLE_AGREEMENT * s.abs().max(1.0) + 10.0 * table.tol[i] {
                    return Err(Error::Invariant(format!(
                        "kernel table value {v} at k = {k} disagrees with the closed form {s}"
                    )));
                }
            }
            (Spectrum::Sharp(spline), b0_zero(lambda)?)
        } else {
            if table.len() < 4 || table.grid[0] != 0.0 {
                return Err(Error::Precondition(
                    "a smooth kernel table must start at k = 0 and have at least four points".into(),
                ));
            }
            let values: Vec<f64> = table.values.iter().map(|v| v.max(0.0)).collect();
            let m_values: Vec<f64> = match multiplier {
                Multiplier::Ratio => values.iter().map(|&b| alpha * b / (1.0 + alpha * b)).collect(),
                Multiplier::Identity => values.clone(),
            };
            let b_tail = tail_fit(&table.grid, &values);
            let m_tail = tail_fit(&table.grid, &m_values);
            let b = MonotoneCubic::new(table.grid.clone(), values.clone())?;
            let m = MonotoneCubic::new(table.grid.clone(), m_values)?;
            let m_filon = HermiteFilon::new(&m);
            (
                Spectrum::Table {
                    b,
                    b_tail,
                    m,
                    m_filon,
                    m_tail,
                    k_max: *table.grid.last().unwrap_or(&0.0),
                },
                values[0],
            )
        };
        let sup_b = table.values.iter().copied().fold(b_zero, f64::max);
        Ok(Self {
            model: model.clone(),
            alpha,
            multiplier,
            spectrum,
            b_zero,
            sup_b,
            table_error,
        })
    }

    pub fn model(&self) -> &CutoffModel {
        &self.model
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `B(0)` (exact for the sharp cut-off, the table value otherwise).
    pub fn b_zero(&self) -> f64 {
        self.b_zero
    }

    /// Largest tabulated value of `B`.
    pub fn sup_b(&self) -> f64 {
        self.sup_b
    }

    /// Largest error estimate of the underlying table.
    pub fn table_error(&self) -> f64 {
        self.table_error
    }

    /// `B(k)` as represented by the kernel.
    pub fn b_value(&self, k: f64) -> f64 {
        match &self.spectrum {
            Spectrum::Sharp(s) => s.value(k),
            Spectrum::Table { b, b_tail, k_max, .. } => {
                if k <= *k_max {
                    b.eval_or(k, 0.0)
                } else {
                    b_tail.0 / (k * k) + b_tail.1 / k.powi(4)
                }
            }
        }
    }

    fn m_of_b(&self, b: f64) -> f64 {
        match self.multiplier {
            Multiplier::Ratio => self.alpha * b / (1.0 + self.alpha * b),
            Multiplier::Identity => b,
        }
    }

    /// Derivatives of the multiplier with respect to `B`, orders 1 to 3.
    fn m_derivs(&self, b: f64) -> [f64; 3] {
        match self.multiplier {
            Multiplier::Ratio => {
                let a = self.alpha;
                let d = 1.0 + a * b;
                [a / (d * d), -2.0 * a * a / (d * d * d), 6.0 * a.powi(3) / d.powi(4)]
            }
            Multiplier::Identity => [1.0, 0.0, 0.0],
        }
    }

    /// The momentum-space multiplier `αB(k)/(1 + αB(k))` (or `B` for the
    /// polarization inverse), exactly zero beyond `2Λ` for the sharp cut-off.
    pub fn bhat_ratio(&self, k: f64) -> f64 {
        match &self.spectrum {
            Spectrum::Sharp(s) => {
                if k >= 2.0 * s.lambda() {
                    0.0
                } else {
                    self.m_of_b(s.value(k))
                }
            }
            Spectrum::Table { m, m_tail, k_max, .. } => {
                if k <= *k_max {
                    m.eval_or(k, 0.0)
                } else {
                    m_tail.0 / (k * k) + m_tail.1 / k.powi(4)
                }
            }
        }
    }

    /// Slope of the multiplier at `k = 0⁺`.
    fn m_slope_zero(&self) -> f64 {
        match &self.spectrum {
            Spectrum::Sharp(s) => self.m_derivs(self.b_zero)[0] * s.eval(0.0, 1),
            Spectrum::Table { m, .. } => m.slopes()[0],
        }
    }

    /// Momentum beyond which the multiplier is zero (sharp) or given by its tail.
    pub fn support(&self) -> f64 {
        match &self.spectrum {
            Spectrum::Sharp(s) => 2.0 * s.lambda(),
            Spectrum::Table { k_max, .. } => *k_max,
        }
    }

    /// Third derivative integrand `g‴ = k R‴ + 3 R″` of `g = k R`.
    fn g3(&self, s: &SharpSpline, k: f64) -> f64 {
        let b = s.value(k);
        let (b1, b2, b3) = (s.eval(k, 1), s.eval(k, 2), s.eval(k, 3));
        let [m1, m2, m3] = self.m_derivs(b);
        let r2 = m1 * b2 + m2 * b1 * b1;
        let r3 = m1 * b3 + 3.0 * m2 * b1 * b2 + m3 * b1.powi(3);
        k * r3 + 3.0 * r2
    }

    /// `B″(2Λ⁻) = Λ/(4π E(Λ)³)`.
    fn edge_curvature(lambda: f64) -> f64 {
        lambda / (4.0 * PI * e(lambda).powi(3))
    }

    /// Rough `∫|f|` on `[a, b]` from a coarse midpoint sum, used to scale
    /// absolute tolerances of oscillatory integrals.
    fn magnitude<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
        let n = 256;
        let h = (b - a) / n as f64;
        (0..n).map(|i| f(a + (i as f64 + 0.5) * h).abs()).sum::<f64>() * h
    }

    /// `b(x)` at one radius by the requested route (sharp only distinguishes routes).
    pub fn invert_point(&self, x: f64, route: Route) -> Result<f64> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::domain("invert_kernel", x, "(0, inf)"));
        }
        let pref = 1.0 / (2.0 * PI * PI);
        match &self.spectrum {
            Spectrum::Table {
                m_filon, m_tail, k_max, ..
            } => {
                let body = m_filon.sine_moment_over_x(x);
                let tail = (m_tail.0 * tail_inv_k2(*k_max, x) + m_tail.1 * tail_inv_k4(*k_max, x)) / x;
                Ok(pref * (body + tail))
            }
            Spectrum::Sharp(s) => {
                let lambda = s.lambda();
                let two_l = 2.0 * lambda;
                let by_parts = match route {
                    Route::Auto => x * lambda > BY_PARTS_SWITCH,
                    Route::Direct => false,
                    Route::ByParts => true,
                };
                if self.multiplier == Multiplier::Ratio && self.alpha == 0.0 {
                    return Ok(0.0);
                }
                if !by_parts {
                    let f = |k: f64| self.m_of_b(s.value(k));
                    let scale = Self::magnitude(|k| f(k) * k, 0.0, two_l);
                    let q = sine_moment_over_x(f, 0.0, two_l, x, QuadOptions::new(1e-13 * scale, 1e-13))?;
                    return Ok(pref * q.value);
                }
                let edge = two_l * self.m_derivs(0.0)[0] * Self::edge_curvature(lambda);
                let origin = 2.0 * self.m_slope_zero();
                let g3 = |k: f64| self.g3(s, k);
                let scale = Self::magnitude(g3, 0.0, two_l);
                let q = cosine_moment(g3, 0.0, two_l, x, QuadOptions::new(1e-13 * scale.max(f64::MIN_POSITIVE), 1e-13))?;
                Ok(pref / x.powi(4) * (edge * (two_l * x).cos() - origin - q.value))
            }
        }
    }

    /// Constant `C` of a rigorous envelope `|b(x)| ≤ C/x⁴` (sharp cut-off), from
    /// the integrated-by-parts form.
    pub fn decay_constant(&self) -> Option<f64> {
        let Spectrum::Sharp(s) = &self.spectrum else {
            return None;
        };
        let lambda = s.lambda();
        let two_l = 2.0 * lambda;
        let edge = (two_l * self.m_derivs(0.0)[0] * Self::edge_curvature(lambda)).abs();
        let origin = (2.0 * self.m_slope_zero()).abs();
        let opts = QuadOptions::new(1e-12 * (edge + origin).max(1e-300), 1e-10);
        let n = (two_l / 0.5).ceil() as usize;
        let breaks: Vec<f64> = (0..=n).map(|i| two_l * i as f64 / n as f64).collect();
        let g = integrate_pieces(|k| self.g3(s, k).abs(), &breaks, opts).ok()?;
        Some((edge + origin + g.value + g.error) / (2.0 * PI * PI))
    }
}

/// Response kernel for `αB/(1 + αB)`.
///
/// For the sharp cut-off the multiplier is evaluated from a piecewise
/// Chebyshev representation of the closed form (the table is checked against
/// it); for smooth cut-offs it is a monotone cubic through the table with an
/// `a₁/k² + a₂/k⁴` tail beyond the last node.
pub fn build_kernel(model: &CutoffModel, alpha: f64, table: &KernelTable) -> Result<ResponseKernel> {
    ResponseKernel::new(model, alpha, table, Multiplier::Ratio)
}

/// Kernel whose inverse is `f = F⁻¹(B)` itself (plain transform, `∫ f = B(0)`).
pub fn polarization_inverse_kernel(model: &CutoffModel, table: &KernelTable) -> Result<ResponseKernel> {
    ResponseKernel::new(model, 1.0, table, Multiplier::Identity)
}

fn check_rgrid(rgrid: &[f64]) -> Result<()> {
    if rgrid.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidInput("radii must be positive and finite".into()));
    }
    if rgrid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("radii must be strictly increasing".into()));
    }
    Ok(())
}

/// Collect per-point results, reporting every failure with its index.
fn gather(results: Vec<Result<f64>>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(e) => failures.push((i, Box::new(e))),
        }
    }
    if failures.is_empty() {
        Ok(out)
    } else {
        Err(Error::Aggregate(failures))
    }
}

/// Position-space kernel `b(x)` on a radial grid, in parallel.
pub fn invert_kernel(kernel: &ResponseKernel, rgrid: &[f64]) -> Result<Vec<f64>> {
    check_rgrid(rgrid)?;
    gather(rgrid.par_iter().map(|&x| kernel.invert_point(x, Route::Auto)).collect())
}

/// `4π ∫ |b| r² dr` with the tail bound beyond `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L1Norm {
    pub value: f64,
    pub quadrature_error: f64,
    pub tail_bound: f64,
    pub r_max: f64,
    /// True when the tail bound exceeds a tenth of the value.
    pub r_max_too_small: bool,
}

/// `‖b‖_{L¹}` on `[0, r_max]` plus a tail bound from the `|x|⁻⁴` envelope:
/// rigorous for the sharp cut-off, fitted on `[r_max/2, r_max]` otherwise.
pub fn l1_norm(kernel: &ResponseKernel, r_max: f64, tol: f64) -> Result<L1Norm> {
    if !(r_max > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidInput("l1_norm needs r_max > 0 and tol > 0".into()));
    }
    if kernel.multiplier == Multiplier::Ratio && kernel.alpha == 0.0 {
        return Ok(L1Norm {
            value: 0.0,
            quadrature_error: 0.0,
            tail_bound: 0.0,
            r_max,
            r_max_too_small: false,
        });
    }
    let mut breaks = vec![0.0];
    let mut r = 1e-4;
    while r < 1.0_f64.min(r_max) {
        breaks.push(r);
        r *= 4.0;
    }
    // Pieces a few oscillations long for the sharp kernel's cos(2Λx) ripple.
    let step = match &kernel.spectrum {
        Spectrum::Sharp(s) => (2.0 * PI / s.lambda()).min(1.0),
        Spectrum::Table { .. } => 1.0,
    };
    let mut r = breaks.last().copied().unwrap_or(0.0).max(step.min(1.0));
    while r < r_max {
        breaks.push(r);
        r += step;
    }
    breaks.push(r_max);
    breaks.dedup();
    let failure = std::cell::RefCell::new(None);
    let integrand = |x: f64| match kernel.invert_point(x, Route::Auto) {
        Ok(v) => 4.0 * PI * v.abs() * x * x,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let q = integrate_pieces(integrand, &breaks, QuadOptions::new(tol, 1e-10))?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let c = match kernel.decay_constant() {
        Some(c) => c,
        None => (0..=32)
            .map(|i| r_max * (0.5 + 0.5 * i as f64 / 32.0))
            .map(|x| kernel.invert_point(x, Route::Auto).map(|v| v.abs() * x.powi(4)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max),
    };
    let tail_bound = 4.0 * PI * c / r_max;
    Ok(L1Norm {
        value: q.value,
        quadrature_error: q.error,
        tail_bound,
        r_max,
        r_max_too_small: tail_bound > 0.1 * q.value,
    })
}

/// Log-spaced screening grid on `[10⁻⁴, max(20, 4Λ)]` with `k = 0` prepended,
/// densified next to `2Λ` for the sharp cut-off.
pub fn screening_grid(model: &CutoffModel, points: usize) -> Vec<f64> {
    let lambda = model.lambda();
    let hi = (4.0 * lambda).max(20.0);
    let lo: f64 = 1e-4;
    let n = points.max(2);
    let mut g: Vec<f64> = std::iter::once(0.0)
        .chain((0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)))
        .collect();
    if model.is_sharp() {
        for j in 1..=6 {
            let d = 10f64.powi(-j);
            g.push(2.0 * lambda * (1.0 - d));
            g.push(2.0 * lambda * (1.0 + d));
        }
        g.push(2.0 * lambda);
    }
    g.retain(|&k| k <= hi);
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Points per unit of the momentum grid used to tabulate smooth kernels.
pub const SMOOTH_TABLE_POINTS: usize = 1024;

/// Tabulation grid for a smooth kernel: `0` and a geometric grid on
/// `[10⁻³, max(200, 40Λ)]`.
pub fn smooth_kernel_grid(lambda: f64, points: usize) -> Vec<f64> {
    let hi = (40.0 * lambda).max(200.0);
    let lo: f64 = 1e-3;
    let n = points.max(3) - 1;
    std::iter::once(0.0)
        .chain((0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)))
        .collect()
}

/// Sampled `r φ(r)` at large radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FarFieldSample {
    pub r: f64,
    pub r_phi: f64,
    /// The radius lies inside the effective support of `ν`.
    pub inside_source: bool,
}

/// Linearized screening of a radial source.
#[derive(Debug, Clone)]
pub struct ResponseResult {
    kernel: ResponseKernel,
    nu: RadialDensity,
    pub alpha: f64,
    pub charge: f64,
    pub b_zero: f64,
    pub k_grid: Vec<f64>,
    pub rho_vac_hat: Vec<f64>,
    pub observed_charge: f64,
    pub alpha_phys: f64,
    /// `|observed_charge (1 + αB(0)) − Z|`.
    pub identity_residual: f64,
    /// Iteration count when the result comes from [`fixed_point_screen`]; the
    /// real-space profile then uses the same truncated Neumann sum.
    pub iterations: Option<usize>,
}

/// Rigorous-in-form tail of `ρ_vac ~ κ/x⁴`: `κ = √(2/π)(−2 ĥ′(0))` for `ĥ = R ν̂`.
fn density_tail_coefficient(kernel: &ResponseKernel, nu: &RadialDensity) -> f64 {
    let nu0 = nu.fourier_hat(0.0).unwrap_or(0.0);
    unitary_prefactor() * (-2.0 * kernel.m_slope_zero() * nu0)
}

impl ResponseResult {
    /// Momentum beyond which `ρ̂_vac` is negligible for the quadratures below.
    fn k_limit(&self) -> f64 {
        let k_nu = match self.nu.spec() {
            crate::sources::SourceSpec::Gaussian { sigma, .. } => 9.0 / sigma,
            _ => 4000.0 / self.nu.extent(),
        };
        match &self.kernel.spectrum {
            Spectrum::Sharp(s) => k_nu.min(2.0 * s.lambda()),
            Spectrum::Table { .. } => k_nu,
        }
    }

    /// `R(k)`, or its `n`-term Neumann partial sum `y (1 − (−y)ⁿ)/(1 + y)`,
    /// `y = αB`, which is the `n`-th fixed-point iterate started from zero.
    fn multiplier(&self, k: f64) -> f64 {
        match self.iterations {
            None => self.kernel.bhat_ratio(k),
            Some(n) => {
                if k >= self.kernel.support() && matches!(self.kernel.spectrum, Spectrum::Sharp(_)) {
                    return 0.0;
                }
                let y = self.alpha * self.kernel.b_value(k);
                y * (1.0 - (-y).powi(n as i32)) / (1.0 + y)
            }
        }
    }

    /// `ρ_vac(x)` by radial inversion of `R ν̂`.
    pub fn rho_vac_real(&self, x: f64) -> Result<f64> {
        if self.alpha == 0.0 {
            return Ok(0.0);
        }
        let f = |k: f64| self.multiplier(k) * self.nu.fourier_hat(k).unwrap_or(0.0);
        let kl = self.k_limit();
        let scale = ResponseKernel::magnitude(|k| f(k) * k * k, 0.0, kl);
        let mut breaks = vec![0.0];
        if let Spectrum::Sharp(_) = self.kernel.spectrum {
            breaks.push(kl);
        } else {
            let km = self.kernel.support().min(kl);
            breaks.push(km);
            if kl > km {
                breaks.push(kl);
            }
        }
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let q = sine_moment_over_x(f, w[0], w[1], x, QuadOptions::new(1e-13 * scale.max(1e-300), 1e-12))?;
            total += q.value;
        }
        Ok(unitary_prefactor() * total)
    }

    /// `ρ_vac` on a radial grid, in parallel.
    pub fn rho_vac_profile(&self, rgrid: &[f64]) -> Result<Vec<f64>> {
        check_rgrid(rgrid)?;
        gather(rgrid.par_iter().map(|&x| self.rho_vac_real(x)).collect())
    }

    fn radial_integral(&self, a: f64, b: f64, power: i32, tol: f64) -> Result<Estimate> {
        let failure = std::cell::RefCell::new(None);
        let g = |x: f64| match self.rho_vac_real(x) {
            Ok(v) => 4.0 * PI * v * x.powi(power),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        };
        let mut breaks = vec![a];
        let mut r = a.max(0.25);
        while r < b {
            if r > a {
                breaks.push(r);
            }
            r *= 1.5;
        }
        breaks.push(b);
        let q = integrate_pieces(g, &breaks, QuadOptions::new(tol, 1e-10))?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(Estimate {
            value: q.value,
            error: q.error,
        })
    }

    /// Real-space `4π ∫ ρ_vac r² dr` on `[0, r_max]` plus the analytic
    /// `κ/x⁴` tail beyond.
    pub fn screened_charge(&self, r_max: f64, tol: f64) -> Result<Estimate> {
        if self.alpha == 0.0 {
            return Ok(Estimate::exact(0.0));
        }
        let body = self.radial_integral(0.0, r_max, 2, tol)?;
        let tail = 4.0 * PI * density_tail_coefficient(&self.kernel, &self.nu) / r_max;
        Ok(Estimate {
            value: body.value + tail,
            error: body.error + tail.abs() * 0.1,
        })
    }
}

/// Closed-form Fourier solution `ρ̂_vac = R ν̂` of the linearized equation.
pub fn screen(kernel: &ResponseKernel, nu: &RadialDensity) -> Result<ResponseResult> {
    screen_on(kernel, nu, &screening_grid(kernel.model(), 512))
}

/// [`screen`] on a caller-supplied momentum grid.
pub fn screen_on(kernel: &ResponseKernel, nu: &RadialDensity, k_grid: &[f64]) -> Result<ResponseResult> {
    if kernel.multiplier != Multiplier::Ratio {
        return Err(Error::Precondition("screening needs a response kernel".into()));
    }
    crate::kernel::table::check_grid(k_grid)?;
    let rho_vac_hat = k_grid
        .iter()
        .map(|&k| Ok(kernel.bhat_ratio(k) * nu.fourier_hat(k)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(finish(kernel, nu, k_grid.to_vec(), rho_vac_hat))
}

fn finish(kernel: &ResponseKernel, nu: &RadialDensity, k_grid: Vec<f64>, rho_vac_hat: Vec<f64>) -> ResponseResult {
    let a = kernel.alpha;
    let b0 = kernel.b_zero;
    let z = nu.charge();
    let observed = z / (1.0 + a * b0);
    ResponseResult {
        kernel: kernel.clone(),
        nu: nu.clone(),
        alpha: a,
        charge: z,
        b_zero: b0,
        k_grid,
        rho_vac_hat,
        observed_charge: observed,
        alpha_phys: a / (1.0 + a * b0),
        identity_residual: (observed * (1.0 + a * b0) - z).abs(),
        iterations: None,
    }
}

/// Iteration trace of [`fixed_point_screen`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointTrace {
    /// Sup-norm of successive differences.
    pub differences: Vec<f64>,
    /// `α sup_grid B`.
    pub contraction: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FixedPointTrace {
    /// Ratios of successive differences.
    pub fn ratios(&self) -> Vec<f64> {
        self.differences
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// Iterate `ρ̂_{n+1} = αB(ν̂ − ρ̂_n)` from zero on the screening grid. Stops once
/// the geometric error bound `q/(1−q)·‖ρ̂_n − ρ̂_{n−1}‖` is below `tol`.
pub fn fixed_point_screen(
    kernel: &ResponseKernel,
    nu: &RadialDensity,
    k_grid: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(ResponseResult, FixedPointTrace)> {
    crate::kernel::table::check_grid(k_grid)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    let b: Vec<f64> = k_grid.iter().map(|&k| kernel.b_value(k)).collect();
    let nu_hat = k_grid.iter().map(|&k| nu.fourier_hat(k)).collect::<Result<Vec<f64>>>()?;
    let q = kernel.alpha * b.iter().copied().fold(0.0, f64::max);
    if !(q < 1.0) {
        return Err(Error::FixedPoint(format!(
            "contraction condition violated: α sup B = {q} ≥ 1"
        )));
    }
    let mut rho = vec![0.0; k_grid.len()];
    let mut trace = FixedPointTrace {
        differences: Vec::new(),
        contraction: q,
        iterations: 0,
        converged: false,
    };
    for it in 1..=max_iter {
        let next: Vec<f64> = b
            .par_iter()
            .zip(&nu_hat)
            .zip(&rho)
            .map(|((&bk, &n), &r)| kernel.alpha * bk * (n - r))
            .collect();
        let diff = next.iter().zip(&rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rho = next;
        trace.differences.push(diff);
        trace.iterations = it;
        let bound = if q > 0.0 { q / (1.0 - q) * diff } else { diff };
        if bound <= tol {
            trace.converged = true;
            break;
        }
    }
    if !trace.converged {
        return Err(Error::FixedPoint(format!(
            "no convergence in {max_iter} iterations (last difference {:e})",
            trace.differences.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let mut result = finish(kernel, nu, k_grid.to_vec(), rho);
    result.iterations = Some(trace.iterations);
    Ok((result, trace))
}

/// `r φ(r)` for `φ = α (ν − ρ_vac) ∗ |·|⁻¹`, by Newton's theorem:
/// `r φ(r) = α [Q(r) + r · 4π ∫_r^∞ (ν − ρ_vac) s ds]` with `Q` the enclosed charge.
pub fn far_field(result: &ResponseResult, radii: &[f64], tol: f64) -> Result<Vec<FarFieldSample>> {
    check_rgrid(radii)?;
    let nu = &result.nu;
    let a = result.alpha;
    let kappa = density_tail_coefficient(&result.kernel, nu);
    let r_out = radii.last().copied().unwrap_or(1.0) * 2.0;
    // Shared pieces: enclosed charge up to each radius and outer moments.
    let mut samples = Vec::with_capacity(radii.len());
    let mut enclosed = 0.0;
    let mut prev = 0.0;
    let mut enclosed_at = Vec::with_capacity(radii.len());
    for &r in radii {
        enclosed += result.radial_integral(prev, r, 2, tol)?.value;
        enclosed_at.push(enclosed);
        prev = r;
    }
    let mut outer = Vec::with_capacity(radii.len());
    let mut acc = result.radial_integral(prev, r_out, 1, tol)?.value + 4.0 * PI * kappa / (2.0 * r_out * r_out);
    for i in (0..radii.len()).rev() {
        outer.push(acc);
        if i > 0 {
            acc += result.radial_integral(radii[i - 1], radii[i], 1, tol)?.value;
        }
    }
    outer.reverse();
    for (i, &r) in radii.iter().enumerate() {
        let q = nu.enclosed_charge(r) - if a == 0.0 { 0.0 } else { enclosed_at[i] };
        let o = nu.outer_potential(r) - if a == 0.0 { 0.0 } else { outer[i] };
        samples.push(FarFieldSample {
            r,
            r_phi: a * (q + r * o),
            inside_source: r < nu.extent(),
        });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{tabulate_kernel, Method};

    fn sharp_kernel(lambda: f64, alpha: f64) -> ResponseKernel {
        let m = CutoffModel::sharp(lambda).unwrap();
        let t = tabulate_kernel(&m, &[0.0, lambda, 2.0 * lambda], Method::ClosedForm, 1e-12).unwrap();
        build_kernel(&m, alpha, &t).unwrap()
    }

    #[test]
    fn zero_coupling_is_inert() {
        let k = sharp_kernel(5.0, 0.0);
        assert_eq!(k.bhat_ratio(0.3), 0.0);
        assert!(invert_kernel(&k, &[0.1, 1.0]).unwrap().iter().all(|&v| v == 0.0));
        let l = l1_norm(&k, 10.0, 1e-8).unwrap();
        assert_eq!((l.value, l.tail_bound), (0.0, 0.0));
    }

    #[test]
    fn sharp_support_and_ratio() {
        let k = sharp_kernel(3.0, 0.5);
        assert_eq!(k.bhat_ratio(6.0), 0.0);
        assert_eq!(k.bhat_ratio(7.0), 0.0);
        let b0 = b0_zero(3.0).unwrap();
        assert!((k.bhat_ratio(0.0) - 0.5 * b0 / (1.0 + 0.5 * b0)).abs() < 1e-14);
    }

    #[test]
    fn routes_agree() {
        let k = sharp_kernel(10.0, 0.1);
        for &x in &[3.0, 5.0, 8.0] {
            let d = k.invert_point(x, Route::Direct).unwrap();
            let p = k.invert_point(x, Route::ByParts).unwrap();
            assert!((d - p).abs() <= 1e-6 * d.abs(), "{x}: {d} {p}");
        }
    }

    #[test]
    fn corrupted_table_is_rejected() {
        let m = CutoffModel::sharp(2.0).unwrap();
        let mut t = tabulate_kernel(&m, &[0.0, 1.0], Method::ClosedForm, 1e-12).unwrap();
        t.values[1] = -t.values[1];
        match build_kernel(&m, 0.1, &t) {
            Err(Error::Invariant(s)) => assert!(s.contains("non-negativity")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grids() {
        let m = CutoffModel::sharp(10.0).unwrap();
        let g = screening_grid(&m, 512);
        assert_eq!(g[0], 0.0);
        assert!(g.contains(&20.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let s = smooth_kernel_grid(5.0, 64);
        assert_eq!(s.len(), 64);
        assert!((s[63] - 200.0).abs() < 1e-9);
    }
}
