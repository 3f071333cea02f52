use rayon::prelude::*;

use super::{sharp, smooth, Estimate, Method};
use crate::dispersion::{CutoffKind, CutoffModel};
use crate::error::{Error, Result};
use crate::quadrature::QuadOptions;

/// Radial tabulation of the polarization function on a momentum grid.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub model: CutoffModel,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub method: Method,
    /// Achieved absolute error estimate per point.
    pub tol: Vec<f64>,
    /// Requested absolute tolerance.
    pub requested_tol: f64,
}

impl KernelTable {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_error(&self) -> f64 {
        self.tol.iter().copied().fold(0.0, f64::max)
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
        return Err(Error::InvalidInput(
            "momentum grid must be finite and non-negative".into(),
        ));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "momentum grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn evaluate(model: &CutoffModel, k: f64, method: Method, tol: f64) -> Result<Estimate> {
    let lambda = model.lambda();
    let quad = QuadOptions::new(tol, 1e-13);
    if model.is_sharp() {
        if k >= 2.0 * lambda {
            return Ok(Estimate::exact(0.0));
        }
        return match method {
            Method::ClosedForm => {
                let v = sharp::b0_closed(lambda, k)?;
                Ok(Estimate {
                    value: v,
                    error: 4.0 * f64::EPSILON * v,
                })
            }
            Method::Quadrature1D => sharp::b0_quad(lambda, k, quad),
            Method::Oracle3D if k == 0.0 => sharp::b0_quad(lambda, 0.0, quad),
            Method::Oracle3D => sharp::b0_3d_oracle(lambda, k, quad),
            Method::Quadrature2D => Err(Error::Precondition(
                "two-dimensional quadrature applies to smooth cut-offs only".into(),
            )),
        };
    }
    match method {
        // The linear profile has a rational integrand; same value, fewer evaluations.
        Method::Quadrature2D if model.kind() == CutoffKind::SmoothLinear && lambda > 1.0 => {
            smooth::b_t_quad(lambda, k, tol)
        }
        Method::Quadrature2D => smooth::b_zeta_quad(model, k, tol),
        Method::Quadrature1D if k == 0.0 => smooth::b_zeta_zero(model, tol),
        other => Err(Error::Precondition(format!(
            "method {} is not available for a smooth cut-off at k = {k}",
            other.as_str()
        ))),
    }
}

/// Evaluate the kernel on every grid point, in parallel.
///
/// Each point is an independent computation, so the table does not depend
/// on the thread schedule. Failures are collected with their grid indices.
pub fn tabulate_kernel(model: &CutoffModel, grid: &[f64], method: Method, tol: f64) -> Result<KernelTable> {
    model.ensure_usable()?;
    check_grid(grid)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    if method == Method::ClosedForm && !model.is_sharp() {
        return Err(Error::Precondition(
            "closed form is available for the sharp cut-off only".into(),
        ));
    }
    let results: Vec<Result<Estimate>> = grid.par_iter().map(|&k| evaluate(model, k, method, tol)).collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut errs = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) if e.value.is_finite() && e.value >= -1e-12 => {
                values.push(e.value);
                errs.push(e.error);
            }
            Ok(e) => {
                failures.push((
                    i,
                    Box::new(Error::Invariant(format!(
                        "kernel value {} at k = {} is negative or not finite",
                        e.value, grid[i]
                    ))),
                ));
            }
            Err(e) => failures.push((i, Box::new(e))),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Aggregate(failures));
    }
    Ok(KernelTable {
        model: model.clone(),
        grid: grid.to_vec(),
        values,
        method,
        tol: errs,
        requested_tol: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sharp_table() {
        let m = CutoffModel::sharp(1.0).unwrap();
        let t = tabulate_kernel(&m, &[0.0, 1.0, 2.0], Method::ClosedForm, 1e-10).unwrap();
        assert_eq!(t.values[2], 0.0);
        assert!((t.values[0] - sharp::b0_zero(1.0).unwrap()).abs() < 1e-16);
        assert!((t.values[1] - sharp::b0_closed(1.0, 1.0).unwrap()).abs() < 1e-16);
        let e = tabulate_kernel(&m, &[], Method::ClosedForm, 1e-10).unwrap();
        assert!(e.is_empty());
    }

    #[test]
    fn rejects_bad_requests() {
        let m = CutoffModel::sharp(1.0).unwrap();
        assert!(tabulate_kernel(&m, &[1.0, 0.5], Method::ClosedForm, 1e-10).is_err());
        assert!(tabulate_kernel(&m, &[0.5], Method::Quadrature2D, 1e-10).is_err());
        let s = CutoffModel::smooth_linear(4.0).unwrap();
        assert!(tabulate_kernel(&s, &[0.0], Method::ClosedForm, 1e-10).is_err());
        match tabulate_kernel(&s, &[0.0, 1.0], Method::Quadrature1D, 1e-10) {
            Err(Error::Aggregate(v)) => assert_eq!(v[0].0, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn smooth_zero_point() {
        let s = CutoffModel::smooth_linear(4.0).unwrap();
        let t = tabulate_kernel(&s, &[0.0], Method::Quadrature2D, 1e-11).unwrap();
        let c = smooth::b_t_zero_closed(4.0).unwrap();
        assert!((t.values[0] - c).abs() < 1e-9);
    }
}
