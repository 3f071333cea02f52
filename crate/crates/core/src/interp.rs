//! Shape-preserving piecewise cubic Hermite interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

/// Derivative at `x[i]` of the Lagrange polynomial through the window `lo..hi`.
fn lagrange_slope(x: &[f64], y: &[f64], i: usize, lo: usize, hi: usize) -> f64 {
    let xi = x[i];
    let mut s = 0.0;
    for j in lo..hi {
        // L_j'(x_i)
        let lj = if j == i {
            (lo..hi).filter(|&m| m != i).map(|m| 1.0 / (xi - x[m])).sum::<f64>()
        } else {
            let mut num = 1.0;
            let mut den = x[j] - x[i];
            for m in lo..hi {
                if m != j && m != i {
                    num *= xi - x[m];
                    den *= x[j] - x[m];
                }
            }
            num / den
        };
        s += y[j] * lj;
    }
    s
}

impl MonotoneCubic {
    /// Build from strictly increasing abscissae. Slopes come from five-point
    /// Lagrange estimates, then are limited so that monotone data stay monotone.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::InvalidInput(format!(
                "abscissa and ordinate lengths differ ({n} vs {})",
                y.len()
            )));
        }
        if n < 2 {
            return Err(Error::InvalidInput("need at least two nodes".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("abscissae must be strictly increasing".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite node".into()));
        }
        let width = n.min(5);
        let mut d: Vec<f64> = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(width / 2).min(n - width);
                lagrange_slope(&x, &y, i, lo, lo + width)
            })
            .collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        for i in 0..n {
            let left = if i > 0 { Some(delta[i - 1]) } else { None };
            let right = if i < n - 1 { Some(delta[i]) } else { None };
            let sgn_clash = |s: f64| d[i] * s < 0.0;
            match (left, right) {
                (Some(l), Some(r)) if l * r <= 0.0 => d[i] = 0.0,
                (Some(s), _) | (None, Some(s)) if s == 0.0 || sgn_clash(s) => d[i] = 0.0,
                _ => {}
            }
        }
        // Fritsch-Carlson: keep (alpha, beta) inside the circle of radius 3.
        for i in 0..n - 1 {
            if delta[i] == 0.0 {
                d[i] = 0.0;
                d[i + 1] = 0.0;
                continue;
            }
            let a = d[i] / delta[i];
            let b = d[i + 1] / delta[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                d[i] = tau * a * delta[i];
                d[i + 1] = tau * b * delta[i];
            }
        }
        Ok(Self { x, y, d })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.d
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Value at `t`; `None` outside the node range.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let (a, b) = self.domain();
        if !(t >= a && t <= b) {
            return None;
        }
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1])
    }

    /// Value at `t`, or `outside` beyond the node range.
    pub fn eval_or(&self, t: f64, outside: f64) -> f64 {
        self.eval(t).unwrap_or(outside)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_smooth_function() {
        let x: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|v| (-v).exp()).collect();
        let m = MonotoneCubic::new(x, y).unwrap();
        for i in 0..997 {
            let t = i as f64 * 0.01003;
            let e = (m.eval(t).unwrap() - (-t).exp()).abs();
            assert!(e < 2e-7, "t={t} err={e}");
        }
        assert_eq!(m.eval(10.5), None);
        assert_eq!(m.eval_or(-1.0, 0.0), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(MonotoneCubic::new(vec![0.0], vec![1.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_data_stay_monotone(steps in proptest::collection::vec((0.01f64..2.0, 0.0f64..3.0), 3..30)) {
            let mut x = vec![0.0];
            let mut y = vec![0.0];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                // Occasional flat steps exercise the zero-slope branch.
                let dy = if *dy < 0.3 { 0.0 } else { *dy };
                y.push(y.last().unwrap() + dy);
            }
            let m = MonotoneCubic::new(x.clone(), y).unwrap();
            let (a, b) = m.domain();
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=500 {
                let t = (a + (b - a) * i as f64 / 500.0).min(b);
                let v = m.eval(t).unwrap();
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
