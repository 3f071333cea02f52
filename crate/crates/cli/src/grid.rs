use std::fmt;
use std::str::FromStr;

use serde::Serialize;

/// A one-dimensional sample grid: `MIN:MAX:N[:linear|:log]` or an explicit
/// comma-separated list of increasing values.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "spacing", rename_all = "kebab-case")]
pub enum GridSpec {
    Linear { min: f64, max: f64, count: usize },
    Log { min: f64, max: f64, count: usize },
    List { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridError(pub String);

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for GridError {}

fn number(s: &str) -> Result<f64, GridError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| GridError(format!("'{s}' is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(GridError(format!("'{s}' is not finite")))
    }
}

impl FromStr for GridSpec {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, GridError> {
        if !s.contains(':') {
            let values = s.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
            if values.is_empty() {
                return Err(GridError("empty grid".into()));
            }
            if values.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(GridError("grid values must be strictly increasing".into()));
            }
            return Ok(GridSpec::List { values });
        }
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(GridError(format!("'{s}' is not MIN:MAX:N[:linear|:log]")));
        }
        let (min, max) = (number(parts[0])?, number(parts[1])?);
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| GridError(format!("'{}' is not a point count", parts[2])))?;
        if count < 2 {
            return Err(GridError(format!("grid needs at least 2 points, got {count}")));
        }
        if !(min < max) {
            return Err(GridError(format!("grid needs MIN < MAX, got {min} and {max}")));
        }
        match parts.get(3).map(|p| p.trim()) {
            None | Some("linear") => Ok(GridSpec::Linear { min, max, count }),
            Some("log") if min > 0.0 => Ok(GridSpec::Log { min, max, count }),
            Some("log") => Err(GridError("log spacing needs MIN > 0".into())),
            Some(other) => Err(GridError(format!("unknown spacing '{other}'"))),
        }
    }
}

impl GridSpec {
    /// The grid values; end points are exact.
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::List { values } => values.clone(),
            GridSpec::Linear { min, max, count } => {
                let n = count - 1;
                (0..=n)
                    .map(|i| if i == n { *max } else { min + (max - min) * i as f64 / n as f64 })
                    .collect()
            }
            GridSpec::Log { min, max, count } => {
                let n = count - 1;
                let ratio = (max / min).ln();
                (0..=n)
                    .map(|i| if i == n { *max } else { min * (ratio * i as f64 / n as f64).exp() })
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn forms() {
        assert_eq!("0:2:3".parse::<GridSpec>().unwrap().values(), vec![0.0, 1.0, 2.0]);
        assert_eq!("0,1,2".parse::<GridSpec>().unwrap().values(), vec![0.0, 1.0, 2.0]);
        assert_eq!("0".parse::<GridSpec>().unwrap().values(), vec![0.0]);
        let g = "1:100:3:log".parse::<GridSpec>().unwrap().values();
        assert!((g[1] - 10.0).abs() < 1e-12 && g[2] == 100.0);
        for bad in ["2:1:5", "1:1:5", "0:1:1", "0:1:x", "0:1:4:log", "0:1:4:cubic", "1,1", "a"] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn ranges_are_increasing(min in -1e3f64..1e3, width in 1e-6f64..1e3, count in 2usize..400, log in any::<bool>()) {
            let spec = if log {
                format!("{}:{}:{count}:log", min.abs() + 1e-3, min.abs() + 1e-3 + width)
            } else {
                format!("{min}:{}:{count}", min + width)
            };
            let g = spec.parse::<GridSpec>().unwrap().values();
            prop_assert_eq!(g.len(), count);
            prop_assert!(g.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
