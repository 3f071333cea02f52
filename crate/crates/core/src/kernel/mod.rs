//! The momentum-space vacuum-polarization function `B_Λ^ζ(k)`.

pub mod sharp;
pub mod smooth;
pub mod table;

use serde::{Deserialize, Serialize};

pub use sharp::{
    b0_3d_oracle, b0_closed, b0_derivatives, b0_quad, b0_zero, b_infinity, b_infinity_inner,
    b_infinity_outer, SharpSpline,
};
pub use smooth::{b_t_quad, b_t_reduced, b_t_zero_closed, b_zeta_quad, b_zeta_zero};
pub use table::{tabulate_kernel, KernelTable};

/// A numerical value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

/// Evaluation route for kernel values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    ClosedForm,
    Quadrature1D,
    Quadrature2D,
    Oracle3D,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Quadrature1D => "quadrature-1d",
            Method::Quadrature2D => "quadrature-2d",
            Method::Oracle3D => "oracle-3d",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "closed-form" => Ok(Method::ClosedForm),
            "quadrature-1d" => Ok(Method::Quadrature1D),
            "quadrature-2d" => Ok(Method::Quadrature2D),
            "oracle-3d" => Ok(Method::Oracle3D),
            other => Err(crate::Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}
