//! Vacuum-polarization kernels of the reduced Bogoliubov-Dirac-Fock model
//! under sharp and smooth ultraviolet cut-offs, the associated radial linear
//! response, and the analytic brackets used to interpret it.
//!
//! Units: `m_e = c = ħ = 1`. Fourier transforms are unitary,
//! `ĝ(k) = (2π)^{-3/2} ∫ g(x) e^{-ik·x} dx`.

pub mod bounds;
pub mod dispersion;
pub mod error;
pub mod interp;
pub mod kernel;
pub mod output;
pub mod precision;
pub mod quadrature;
pub mod response;
pub mod sources;
pub mod special;
pub mod transform;

pub use error::{Error, Result};
