//! Numerical laboratory for the Benjamin-Ono equation on the torus.
//!
//! The crate is organised around four layers:
//!
//! * [`birkhoff`]: closed-form arithmetic of the integrable structure in
//!   Birkhoff variables (gaps, frequencies, Hamiltonians, charts, norms).
//! * [`resonance`]: simultaneous rational approximation of frequencies,
//!   resonant tori and the stability-certificate constants.
//! * [`spectral`]: pseudo-spectral simulation of the (perturbed) equation.
//! * [`lax`]: extraction of the actions from the spectrum of the truncated
//!   Lax operator.
//!
//! [`lab`] wires them into batch experiments, and [`validation`] holds the
//! built-in property suite used by `bo-lab validate` and the acceptance tests.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// The reference gap 0.318 is not meant as 1/π.
#![allow(clippy::approx_constant)]

pub mod birkhoff;
pub mod error;
pub mod lab;
pub mod lax;
pub mod resonance;
pub mod spectral;
pub mod validation;

pub use error::{Error, Result};
pub use num_complex::Complex64;
