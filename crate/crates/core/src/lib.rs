//! Truncated-Wigner simulation of two single-mode driven-dissipative
//! condensates that are pumped by entangled photon pairs, together with the
//! closed-form weak-noise statistics used to check it.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: gain saturation laws, noise factor, equilibrium density.
//! * [`sde`]: Euler–Maruyama ensemble integrator for the quadrature SDEs.
//! * [`stats`]: Madelung moments and the 4×4 quadrature covariance.
//! * [`entanglement`]: PPT functional, squeezing threshold, critical pump.
//! * [`analytic`]: closed-form quench dynamics and disentanglement time.
//! * [`io`]: snapshot dumps and JSON moment records.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod entanglement;
pub mod error;
pub mod io;
pub mod model;
pub mod numeric;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
