//! Simulation and design of a magnet-free nonreciprocal filtering antenna.
//!
//! A third-order coupled-resonator bandpass filter whose resonator capacitors
//! are sinusoidally modulated with a progressive phase feeds a wire-model
//! Yagi-Uda radiator. The crate provides:
//!
//! * [`synth`]: Chebyshev prototype and lumped ladder realization.
//! * [`circuit`]: the shared ladder data model and modulation law.
//! * [`hbsolver`]: harmonic-balance (conversion-matrix) analysis of the
//!   linear time-periodic ladder with power-wave scattering parameters.
//! * [`tdoracle`]: an independent RK4 time-domain integration used to
//!   verify the harmonic-balance results.
//! * [`antenna`]: induced-EMF Yagi-Uda model (impedances, currents, patterns).
//! * [`system`]: the composed filtering antenna, TX/RX gain curves and cuts.
//! * [`optimizer`]: Nelder-Mead, the equi-ripple tuner and the modulation
//!   search.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod antenna;
pub mod circuit;
pub mod error;
pub mod hbsolver;
pub mod optimizer;
pub mod quadrature;
pub mod synth;
pub mod system;
pub mod tdoracle;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
