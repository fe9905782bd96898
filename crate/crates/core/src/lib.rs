//! Split-step Fourier simulation of the cubic nonlinear Schrödinger equation
//! on a torus, with the linear-stability and non-resonance checks for plane
//! waves and long-time trajectory diagnostics.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod spectral;
pub mod stability;
pub mod transforms;

pub use error::{Error, Result};
pub use integrator::{SplitStepper, SplitVariant, StepScheme};
pub use spectral::{Grid, Mode, SpectralField};
