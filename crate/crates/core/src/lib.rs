//! Numerical inverse-scattering toolkit for the focusing Fokas-Lenells
//! equation
//!
//!   u_{tx} + alpha beta^2 u - 2 i alpha beta u_x - alpha u_{xx}
//!          - i alpha beta^2 |u|^2 u_x = 0.
//!
//! The crate computes scattering data from decaying initial potentials,
//! builds N-soliton fields from the reflectionless Riemann-Hilbert linear
//! system, evolves fields with an independent spectral integrator, and
//! checks the solitonic-cone asymptotics numerically.

pub mod asymptotic;
pub mod error;
pub mod evolve;
pub mod fft;
pub mod field;
pub mod gamma;
pub mod mat2;
pub mod rhp;
pub mod scattering;
pub mod spectrum;

pub use error::{Error, Result};
