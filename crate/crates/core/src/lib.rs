//! Calibration, release and audit of Gaussian-noise pseudo-data matrices,
//! with and without random orthogonal (Haar) masking.
//!
//! The crate is organised bottom-up:
//!
//! - [`quantiles`]: Gaussian and chi-square inverse CDFs and the closed-form
//!   brackets and tail bounds used by the calibration formulas.
//! - [`calibration`]: every noise-scale bound for a privacy budget and problem
//!   shape, plus the full comparison table.
//! - [`mechanisms`]: Haar sampling, Gaussian noise and the three release
//!   settings (noise only, noise then mask, mask then noise).
//! - [`audit`]: numerical verification of the density-ratio machinery by
//!   quadrature and (nested) Monte Carlo.
//!
//! Monte Carlo loops and table generation run on rayon when the `parallel`
//! feature is enabled (the default). Results are identical either way: every
//! work item draws from its own seed sub-stream.

pub mod audit;
pub mod calibration;
mod error;
pub mod mechanisms;
pub mod par;
pub mod quadrature;
pub mod quantiles;

pub use error::{Error, Result};
