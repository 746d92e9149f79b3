//! Numerical laboratory for the two-dimensional cubic–quintic nonlinear
//! Schrödinger equation with spatially varying coefficients
//!
//! ```text
//! i u_t = −Δu + K₁(x)|u|²u + K₂(x)|u|⁴u
//! ```
//!
//! on a periodic box used as a proxy for the plane.

pub mod checkpoint;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod fields;
pub mod grid;
pub mod inequality;
pub mod polar;
pub mod scenarios;
pub mod series;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Grid2D, SpectralField, WaveField, C64};
