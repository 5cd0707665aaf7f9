//! Continuous wavelet transforms over matrix dilation groups, wavefront set
//! detection by coefficient decay, and numerical checks of the structural
//! conditions that make the detection sound.

pub mod config;
pub mod detector;
pub mod error;
pub mod fft;
pub mod geometry;
pub mod group;
pub mod quadrature;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod transform;
pub mod verifier;
pub mod wavelet;

pub use error::{Error, Result};
pub use rustfft::num_complex::Complex64;
