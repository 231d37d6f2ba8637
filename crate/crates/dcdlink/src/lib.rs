//! Link-level simulation and algorithms for a quantized massive-MIMO uplink:
//! comb-pilot reference signals, a frequency-selective Rayleigh channel,
//! low-resolution ADC quantization, separable MMSE channel estimation, and
//! multi-user detection by bounded, multiplication-free coordinate descent
//! alongside a linear MMSE baseline — plus an operation/NAND-gate complexity
//! accountant for the whole receive pipeline.
//!
//! Everything numeric is generic over the floating-point scalar through
//! [`Scalar`] (implemented for `f32` and `f64`); the aliases at the crate
//! root pin the common concrete choices.

pub mod channel;
pub mod chest;
pub mod complexity;
pub mod equalizer;
pub mod error;
pub mod frontend;
pub mod grid;
pub mod harness;
pub mod num;
pub mod refsig;
pub mod seeding;

pub use error::{Error, Result};
pub use grid::ResourceGrid;
pub use num::Scalar;

/// Single-precision complex sample.
pub type C32 = num_complex::Complex<f32>;
/// Double-precision complex sample.
pub type C64 = num_complex::Complex<f64>;

/// Single-precision resource grid.
pub type Grid32 = ResourceGrid<f32>;
/// Double-precision resource grid.
pub type Grid64 = ResourceGrid<f64>;

/// Single-precision per-link frequency response.
pub type FreqResponse32 = channel::FreqResponse<f32>;
/// Double-precision per-link frequency response.
pub type FreqResponse64 = channel::FreqResponse<f64>;

/// Single-precision simulation configuration.
pub type SimConfig32 = harness::SimConfig<f32>;
/// Double-precision simulation configuration.
pub type SimConfig64 = harness::SimConfig<f64>;
