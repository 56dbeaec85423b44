//! Fourier spectral solver for 2D incompressible flow in vorticity–streamfunction
//! form on the periodic box (0, 2π)², advanced with the two-step BDF2 scheme
//! whose advection term is evaluated at the extrapolated state
//! (2ψⁿ − ψⁿ⁻¹, 2ωⁿ − ωⁿ⁻¹).
//!
//! Besides the solver, the crate carries the measuring instruments for its
//! long-time behaviour: weighted G-norms on consecutive levels, uniform-bound
//! envelopes, a two-step discrete Gronwall bound, Wente-type quotients and
//! long-time statistics accumulators.

pub mod analysis;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod field;
pub mod grid;
pub mod init;
pub mod manufactured;
pub mod monitors;
pub mod nonlinear;
pub mod norms;
pub mod par;
pub mod snapshot;
pub mod spectrum;
pub mod stats;
pub mod stepper;

pub use error::{Error, Result};
pub use field::SpectralField;
pub use grid::Grid;
pub use norms::{GWeight, StatePair};
pub use rustfft::num_complex::Complex64;
