//! Encrypted-inference activation strategies over an emulated leveled
//! homomorphic engine.
//!
//! - [`he_core`]: SIMD ciphertexts with level accounting, a quantized gate
//!   domain and the op ledger.
//! - [`cheb`]: Chebyshev interpolation and low-depth encrypted evaluation.
//! - [`activations`]: square, Chebyshev ReLU and scheme-switching ReLU.
//! - [`netgraph`]: network graphs, packing, bootstrap planning and the
//!   inference runner.

pub mod activations;
pub mod cheb;
pub mod constants;
pub mod he_core;
pub mod netgraph;
