//! Deterministic simulator and library for distributed stochastic optimization
//! under communication compression.
//!
//! The crate is organized as a set of interchangeable strategies selected by
//! name at runtime:
//!
//! - [`compressor`]: compression operators (identity, rand-k, top-k, stochastic
//!   quantization, scaled wrappers) built from serializable specs, with wire
//!   cost accounting.
//! - [`fcc`]: the recursive compress-the-residual communication protocol used
//!   by the accumulated-compression algorithm.
//! - [`problem`]: synthetic objectives (least squares, logistic regression,
//!   zero-chain instances) and stochastic gradient oracles.
//! - [`algorithm`]: the optimizer family (`psgd`, `neolithic`, `mem_sgd`,
//!   `double_squeeze`, `ef21_sgd`, `qsgd`) behind a common trait, registered
//!   by name.
//! - [`harness`]: experiment orchestration, multi-trial aggregation, CSV/JSON
//!   emission and verification suites.
//!
//! Every run is reproducible: all randomness derives from one root seed via
//! labeled streams, and identical configs produce byte-identical outputs.

pub mod algorithm;
pub mod compressor;
pub mod error;
pub mod fcc;
pub mod gradcheck;
pub mod harness;
pub mod problem;
pub mod progress;
pub mod rng;
pub mod vector;
pub mod wire;

pub use error::{Error, Result};
pub use vector::RealVector;
