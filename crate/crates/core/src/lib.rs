//! Sparse nonnegative codes pushed through dropout-noised ReLU layers, the
//! transpose-weight feedforward pass that inverts them, and the statistical
//! machinery to verify that inversion at desk scale.
//!
//! The crate is organized around five areas:
//!
//! * [`rng`], [`linalg`]: explicit-state randomness and dense primitives.
//! * [`model`]: sampling hidden vectors and generating observables.
//! * [`inference`]: offset selection, rectified denoising, error metrics.
//! * [`checks`]: Monte-Carlo estimators, concentration tails, and the
//!   scaling / support-recovery experiments with frozen regression bounds.
//! * [`diagnostics`], [`train`]: random-like weight statistics and a small
//!   MLP with tied-weight synthetic-data training.
//!
//! Everything is deterministic per seed; parallel trial loops derive one
//! substream per trial so results do not depend on thread count.

pub mod checks;
pub mod diagnostics;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod train;

pub use error::{Error, Result};
pub use linalg::{matvec, matvec_t, relu, relu_prime, Matrix};
pub use rng::{derive_seed, Rng, RngSeed};
