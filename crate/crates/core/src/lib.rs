//! Hybrid quantum-classical neural network benchmark.
//!
//! A classical feature extractor feeds a parameterized quantum circuit whose
//! Pauli-Z readout is mapped linearly to a logit. Models are trained with
//! Adam on binary cross-entropy under k-fold cross-validation and compared
//! against fully classical references with nonparametric tests.

pub mod classical;
pub mod data;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod qnn;
pub mod statevec;
pub mod stats;

pub use error::{Error, Result};
