//! Executable two-point constructions for multitask learning: exact error
//! probabilities, mixture KL and Fano-type bounds, the classical learners,
//! concentration inequalities, and a reproducible Monte Carlo engine.

pub mod error;
pub mod exact;
pub mod learner;
pub mod mc;
pub mod prob;
pub mod scenario;
pub mod tail;

pub use error::{Error, Result};
