//! Certification suite for discrete pairwise Markov random fields.
//!
//! The crate implements the models and both inference backends (junction
//! tree and loopy belief propagation), likelihood training, reliability and
//! complexity bound checks, a profiling harness with energy metering, the
//! expert knowledge database, and the two-segment care label that combines
//! them.

pub mod canonical;
pub mod checks;
pub mod error;
pub mod inference;
pub mod knowledge;
pub mod label;
pub mod mrf;
pub mod profiling;
pub mod training;

pub use error::{Error, Result};
