//! Ideal quantum Gibbs information source: sampling of occupation arrays,
//! exact entropy rates, and universal (match-length and Lempel-Ziv)
//! entropy estimators.

pub mod cli;
pub mod config;
pub mod entropy;
pub mod error;
pub mod estimators;
pub mod lattice;
pub mod lzparse;
pub mod matchlen;
pub mod quad;
pub mod rng;
pub mod source;

pub use error::{Error, Result};
