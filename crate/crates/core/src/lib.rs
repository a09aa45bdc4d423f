//! Minimum-phase analysis of causal signals and identification of
//! minimum-phase-preserving operators from two probe responses.

pub mod config;
pub mod descriptor;
pub mod error;
pub mod experiment;
pub mod factorization;
pub mod identification;
pub mod laguerre;
pub mod operator;
mod quadrature;
pub mod signal;
pub mod transforms;

pub use config::Config;
pub use error::{Error, Result};
pub use num_complex::Complex64;
