//! Exact-factorization analysis of a one-dimensional asymmetric double well
//! coupled to a single cavity mode.

pub mod banded;
pub mod cli;
pub mod efactor;
pub mod eigensolver;
pub mod error;
pub mod model;
pub mod lcao_dho;
pub mod quadrature;
pub mod resonance;

pub use error::{Error, Result};
