//! Numerical laboratory for Laplacian eigenbases on bounded domains, the
//! free Fermi gas one-body matrix and exchange hole, semiclassical Weyl
//! quantization and the universal limits they converge to.

pub mod cli;
pub mod correlation;
pub mod error;
pub mod fermi;
pub mod geometry;
pub mod quantization;
pub mod quadrature;
pub mod spectral;
pub mod special;
pub mod weyl;

pub use error::{Error, Result};
