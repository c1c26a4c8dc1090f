use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("resolution {0} is below the minimum of 2 nodes per unit length")]
    InvalidResolution(f64),
    #[error("no lattice point falls strictly inside the domain")]
    EmptyInterior,
    #[error("mask splits into {0} connected components")]
    DisconnectedMask(usize),
    #[error("margin {0} must be positive")]
    InvalidMargin(f64),
    #[error("erosion by margin {0} leaves an empty set")]
    EmptyErosion(f64),
    #[error("failed to read mask {path}: {reason}")]
    MaskRead { path: PathBuf, reason: String },

    #[error("K = {k} exceeds the high-frequency guard ({max} for {nodes} nodes)")]
    KTooLarge { k: usize, max: usize, nodes: usize },
    #[error("eigenpair {k} did not converge after {iterations} restarts (residual {residual:.3e})")]
    NoConvergence {
        k: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("lambda {lambda} lies beyond the computed spectrum (lambda_K = {max})")]
    LambdaBeyondComputed { lambda: f64, max: f64 },
    #[error("N = {n} exceeds the available {available}")]
    NTooLarge { n: usize, available: usize },
    #[error("spectrum too short: {0}")]
    InsufficientSpectrum(String),

    #[error("Bessel order {0} is not in the supported catalogue")]
    OrderUnsupported(f64),
    #[error("argument {0} is not supported")]
    ArgumentUnsupported(f64),
    #[error("dimension {0} is not supported here")]
    DimensionUnsupported(usize),

    #[error("sampled symbol violates the Nyquist condition: period {period:.4} < required {required:.4}")]
    NyquistViolation { period: f64, required: f64 },
    #[error("grid function does not match the operator lattice: {0}")]
    GridMismatch(String),
    #[error("sample lattices do not match: {0}")]
    LatticeMismatch(String),
    #[error("expected a field of kind {expected}, got {got}")]
    KindMismatch { expected: String, got: String },
    #[error("tail estimate {tail:.3e} exceeds 1% of the value {value:.3e}")]
    TailBoundExceeded { tail: f64, value: f64 },
    #[error("symbol error: {0}")]
    InvalidSymbol(String),

    #[error("cache file {path}: {reason}")]
    Cache { path: PathBuf, reason: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Configuration problems map to exit code 2, everything else numeric to 3.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidDomain(_)
                | Error::InvalidResolution(_)
                | Error::InvalidMargin(_)
                | Error::MaskRead { .. }
                | Error::KTooLarge { .. }
                | Error::NTooLarge { .. }
                | Error::DimensionUnsupported(_)
                | Error::InvalidSymbol(_)
        )
    }
}
