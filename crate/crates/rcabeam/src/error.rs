//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by configuration, synthesis, beamforming, and export.
#[derive(Debug, Error)]
pub enum RcaError {
    /// A structural parameter (element count, pitch, grid shape, ...) is unusable.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A signal-processing parameter violates its preconditions.
    #[error("invalid signal processing parameter: {0}")]
    InvalidSignal(String),

    /// Inputs to a pipeline stage are inconsistent with each other.
    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    /// Not enough data to carry out the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A metrics region is empty or lies outside the volume.
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    /// Configuration file could not be parsed or fails validation.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, RcaError>;
