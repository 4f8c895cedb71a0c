//! Plane-wave imaging toolkit for row-column array (RCA) ultrasound probes.
//!
//! The crate covers the full desk-scale pipeline: synthetic RF channel data for
//! point-scatterer phantoms, IQ demodulation, per-transmit delay-and-sum
//! volumes, multiplicative (FMAS / RC-FMAS) and coherent compounding, and the
//! image-quality metrics used to compare the methods.

pub mod beamform;
pub mod compound;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod sigproc;
pub mod synth;

pub use error::RcaError;
