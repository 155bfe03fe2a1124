//! Resonance-based secure pairing, end to end and without hardware.

pub mod adversary;
pub mod bits;
pub mod error;
pub mod encoding;
pub mod golay;
pub mod metrics;
pub mod nist;
pub mod pipeline;
pub mod protocol;
pub mod spectral;
pub mod study;
pub mod reconcile;
pub mod report;
pub mod vibration;

pub use bits::BitSequence;
pub use error::{Error, Result};
