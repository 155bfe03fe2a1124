//! The trace-to-bits extraction stack.
//!
//! Every party — wearable, device, and any eavesdropper — runs exactly this
//! sequence: band-limited spectrum, moving-average smoothing, extremum
//! detection, segment-relative encoding. The parameters are public protocol
//! constants.

use crate::bits::BitSequence;
use crate::encoding::{encode, SegmentGrid};
use crate::error::Result;
use crate::spectral::{detect_extrema, smooth, spectrum, ExtremaSet, DEFAULT_EXTREMUM_WINDOW_HZ, DEFAULT_SMOOTHING_WINDOW};
use crate::vibration::AccelTrace;

/// Public extraction parameters shared by all parties.
#[derive(Debug, Clone)]
pub struct ExtractionConfig {
    pub grid: SegmentGrid,
    pub smoothing_window: usize,
    pub extremum_window_hz: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            grid: SegmentGrid::default(),
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
            extremum_window_hz: DEFAULT_EXTREMUM_WINDOW_HZ,
        }
    }
}

/// Smoothed-spectrum extrema of a trace over the grid band.
pub fn extract_extrema(trace: &AccelTrace, config: &ExtractionConfig) -> Result<ExtremaSet> {
    let spec = spectrum(trace, config.grid.band_start_hz, config.grid.band_end_hz)?;
    let smoothed = smooth(&spec, config.smoothing_window);
    Ok(detect_extrema(&smoothed, config.extremum_window_hz))
}

/// Full extraction: trace to raw bit sequence.
pub fn extract_bits(trace: &AccelTrace, config: &ExtractionConfig) -> Result<BitSequence> {
    encode(&extract_extrema(trace, config)?, &config.grid)
}
