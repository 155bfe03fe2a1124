//! Spectrum extraction and resonance/antiresonance detection.
//!
//! An accelerometer trace becomes a band-limited magnitude spectrum
//! (rectangular window, bins at the trace's native resolution), gets smoothed
//! with a short moving average to kill local variance, and the surviving
//! local extrema are the resonant and antiresonant frequencies. A 10 Hz
//! exclusion window keeps at most one maximum and one minimum per
//! neighborhood; competing maxima resolve by amplitude.

use crate::error::{Error, Result};
use crate::vibration::AccelTrace;

/// Default moving-average window in bins.
pub const DEFAULT_SMOOTHING_WINDOW: usize = 10;
/// Default extremum exclusion window in Hz.
pub const DEFAULT_EXTREMUM_WINDOW_HZ: f64 = 10.0;

/// Band-limited magnitude spectrum.
#[derive(Debug, Clone)]
pub struct FrequencySpectrum {
    pub band_start_hz: f64,
    pub band_end_hz: f64,
    pub bin_width_hz: f64,
    /// First DFT bin index included in the band.
    first_bin: usize,
    pub magnitudes: Vec<f64>,
}

impl FrequencySpectrum {
    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// Center frequency of band bin `i`.
    pub fn frequency(&self, i: usize) -> f64 {
        (self.first_bin + i) as f64 * self.bin_width_hz
    }
}

/// One detected extremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub frequency_hz: f64,
    pub amplitude: f64,
}

/// Resonances (local maxima) and antiresonances (local minima), each sorted
/// by frequency with pairwise spacing of at least the exclusion window.
#[derive(Debug, Clone, Default)]
pub struct ExtremaSet {
    pub resonances: Vec<Extremum>,
    pub antiresonances: Vec<Extremum>,
}

impl ExtremaSet {
    pub fn resonance_frequencies(&self) -> Vec<f64> {
        self.resonances.iter().map(|e| e.frequency_hz).collect()
    }

    pub fn antiresonance_frequencies(&self) -> Vec<f64> {
        self.antiresonances.iter().map(|e| e.frequency_hz).collect()
    }
}

/// Magnitude spectrum of a trace restricted to `[band_start, band_end)`.
///
/// Bin width is `sample_rate / len`; magnitudes are scaled by `2 / len` so a
/// unit-amplitude sinusoid reads as roughly 1 at its bin. Computed per bin
/// directly — the band only spans a couple hundred bins, so no transform
/// machinery is warranted.
pub fn spectrum(trace: &AccelTrace, band_start_hz: f64, band_end_hz: f64) -> Result<FrequencySpectrum> {
    if trace.len() < 2 {
        return Err(Error::TraceTooShort {
            len: trace.len(),
            min: 2,
        });
    }
    let nyquist = trace.sample_rate_hz / 2.0;
    if band_end_hz > nyquist + 1e-9 {
        return Err(Error::BandViolation {
            lo: band_start_hz,
            hi: band_end_hz,
            bound: format!("Nyquist limit {nyquist} Hz"),
        });
    }
    if band_start_hz < 0.0 || band_start_hz >= band_end_hz {
        return Err(Error::BandViolation {
            lo: band_start_hz,
            hi: band_end_hz,
            bound: "0 <= band_start < band_end".into(),
        });
    }

    let n = trace.len();
    let bin_width = trace.sample_rate_hz / n as f64;
    let first_bin = (band_start_hz / bin_width).round() as usize;
    let bins = ((band_end_hz - band_start_hz) / bin_width).round() as usize;

    let mut magnitudes = Vec::with_capacity(bins);
    for k in first_bin..first_bin + bins {
        // One complex accumulator walked by an exact per-bin rotation.
        let step = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let (sin_step, cos_step) = step.sin_cos();
        let (mut cur_re, mut cur_im) = (1.0f64, 0.0f64);
        let (mut acc_re, mut acc_im) = (0.0f64, 0.0f64);
        for &x in &trace.samples {
            acc_re += x * cur_re;
            acc_im += x * cur_im;
            let re = cur_re * cos_step - cur_im * sin_step;
            cur_im = cur_re * sin_step + cur_im * cos_step;
            cur_re = re;
        }
        magnitudes.push(2.0 / n as f64 * (acc_re * acc_re + acc_im * acc_im).sqrt());
    }

    Ok(FrequencySpectrum {
        band_start_hz,
        band_end_hz,
        bin_width_hz: bin_width,
        first_bin,
        magnitudes,
    })
}

/// Centered moving average with edge truncation: bins near the boundary
/// average over the shorter window that fits, which avoids fabricating
/// minima at the band edges.
pub fn smooth(spec: &FrequencySpectrum, window: usize) -> FrequencySpectrum {
    assert!(window >= 1, "smoothing window must be at least 1 bin");
    let n = spec.len();
    let half_lo = (window - 1) / 2;
    let half_hi = window / 2;
    let mut magnitudes = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half_lo);
        let hi = (i + half_hi).min(n - 1);
        let sum: f64 = spec.magnitudes[lo..=hi].iter().sum();
        magnitudes.push(sum / (hi - lo + 1) as f64);
    }
    FrequencySpectrum {
        magnitudes,
        ..spec.clone()
    }
}

/// Find resonances and antiresonances in a (smoothed) spectrum.
///
/// A bin is a candidate maximum when it is at least as large as both
/// neighbors (plateaus keep their leftmost bin; band endpoints never
/// qualify), symmetrically for minima. Within any `window_hz` span at most
/// one maximum and one minimum survive: the largest maximum and the smallest
/// minimum win, exact ties going to the lower frequency.
pub fn detect_extrema(spec: &FrequencySpectrum, window_hz: f64) -> ExtremaSet {
    let maxima = candidates(spec, |a, b| a > b, |a, b| a >= b);
    let minima = candidates(spec, |a, b| a < b, |a, b| a <= b);
    ExtremaSet {
        resonances: dedupe(maxima, window_hz, true),
        antiresonances: dedupe(minima, window_hz, false),
    }
}

/// Interior candidate extrema under a strict/weak comparison pair: strictly
/// better than the value before the plateau, at least as good as the value
/// after it.
fn candidates(
    spec: &FrequencySpectrum,
    strict: fn(f64, f64) -> bool,
    weak: fn(f64, f64) -> bool,
) -> Vec<Extremum> {
    let m = &spec.magnitudes;
    let n = m.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 <= n - 1 {
        // Leftmost bin of a plateau of equal values.
        let mut j = i;
        while j + 1 < n && m[j + 1] == m[i] {
            j += 1;
        }
        if j < n - 1 && strict(m[i], m[i - 1]) && weak(m[i], m[j + 1]) {
            out.push(Extremum {
                frequency_hz: spec.frequency(i),
                amplitude: m[i],
            });
        }
        i = j + 1;
    }
    out
}

/// Greedy exclusion: order candidates by quality (largest maxima or smallest
/// minima first, ties to lower frequency), then accept each unless a winner
/// already sits within the window.
fn dedupe(mut candidates: Vec<Extremum>, window_hz: f64, maxima: bool) -> Vec<Extremum> {
    candidates.sort_by(|a, b| {
        let quality = if maxima {
            b.amplitude.partial_cmp(&a.amplitude).unwrap()
        } else {
            a.amplitude.partial_cmp(&b.amplitude).unwrap()
        };
        quality.then(a.frequency_hz.partial_cmp(&b.frequency_hz).unwrap())
    });
    let mut winners: Vec<Extremum> = Vec::new();
    for c in candidates {
        if winners
            .iter()
            .all(|w| (w.frequency_hz - c.frequency_hz).abs() >= window_hz)
        {
            winners.push(c);
        }
    }
    winners.sort_by(|a, b| a.frequency_hz.partial_cmp(&b.frequency_hz).unwrap());
    winners
}
