//! Segment-relative location coding of extrema.
//!
//! The band splits into six equal segments, each segment into three
//! subsegments. Every segment contributes one 2-bit code per stream: 00 for
//! no extremum, otherwise 01/11/10 for the subsegment holding it — adjacent
//! subsegments differ in one bit, so a near-boundary disagreement costs one
//! flip instead of two. Encoding relative positions instead of absolute
//! frequency levels keeps the bit sequence free of ordering patterns an
//! eavesdropper could exploit.

use crate::bits::BitSequence;
use crate::error::{Error, Result};
use crate::spectral::{Extremum, ExtremaSet};

/// Subsegment-to-code table: index 0 is the empty code.
const CODES: [[u8; 2]; 4] = [[0, 0], [0, 1], [1, 1], [1, 0]];

/// Even partition of the band into segments and subsegments.
#[derive(Debug, Clone)]
pub struct SegmentGrid {
    pub band_start_hz: f64,
    pub band_end_hz: f64,
    pub segment_count: usize,
    pub subsegment_count: usize,
}

impl Default for SegmentGrid {
    fn default() -> Self {
        Self {
            band_start_hz: 20.0,
            band_end_hz: 125.0,
            segment_count: 6,
            subsegment_count: 3,
        }
    }
}

impl SegmentGrid {
    pub fn new(
        band_start_hz: f64,
        band_end_hz: f64,
        segment_count: usize,
        subsegment_count: usize,
    ) -> Result<Self> {
        if !(band_start_hz < band_end_hz) {
            return Err(Error::InvalidGrid(format!(
                "band [{band_start_hz}, {band_end_hz}) is empty"
            )));
        }
        if segment_count < 1 {
            return Err(Error::InvalidGrid("need at least one segment".into()));
        }
        if subsegment_count != 3 {
            return Err(Error::InvalidGrid(format!(
                "the 2-bit code table covers exactly 3 subsegments, got {subsegment_count}"
            )));
        }
        Ok(Self {
            band_start_hz,
            band_end_hz,
            segment_count,
            subsegment_count,
        })
    }

    /// Total encoded bits: two streams of 2-bit codes, one code per segment.
    pub fn output_bits(&self) -> usize {
        4 * self.segment_count
    }

    pub fn segment_width_hz(&self) -> f64 {
        (self.band_end_hz - self.band_start_hz) / self.segment_count as f64
    }

    pub fn subsegment_width_hz(&self) -> f64 {
        self.segment_width_hz() / self.subsegment_count as f64
    }

    /// Segment and subsegment holding a frequency. Intervals are half-open
    /// `[lo, hi)`; the final subsegment closes at the band end.
    pub fn locate(&self, frequency_hz: f64) -> Result<(usize, usize)> {
        if frequency_hz < self.band_start_hz || frequency_hz > self.band_end_hz {
            return Err(Error::OutOfBand {
                frequency_hz,
                band_lo: self.band_start_hz,
                band_hi: self.band_end_hz,
            });
        }
        let seg = (((frequency_hz - self.band_start_hz) / self.segment_width_hz()) as usize)
            .min(self.segment_count - 1);
        let seg_lo = self.band_start_hz + seg as f64 * self.segment_width_hz();
        let sub = (((frequency_hz - seg_lo) / self.subsegment_width_hz()) as usize)
            .min(self.subsegment_count - 1);
        Ok((seg, sub))
    }
}

/// Encode an extrema set as `R_1..R_S` then `A_1..A_S`, 2 bits per code.
///
/// When several resonances share a segment the highest-amplitude one is
/// encoded; for antiresonances the lowest-amplitude one wins.
pub fn encode(extrema: &ExtremaSet, grid: &SegmentGrid) -> Result<BitSequence> {
    let resonance_codes = stream_codes(&extrema.resonances, grid, true)?;
    let antiresonance_codes = stream_codes(&extrema.antiresonances, grid, false)?;
    let mut bits = Vec::with_capacity(grid.output_bits());
    for code in resonance_codes.iter().chain(&antiresonance_codes) {
        bits.extend_from_slice(&CODES[*code]);
    }
    Ok(BitSequence::from_bits(bits))
}

fn stream_codes(
    extrema: &[Extremum],
    grid: &SegmentGrid,
    keep_highest: bool,
) -> Result<Vec<usize>> {
    let mut chosen: Vec<Option<Extremum>> = vec![None; grid.segment_count];
    for e in extrema {
        let (seg, _) = grid.locate(e.frequency_hz)?;
        chosen[seg] = Some(match chosen[seg] {
            None => *e,
            Some(cur) => {
                let replace = if keep_highest {
                    e.amplitude > cur.amplitude
                } else {
                    e.amplitude < cur.amplitude
                };
                if replace {
                    *e
                } else {
                    cur
                }
            }
        });
    }
    chosen
        .iter()
        .map(|slot| match slot {
            None => Ok(0),
            Some(e) => Ok(grid.locate(e.frequency_hz)?.1 + 1),
        })
        .collect()
}

/// Hamming distance between the codes of the subsegments holding two
/// frequencies in the same segment. Exposes the code table's gray-like
/// structure for property tests.
pub fn code_distance(f_hz: f64, g_hz: f64, grid: &SegmentGrid) -> Result<usize> {
    let (seg_f, sub_f) = grid.locate(f_hz)?;
    let (seg_g, sub_g) = grid.locate(g_hz)?;
    if seg_f != seg_g {
        return Err(Error::DifferentSegments { a_hz: f_hz, b_hz: g_hz });
    }
    let a = CODES[sub_f + 1];
    let b = CODES[sub_g + 1];
    Ok(a.iter().zip(&b).filter(|(x, y)| x != y).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(frequency_hz: f64, amplitude: f64) -> Extremum {
        Extremum {
            frequency_hz,
            amplitude,
        }
    }

    #[test]
    fn empty_extrema_encode_to_all_zeros() {
        let grid = SegmentGrid::default();
        let bits = encode(&ExtremaSet::default(), &grid).unwrap();
        assert_eq!(bits.len(), 24);
        assert_eq!(bits.weight(), 0);
    }

    #[test]
    fn single_resonance_at_30_hz_sets_middle_code() {
        // Segment 1 spans [20, 37.5); its subsegments split at 25.833 and
        // 31.667, so 30 Hz sits in the middle one and codes as 11.
        let grid = SegmentGrid::default();
        let set = ExtremaSet {
            resonances: vec![res(30.0, 2.0)],
            antiresonances: vec![],
        };
        let bits = encode(&set, &grid).unwrap();
        assert_eq!(bits.to_string(), "110000000000000000000000");
    }

    #[test]
    fn amplitude_rule_keeps_the_stronger_resonance() {
        // 25 Hz (amp 3) and 33 Hz (amp 5) both in segment 1: the stronger
        // 33 Hz peak wins and sits in the third subsegment, coding 10.
        let grid = SegmentGrid::default();
        let set = ExtremaSet {
            resonances: vec![res(25.0, 3.0), res(33.0, 5.0)],
            antiresonances: vec![],
        };
        let bits = encode(&set, &grid).unwrap();
        assert_eq!(bits.slice(0..2).to_string(), "10");
    }

    #[test]
    fn antiresonance_rule_keeps_the_weaker() {
        let grid = SegmentGrid::default();
        let set = ExtremaSet {
            resonances: vec![],
            antiresonances: vec![res(25.0, 0.4), res(33.0, 0.1)],
        };
        let bits = encode(&set, &grid).unwrap();
        // 33 Hz (lower amplitude) wins: third subsegment, code 10, at the
        // start of the antiresonance stream (bits 12..14).
        assert_eq!(bits.slice(12..14).to_string(), "10");
    }

    #[test]
    fn out_of_band_extremum_is_an_error() {
        let grid = SegmentGrid::default();
        let set = ExtremaSet {
            resonances: vec![res(126.0, 1.0)],
            antiresonances: vec![],
        };
        let err = encode(&set, &grid).unwrap_err();
        assert!(err.to_string().contains("126"));
    }

    #[test]
    fn band_end_falls_in_final_subsegment() {
        let grid = SegmentGrid::default();
        assert_eq!(grid.locate(125.0).unwrap(), (5, 2));
        assert_eq!(grid.locate(20.0).unwrap(), (0, 0));
    }

    #[test]
    fn output_length_is_four_bits_per_segment() {
        for segments in [1, 4, 6, 9] {
            let grid = SegmentGrid::new(20.0, 125.0, segments, 3).unwrap();
            let bits = encode(&ExtremaSet::default(), &grid).unwrap();
            assert_eq!(bits.len(), 4 * segments);
        }
    }

    #[test]
    fn adjacent_subsegments_differ_in_one_bit() {
        let grid = SegmentGrid::default();
        let w = grid.subsegment_width_hz();
        let in_sub = |seg: usize, sub: usize| {
            grid.band_start_hz + seg as f64 * grid.segment_width_hz() + (sub as f64 + 0.5) * w
        };
        assert_eq!(code_distance(in_sub(2, 0), in_sub(2, 1), &grid).unwrap(), 1);
        assert_eq!(code_distance(in_sub(2, 1), in_sub(2, 2), &grid).unwrap(), 1);
        assert_eq!(code_distance(in_sub(2, 0), in_sub(2, 2), &grid).unwrap(), 2);
        assert_eq!(code_distance(in_sub(2, 1), in_sub(2, 1), &grid).unwrap(), 0);
        assert!(code_distance(in_sub(1, 0), in_sub(2, 0), &grid).is_err());
    }

    #[test]
    fn sub_boundary_perturbations_flip_at_most_two_bits() {
        // Moving one extremum by less than a subsegment width flips 0 bits if
        // no boundary is crossed, at most 2 when one is (and only 1 when the
        // crossing is between adjacent subsegments of the code table).
        let grid = SegmentGrid::default();
        let w = grid.subsegment_width_hz();
        for base in [23.0, 29.0, 34.5, 51.0, 88.0, 119.0] {
            let set_a = ExtremaSet {
                resonances: vec![res(base, 1.0)],
                antiresonances: vec![],
            };
            for delta in [-0.9 * w, -0.3 * w, 0.3 * w, 0.9 * w] {
                let f = base + delta;
                if f < grid.band_start_hz || f > grid.band_end_hz {
                    continue;
                }
                let set_b = ExtremaSet {
                    resonances: vec![res(f, 1.0)],
                    antiresonances: vec![],
                };
                let a = encode(&set_a, &grid).unwrap();
                let b = encode(&set_b, &grid).unwrap();
                let dist = a.hamming_distance(&b).unwrap();
                let (seg_a, sub_a) = grid.locate(base).unwrap();
                let (seg_b, sub_b) = grid.locate(f).unwrap();
                if seg_a == seg_b && sub_a == sub_b {
                    assert_eq!(dist, 0);
                } else {
                    assert!(dist <= 2, "distance {dist} for {base} -> {f}");
                }
            }
        }
    }
}
