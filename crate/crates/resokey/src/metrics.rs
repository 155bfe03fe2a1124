//! Evaluation metrics: bit mismatch rate, entropy, mutual information,
//! bit rate.
//!
//! All estimators are plug-in (maximum likelihood) over empirical
//! frequencies, matching how the reported values are computed; the plug-in
//! mutual information carries a known positive bias of roughly
//! `(|X|-1)(|Y|-1) / (2 n ln 2)`.

use std::collections::BTreeMap;

use crate::bits::BitSequence;
use crate::error::{Error, Result};

/// Fraction of disagreeing positions between two equal-length sequences.
pub fn bit_mismatch_rate(a: &BitSequence, b: &BitSequence) -> Result<f64> {
    let dist = a.hamming_distance(b)?;
    Ok(dist as f64 / a.len() as f64)
}

/// Shannon entropy (bits) of an empirical distribution given by counts.
fn entropy_from_counts<I: IntoIterator<Item = usize>>(counts: I, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Plug-in entropy of the 2-bit code at `code_index` (1-based, 1..=12 for
/// the default grid: resonance codes then antiresonance codes) across a
/// collection of raw 24-bit sequences.
pub fn entropy_per_code(sequences: &[BitSequence], code_index: usize) -> Result<f64> {
    if sequences.is_empty() {
        return Err(Error::MetricInput("empty sequence collection".into()));
    }
    if code_index == 0 {
        return Err(Error::MetricInput("code indices are 1-based".into()));
    }
    let bit = 2 * (code_index - 1);
    let mut counts = [0usize; 4];
    for seq in sequences {
        if bit + 1 >= seq.len() {
            return Err(Error::MetricInput(format!(
                "code index {code_index} out of range for {}-bit sequences",
                seq.len()
            )));
        }
        counts[((seq.bit(bit) << 1) | seq.bit(bit + 1)) as usize] += 1;
    }
    Ok(entropy_from_counts(counts, sequences.len()))
}

/// Plug-in entropy of the bit at `bit_index` across sequences.
pub fn entropy_per_bit(sequences: &[BitSequence], bit_index: usize) -> Result<f64> {
    if sequences.is_empty() {
        return Err(Error::MetricInput("empty sequence collection".into()));
    }
    let ones = sequences.iter().filter(|s| s.bit(bit_index) == 1).count();
    Ok(entropy_from_counts(
        [ones, sequences.len() - ones],
        sequences.len(),
    ))
}

/// Plug-in mutual information (bits per symbol) between two equal-length
/// symbol sequences.
///
/// A minimum length guards against the estimator floor: below ~100 samples
/// the positive bias swamps any signal.
pub fn mutual_information<S: Ord + Copy>(xs: &[S], ys: &[S]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 100 {
        return Err(Error::MetricInput(format!(
            "mutual information needs at least 100 samples, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mut joint: BTreeMap<(S, S), usize> = BTreeMap::new();
    let mut mx: BTreeMap<S, usize> = BTreeMap::new();
    let mut my: BTreeMap<S, usize> = BTreeMap::new();
    for (&x, &y) in xs.iter().zip(ys) {
        *joint.entry((x, y)).or_insert(0) += 1;
        *mx.entry(x).or_insert(0) += 1;
        *my.entry(y).or_insert(0) += 1;
    }
    let mut mi = 0.0;
    for (&(x, y), &c) in &joint {
        let p_xy = c as f64 / n;
        let p_x = mx[&x] as f64 / n;
        let p_y = my[&y] as f64 / n;
        mi += p_xy * (p_xy / (p_x * p_y)).log2();
    }
    Ok(mi.max(0.0))
}

/// Mean per-position mutual information between two collections of
/// equal-length bit sequences: MI is estimated independently at each bit
/// position across the collection and averaged.
pub fn mean_bitwise_mutual_information(
    xs: &[BitSequence],
    ys: &[BitSequence],
) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::MetricInput("empty sequence collection".into()));
    }
    let width = xs[0].len();
    let mut total = 0.0;
    for bit in 0..width {
        let xbits: Vec<u8> = xs.iter().map(|s| s.bit(bit)).collect();
        let ybits: Vec<u8> = ys.iter().map(|s| s.bit(bit)).collect();
        total += mutual_information(&xbits, &ybits)?;
    }
    Ok(total / width as f64)
}

/// Bit generation rates of a batch of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct BitRates {
    /// Raw extraction bits per second (no reconciliation).
    pub raw_bits_per_s: Option<f64>,
    /// Secret key bits per second after reconciliation, over successful
    /// pairings only.
    pub reconciled_bits_per_s: Option<f64>,
}

/// Average bit rates: bits generated per trial over the vibration duration.
///
/// `raw_trials` counts every completed extraction (the no-reconciliation
/// path used under denial-of-service); `reconciled_successes` counts trials
/// that ended with an agreed 12-bit key. Rates are absent when the
/// corresponding count is zero.
pub fn bit_rate(
    raw_trials: usize,
    raw_bits_per_trial: usize,
    reconciled_successes: usize,
    key_bits_per_trial: usize,
    duration_s: f64,
) -> BitRates {
    let rate = |count: usize, bits: usize| {
        (count > 0).then(|| bits as f64 / duration_s)
    };
    BitRates {
        raw_bits_per_s: rate(raw_trials, raw_bits_per_trial),
        reconciled_bits_per_s: rate(reconciled_successes, key_bits_per_trial),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bmr_basics() {
        let a = BitSequence::parse("101010").unwrap();
        let b = BitSequence::parse("010101").unwrap();
        assert_eq!(bit_mismatch_rate(&a, &a).unwrap(), 0.0);
        assert_eq!(bit_mismatch_rate(&a, &b).unwrap(), 1.0);
        let mut c = a.clone();
        c.flip(2);
        assert!((bit_mismatch_rate(&a, &c).unwrap() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn bmr_three_of_twentyfour() {
        let a = BitSequence::zeros(24);
        let mut b = a.clone();
        b.flip(0);
        b.flip(7);
        b.flip(23);
        assert!((bit_mismatch_rate(&a, &b).unwrap() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn bmr_is_a_metric_under_xor() {
        // Symmetry, identity, and the triangle inequality through a third
        // sequence (Hamming-distance structure survives the normalization).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let bits = |rng: &mut ChaCha8Rng| {
                BitSequence::from_bits((0..24).map(|_| rng.gen_range(0..2u8)).collect())
            };
            let a = bits(&mut rng);
            let b = bits(&mut rng);
            let c = bits(&mut rng);
            let ab = bit_mismatch_rate(&a, &b).unwrap();
            let ba = bit_mismatch_rate(&b, &a).unwrap();
            assert_eq!(ab, ba);
            assert_eq!(ab == 0.0, a == b);
            let ac = bit_mismatch_rate(&a, &c).unwrap();
            let cb = bit_mismatch_rate(&c, &b).unwrap();
            assert!(ab <= ac + cb + 1e-12);
        }
    }

    #[test]
    fn entropy_of_uniform_codes_is_two_bits() {
        let sequences: Vec<BitSequence> = (0..4)
            .map(|v| BitSequence::from_uint(v, 2))
            .collect();
        assert!((entropy_per_code(&sequences, 1).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_of_constant_code_is_zero() {
        let sequences: Vec<BitSequence> =
            (0..50).map(|_| BitSequence::parse("11").unwrap()).collect();
        assert_eq!(entropy_per_code(&sequences, 1).unwrap(), 0.0);
    }

    #[test]
    fn mi_of_identical_sequences_is_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<u8> = (0..5000).map(|_| rng.gen_range(0..4)).collect();
        let mi = mutual_information(&xs, &xs).unwrap();
        let mut counts = [0usize; 4];
        for &x in &xs {
            counts[x as usize] += 1;
        }
        let h = entropy_from_counts(counts, xs.len());
        assert!((mi - h).abs() < 1e-9);
    }

    #[test]
    fn mi_symmetry_and_nonnegativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let xs: Vec<u8> = (0..2000).map(|_| rng.gen_range(0..2)).collect();
        let ys: Vec<u8> = xs
            .iter()
            .map(|&x| if rng.gen::<f64>() < 0.3 { 1 - x } else { x })
            .collect();
        let a = mutual_information(&xs, &ys).unwrap();
        let b = mutual_information(&ys, &xs).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(a >= 0.0);
    }

    #[test]
    fn mi_of_independent_bits_sits_at_the_bias_floor() {
        // Plug-in bias for 2x2 tables is about 1/(2 n ln 2); at n = 10000
        // the estimate stays well under 0.01 bit.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let xs: Vec<u8> = (0..10_000).map(|_| rng.gen_range(0..2)).collect();
        let ys: Vec<u8> = (0..10_000).map(|_| rng.gen_range(0..2)).collect();
        let mi = mutual_information(&xs, &ys).unwrap();
        assert!(mi <= 0.01, "independent MI estimate {mi}");
    }

    #[test]
    fn mi_requires_minimum_samples() {
        let xs = vec![0u8; 50];
        assert!(mutual_information(&xs, &xs).is_err());
    }

    #[test]
    fn bit_rates_match_the_reported_arithmetic() {
        let rates = bit_rate(100, 24, 98, 12, 1.75);
        let raw = rates.raw_bits_per_s.unwrap();
        let rec = rates.reconciled_bits_per_s.unwrap();
        assert!((raw - 24.0 / 1.75).abs() < 1e-12);
        assert!((raw - 13.714285714285714).abs() < 1e-9);
        assert!((rec - 12.0 / 1.75).abs() < 1e-12);
        assert!((rec - 6.857142857142857).abs() < 1e-9);
    }

    #[test]
    fn bit_rates_absent_without_successes() {
        let rates = bit_rate(10, 24, 0, 12, 1.75);
        assert!(rates.raw_bits_per_s.is_some());
        assert!(rates.reconciled_bits_per_s.is_none());
    }
}
