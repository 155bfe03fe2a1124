//! The perfect binary (23,12) Golay code.
//!
//! Systematic encoding via the generator polynomial and O(1) decoding via a
//! syndrome table covering all 2048 correctable error patterns (weight 0..=3).
//! The code is perfect: every 23-bit word is within Hamming distance 3 of
//! exactly one codeword, so decoding is a total function.

use crate::bits::BitSequence;
use crate::error::{Error, Result};

/// Codeword length in bits.
pub const CODEWORD_BITS: usize = 23;
/// Message length in bits.
pub const MESSAGE_BITS: usize = 12;
/// Guaranteed error-correction radius.
pub const CORRECTION_RADIUS: usize = 3;

/// Generator polynomial x^11 + x^9 + x^7 + x^6 + x^5 + x + 1.
const GENERATOR: u32 = 0b1010_1110_0011;
const PARITY_BITS: usize = CODEWORD_BITS - MESSAGE_BITS; // 11
const WORD_MASK: u32 = (1 << CODEWORD_BITS) - 1;

/// Remainder of `poly` (degree < 23) modulo the generator polynomial.
fn poly_mod(mut poly: u32) -> u32 {
    for shift in (0..=(CODEWORD_BITS - PARITY_BITS - 1)).rev() {
        if poly & (1 << (shift + PARITY_BITS)) != 0 {
            poly ^= GENERATOR << shift;
        }
    }
    poly
}

/// Codec tables are built once; all operations afterwards are read-only.
pub struct GolayCodec {
    /// Parity bits for each of the 4096 messages.
    parity: Vec<u16>,
    /// Coset leader (error pattern of weight <= 3) for each 11-bit syndrome.
    coset_leader: Vec<u32>,
}

impl Default for GolayCodec {
    fn default() -> Self {
        Self::new()
    }
}

impl GolayCodec {
    pub fn new() -> Self {
        let parity = (0..1u32 << MESSAGE_BITS)
            .map(|msg| poly_mod(msg << PARITY_BITS) as u16)
            .collect();

        // Enumerate every error pattern of weight 0..=3 over 23 positions.
        // For a perfect code these fill all 2048 syndromes bijectively.
        let mut coset_leader = vec![u32::MAX; 1 << PARITY_BITS];
        let mut place = |pattern: u32| {
            let syn = poly_mod(pattern) as usize;
            assert_eq!(
                coset_leader[syn],
                u32::MAX,
                "syndrome collision while building the Golay table"
            );
            coset_leader[syn] = pattern;
        };
        place(0);
        for i in 0..CODEWORD_BITS {
            place(1 << i);
            for j in (i + 1)..CODEWORD_BITS {
                place((1 << i) | (1 << j));
                for k in (j + 1)..CODEWORD_BITS {
                    place((1 << i) | (1 << j) | (1 << k));
                }
            }
        }
        assert!(
            coset_leader.iter().all(|&e| e != u32::MAX),
            "Golay syndrome table incomplete"
        );

        Self {
            parity,
            coset_leader,
        }
    }

    /// Systematic codeword for a 12-bit message: message in the high 12 bits,
    /// parity in the low 11.
    pub fn encode_word(&self, message: u16) -> u32 {
        let message = message & 0xFFF;
        ((message as u32) << PARITY_BITS) | self.parity[message as usize] as u32
    }

    /// Message of the unique codeword within Hamming distance 3 of `word`.
    pub fn decode_word(&self, word: u32) -> u16 {
        let word = word & WORD_MASK;
        let error = self.coset_leader[poly_mod(word) as usize];
        (((word ^ error) >> PARITY_BITS) & 0xFFF) as u16
    }

    /// Nearest codeword to `word` (the one `decode_word` reports).
    pub fn correct_word(&self, word: u32) -> u32 {
        let word = word & WORD_MASK;
        word ^ self.coset_leader[poly_mod(word) as usize]
    }

    pub fn encode(&self, message: &BitSequence) -> Result<BitSequence> {
        if message.len() != MESSAGE_BITS {
            return Err(Error::WrongLength {
                expected: MESSAGE_BITS,
                actual: message.len(),
            });
        }
        Ok(BitSequence::from_uint(
            self.encode_word(message.to_uint() as u16),
            CODEWORD_BITS,
        ))
    }

    pub fn decode(&self, word: &BitSequence) -> Result<BitSequence> {
        if word.len() != CODEWORD_BITS {
            return Err(Error::WrongLength {
                expected: CODEWORD_BITS,
                actual: word.len(),
            });
        }
        Ok(BitSequence::from_uint(
            self.decode_word(word.to_uint()) as u32,
            MESSAGE_BITS,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_message_gives_zero_codeword() {
        let codec = GolayCodec::new();
        assert_eq!(codec.encode_word(0), 0);
    }

    #[test]
    fn encoding_is_linear() {
        let codec = GolayCodec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let a: u16 = rng.gen_range(0..4096);
            let b: u16 = rng.gen_range(0..4096);
            assert_eq!(
                codec.encode_word(a) ^ codec.encode_word(b),
                codec.encode_word(a ^ b)
            );
        }
    }

    #[test]
    fn weight_enumerator_matches_known_distribution() {
        // Enumerate all 4096 codewords and histogram Hamming weights.
        // The (23,12) Golay weight enumerator:
        //   A_0=1, A_7=253, A_8=506, A_11=1288, A_12=1288, A_15=506,
        //   A_16=253, A_23=1, all others zero.
        let codec = GolayCodec::new();
        let mut histogram = [0u32; 24];
        for msg in 0..4096u16 {
            histogram[codec.encode_word(msg).count_ones() as usize] += 1;
        }
        let mut expected = [0u32; 24];
        expected[0] = 1;
        expected[7] = 253;
        expected[8] = 506;
        expected[11] = 1288;
        expected[12] = 1288;
        expected[15] = 506;
        expected[16] = 253;
        expected[23] = 1;
        assert_eq!(histogram, expected);
    }

    #[test]
    fn round_trip_all_messages() {
        let codec = GolayCodec::new();
        for msg in 0..4096u16 {
            assert_eq!(codec.decode_word(codec.encode_word(msg)), msg);
        }
    }

    #[test]
    fn corrects_up_to_three_flips() {
        let codec = GolayCodec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let msg: u16 = rng.gen_range(0..4096);
            let cw = codec.encode_word(msg);
            for i in 0..23 {
                assert_eq!(codec.decode_word(cw ^ (1 << i)), msg);
                for j in (i + 1)..23 {
                    assert_eq!(codec.decode_word(cw ^ (1 << i) ^ (1 << j)), msg);
                }
            }
            // Triple flips sampled; the acceptance suite runs them exhaustively.
            for _ in 0..200 {
                let mut e = 0u32;
                while e.count_ones() < 3 {
                    e |= 1 << rng.gen_range(0..23);
                }
                assert_eq!(codec.decode_word(cw ^ e), msg);
            }
        }
    }

    #[test]
    fn four_flips_decode_to_nearest_codeword() {
        // With 4 errors the decoder lands on some codeword within distance 3
        // of the corrupted word (perfect covering), generally not the original.
        let codec = GolayCodec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let msg: u16 = rng.gen_range(0..4096);
            let cw = codec.encode_word(msg);
            let mut e = 0u32;
            while e.count_ones() < 4 {
                e |= 1 << rng.gen_range(0..23);
            }
            let corrupted = cw ^ e;
            let decoded = codec.decode_word(corrupted);
            let recoded = codec.encode_word(decoded);
            let dist = (recoded ^ corrupted).count_ones();
            assert!(dist <= 3, "decoded codeword at distance {dist}");
            assert_ne!(decoded, msg, "4 flips happened to decode correctly");
            // Brute-force nearest-codeword check.
            let min_dist = (0..4096u16)
                .map(|m| (codec.encode_word(m) ^ corrupted).count_ones())
                .min()
                .unwrap();
            assert_eq!(dist, min_dist);
        }
    }

    #[test]
    fn bit_sequence_interface_checks_lengths() {
        let codec = GolayCodec::new();
        let short = BitSequence::zeros(11);
        assert!(codec.encode(&short).is_err());
        let msg = BitSequence::parse("101100011010").unwrap();
        let cw = codec.encode(&msg).unwrap();
        assert_eq!(cw.len(), 23);
        assert_eq!(codec.decode(&cw).unwrap(), msg);
        assert!(codec.decode(&msg).is_err());
    }
}
