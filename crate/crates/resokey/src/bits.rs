//! Ordered bit sequences with explicit length.
//!
//! Raw extraction codes, reconciliation deltas, and final secret keys are all
//! short bit strings that get XORed, compared, and serialized. Bits are stored
//! one per byte (0 or 1) since sequences never exceed a few dozen bits.

use std::fmt;

use crate::error::{Error, Result};

/// An ordered sequence of bits. Index 0 is the most significant bit when the
/// sequence is packed into bytes or interpreted as an integer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitSequence {
    bits: Vec<u8>,
}

impl BitSequence {
    pub fn from_bits(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![0; len] }
    }

    /// Parse an ASCII string of '0'/'1' characters.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => bits.push(0),
                '1' => bits.push(1),
                _ => {
                    return Err(Error::BitParse {
                        position: i,
                        found: c,
                    })
                }
            }
        }
        Ok(Self { bits })
    }

    /// The low `len` bits of `value`, most significant first.
    pub fn from_uint(value: u32, len: usize) -> Self {
        assert!(len <= 32);
        let bits = (0..len)
            .map(|i| ((value >> (len - 1 - i)) & 1) as u8)
            .collect();
        Self { bits }
    }

    /// Interpret the sequence as an unsigned integer, bit 0 most significant.
    pub fn to_uint(&self) -> u32 {
        assert!(self.len() <= 32);
        self.bits.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, index: usize) -> u8 {
        self.bits[index]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.bits.iter().copied()
    }

    pub fn flip(&mut self, index: usize) {
        self.bits[index] ^= 1;
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            bits: self.bits[range].to_vec(),
        }
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        Self { bits }
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(Self { bits })
    }

    pub fn hamming_distance(&self, other: &Self) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Pack into bytes, most significant bit first; the final byte is
    /// zero-padded in its low bits when the length is not a multiple of 8.
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            out[i / 8] |= b << (7 - (i % 8));
        }
        out
    }

    /// Inverse of [`to_packed_bytes`](Self::to_packed_bytes) for a known bit length.
    pub fn from_packed_bytes(bytes: &[u8], bit_len: usize) -> Result<Self> {
        if bytes.len() != bit_len.div_ceil(8) {
            return Err(Error::LengthMismatch {
                left: bytes.len() * 8,
                right: bit_len,
            });
        }
        let bits = (0..bit_len)
            .map(|i| (bytes[i / 8] >> (7 - (i % 8))) & 1)
            .collect();
        Ok(Self { bits })
    }
}

impl fmt::Display for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", b)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let s = "01101001";
        let seq = BitSequence::parse(s).unwrap();
        assert_eq!(seq.len(), 8);
        assert_eq!(seq.to_string(), s);
    }

    #[test]
    fn parse_rejects_non_binary() {
        let err = BitSequence::parse("0102").unwrap_err();
        match err {
            Error::BitParse { position, found } => {
                assert_eq!(position, 3);
                assert_eq!(found, '2');
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn uint_round_trip_msb_first() {
        let seq = BitSequence::from_uint(0b1011, 4);
        assert_eq!(seq.to_string(), "1011");
        assert_eq!(seq.to_uint(), 0b1011);
        // Leading zeros preserved by explicit length.
        let seq = BitSequence::from_uint(0b1011, 6);
        assert_eq!(seq.to_string(), "001011");
    }

    #[test]
    fn xor_requires_equal_lengths() {
        let a = BitSequence::parse("101").unwrap();
        let b = BitSequence::parse("10").unwrap();
        assert!(a.xor(&b).is_err());
    }

    #[test]
    fn packed_bytes_msb_first() {
        let seq = BitSequence::parse("10110000101").unwrap(); // 11 bits
        let bytes = seq.to_packed_bytes();
        assert_eq!(bytes, vec![0b1011_0000, 0b1010_0000]);
        let back = BitSequence::from_packed_bytes(&bytes, 11).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn hamming_and_weight() {
        let a = BitSequence::parse("110010").unwrap();
        let b = BitSequence::parse("010011").unwrap();
        assert_eq!(a.hamming_distance(&b).unwrap(), 2);
        assert_eq!(a.weight(), 3);
        assert_eq!(a.xor(&b).unwrap().weight(), 2);
    }
}
