//! Fixed-width bit vectors bound to an input ordering.
//!
//! The first bit is the first input of the ordering. Binary text keeps that
//! order left to right; hex text is big-endian, so the first input is the most
//! significant bit of the value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitsError {
    #[error("invalid binary digit {0:?}")]
    BadBinaryDigit(char),
    #[error("invalid hex digit {0:?}")]
    BadHexDigit(char),
    #[error("hex value {text:?} does not fit in {width} bits")]
    HexWidth { text: String, width: usize },
}

#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn new(bits: Vec<bool>) -> Self {
        Bits(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Bits(vec![false; len])
    }

    /// Low `len` bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64);
        Bits((0..len).map(|i| (value >> (len - 1 - i)) & 1 == 1).collect())
    }

    pub fn to_u64(&self) -> u64 {
        assert!(self.0.len() <= 64);
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<bool> {
        self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn complement(&self) -> Bits {
        Bits(self.0.iter().map(|b| !b).collect())
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn hamming_distance(&self, other: &Bits) -> usize {
        assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn to_binary(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn parse_binary(text: &str) -> Result<Bits, BitsError> {
        text.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitsError::BadBinaryDigit(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Bits)
    }

    /// Big-endian hex with `ceil(len / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.len().div_ceil(4).max(1);
        let pad = digits * 4 - self.len();
        let padded: Vec<bool> = std::iter::repeat_n(false, pad).chain(self.0.iter().copied()).collect();
        padded
            .chunks(4)
            .map(|nib| {
                let v = nib.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
                std::char::from_digit(v, 16).unwrap().to_ascii_uppercase()
            })
            .collect()
    }

    /// Parses big-endian hex into exactly `width` bits. The digit count must be
    /// `ceil(width / 4)` and the value must fit.
    pub fn parse_hex(text: &str, width: usize) -> Result<Bits, BitsError> {
        let digits = width.div_ceil(4).max(1);
        if text.len() != digits {
            return Err(BitsError::HexWidth { text: text.to_string(), width });
        }
        let mut all = Vec::with_capacity(digits * 4);
        for c in text.chars() {
            let v = c.to_digit(16).ok_or(BitsError::BadHexDigit(c))?;
            all.extend((0..4).rev().map(|s| (v >> s) & 1 == 1));
        }
        let pad = digits * 4 - width;
        if all[..pad].iter().any(|&b| b) {
            return Err(BitsError::HexWidth { text: text.to_string(), width });
        }
        Ok(Bits(all[pad..].to_vec()))
    }
}

impl From<Vec<bool>> for Bits {
    fn from(v: Vec<bool>) -> Self {
        Bits(v)
    }
}

impl FromStr for Bits {
    type Err = BitsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Bits::parse_binary(s)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_binary())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({})", self.to_binary())
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_binary())
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Bits::parse_binary(&s).map_err(serde::de::Error::custom)
    }
}
