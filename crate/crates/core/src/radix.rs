//! Integer <-> digit-string conversion and explicit-length bit strings.
//!
//! Digits are written most-significant first throughout.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};

/// An ordered bit sequence whose length is significant (leading zeros kept).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        BitString::default()
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    /// Binary expansion of `x` with no leading zeros ("0" for zero).
    pub fn from_uint(x: &BigUint) -> Self {
        if x.is_zero() {
            return BitString { bits: vec![false] };
        }
        let n = x.bits();
        BitString {
            bits: (0..n).rev().map(|i| x.bit(i)).collect(),
        }
    }

    /// Value of the bits read as an unsigned binary numeral.
    pub fn to_uint(&self) -> BigUint {
        let mut out = BigUint::zero();
        let n = self.bits.len() as u64;
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                out.set_bit(n - 1 - i as u64, true);
            }
        }
        out
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::BadDigit(format!("{other:?} is not a bit"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString::from_bits)
    }
}

/// Digits over `[0-9A-Z]` in a given base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitString {
    digits: String,
    base: u32,
}

impl DigitString {
    /// Validates `digits` against `base`; lowercase letters are accepted and
    /// canonicalized to uppercase.
    pub fn new(digits: &str, base: u32) -> Result<Self> {
        check_base(base)?;
        if digits.is_empty() {
            return Err(Error::BadDigit("empty digit string".into()));
        }
        for c in digits.chars() {
            match c.to_digit(36) {
                Some(v) if v < base => {}
                _ => return Err(Error::BadDigit(format!("{c:?} is not a base-{base} digit"))),
            }
        }
        Ok(DigitString {
            digits: digits.to_ascii_uppercase(),
            base,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.digits
    }

    pub fn base(&self) -> u32 {
        self.base
    }
}

impl fmt::Display for DigitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.digits)
    }
}

fn check_base(base: u32) -> Result<()> {
    if (2..=36).contains(&base) {
        Ok(())
    } else {
        Err(Error::BadBase(base))
    }
}

pub fn int_to_digits(x: &BigUint, base: u32) -> Result<DigitString> {
    check_base(base)?;
    Ok(DigitString {
        digits: x.to_str_radix(base).to_ascii_uppercase(),
        base,
    })
}

pub fn digits_to_int(s: &DigitString) -> BigUint {
    BigUint::parse_bytes(s.digits.as_bytes(), s.base).expect("DigitString is validated")
}

/// Left-pads with zeros to the next multiple of `k`.
///
/// # Panics
/// If `k == 0`.
pub fn pad_to_multiple(b: &BitString, k: usize) -> BitString {
    assert!(k >= 1, "pad unit must be positive");
    let pad = (k - b.len() % k) % k;
    let mut bits = vec![false; pad];
    bits.extend_from_slice(b.bits());
    BitString { bits }
}

/// A base-`base` digit string re-expressed as bits, via its value.
pub fn digits_to_bits(s: &DigitString) -> BitString {
    BitString::from_uint(&digits_to_int(s))
}
