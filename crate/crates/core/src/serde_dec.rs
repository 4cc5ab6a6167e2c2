//! Serde adapter storing big unsigned integers as canonical decimal strings.

use num_bigint::BigUint;
use serde::{de, Deserialize, Deserializer, Serializer};

/// Parses a canonical decimal string (no sign, no leading zeros).
pub fn parse_canonical(s: &str) -> Option<BigUint> {
    let well_formed =
        !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) && (s == "0" || !s.starts_with('0'));
    if well_formed {
        s.parse().ok()
    } else {
        None
    }
}

pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
    let s = String::deserialize(d)?;
    parse_canonical(&s).ok_or_else(|| de::Error::custom(format!("not a canonical decimal: {s:?}")))
}
