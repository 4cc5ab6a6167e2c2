//! 4B/5B block coding and invertible line codes.
//!
//! Conventions:
//! - NRZ-L: 1 = `+`, 0 = `-`. NRZ-I: the level inverts on each 1.
//! - Manchester: 1 = low→high `[-, +]`, 0 = high→low `[+, -]`.
//! - Differential Manchester: 0 = transition at cell start, 1 = none; always
//!   a mid-cell transition.
//! - AMI: 1 = pulse of alternating polarity, 0 = `0`. Pseudoternary is the
//!   dual (0 pulses, 1 silent).
//! - B8ZS: AMI where each run of eight zeros becomes `000VB0VB`, V having the
//!   polarity of the previous pulse and B the opposite.
//!
//! For the mark-alternating schemes `initial_polarity` is the polarity of the
//! first pulse; for NRZ-I and differential Manchester `initial_level` is the
//! line level before the first bit.
//!
//! Decoding is strict: anything the encoder could not have produced is an
//! error.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radix::BitString;

/// The 16-entry 4B/5B table, indexed by nibble value.
pub const TABLE_4B5B: [u8; 16] = [
    0b11110, 0b01001, 0b10100, 0b10101, 0b01010, 0b01011, 0b01110, 0b01111, //
    0b10010, 0b10011, 0b10110, 0b10111, 0b11010, 0b11011, 0b11100, 0b11101,
];

const INVALID: u8 = 0xFF;

const fn inverse_table() -> [u8; 32] {
    let mut inv = [INVALID; 32];
    let mut i = 0;
    while i < 16 {
        inv[TABLE_4B5B[i] as usize] = i as u8;
        i += 1;
    }
    inv
}

const TABLE_5B4B: [u8; 32] = inverse_table();

fn read_bits(bits: &[bool]) -> u8 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u8)
}

fn push_bits(out: &mut Vec<bool>, value: u8, width: u32) {
    out.extend((0..width).rev().map(|i| (value >> i) & 1 == 1));
}

pub fn encode_4b5b(b: &BitString) -> Result<BitString> {
    if !b.len().is_multiple_of(4) {
        return Err(Error::Unaligned {
            len: b.len(),
            unit: 4,
        });
    }
    let mut out = Vec::with_capacity(b.len() / 4 * 5);
    for nibble in b.bits().chunks_exact(4) {
        push_bits(&mut out, TABLE_4B5B[read_bits(nibble) as usize], 5);
    }
    Ok(BitString::from_bits(out))
}

pub fn decode_4b5b(b: &BitString) -> Result<BitString> {
    if !b.len().is_multiple_of(5) {
        return Err(Error::Unaligned {
            len: b.len(),
            unit: 5,
        });
    }
    let mut out = Vec::with_capacity(b.len() / 5 * 4);
    for (i, group) in b.bits().chunks_exact(5).enumerate() {
        let sym = read_bits(group);
        match TABLE_5B4B[sym as usize] {
            INVALID => {
                return Err(Error::InvalidSymbol(format!(
                    "group {i} = {sym:05b} is not a 4B/5B code"
                )))
            }
            nibble => push_bits(&mut out, nibble, 4),
        }
    }
    Ok(BitString::from_bits(out))
}

/// A line level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Plus,
    Zero,
    Minus,
}

impl Symbol {
    fn flip(self) -> Symbol {
        match self {
            Symbol::Plus => Symbol::Minus,
            Symbol::Minus => Symbol::Plus,
            Symbol::Zero => Symbol::Zero,
        }
    }

    fn as_char(self) -> char {
        match self {
            Symbol::Plus => '+',
            Symbol::Zero => '0',
            Symbol::Minus => '-',
        }
    }
}

/// A two-valued level used for codec parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl From<Polarity> for Symbol {
    fn from(p: Polarity) -> Symbol {
        match p {
            Polarity::Plus => Symbol::Plus,
            Polarity::Minus => Symbol::Minus,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolString(pub Vec<Symbol>);

impl SymbolString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }
}

impl fmt::Display for SymbolString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|s| write!(f, "{}", s.as_char()))
    }
}

impl FromStr for SymbolString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(Symbol::Plus),
                '0' => Ok(Symbol::Zero),
                '-' | '−' => Ok(Symbol::Minus),
                other => Err(Error::InvalidSymbol(format!(
                    "{other:?} is not a line symbol"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(SymbolString)
    }
}

/// Codec selection with its scheme-specific parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCodec", into = "RawCodec")]
pub enum CodecSpec {
    B4B5,
    NrzL,
    NrzI { initial_level: Polarity },
    Manchester,
    DiffManchester { initial_level: Polarity },
    Ami { initial_polarity: Polarity },
    Pseudoternary { initial_polarity: Polarity },
    B8zs { initial_polarity: Polarity },
}

impl CodecSpec {
    pub fn scheme_name(&self) -> &'static str {
        match self {
            CodecSpec::B4B5 => "B4B5",
            CodecSpec::NrzL => "NRZ_L",
            CodecSpec::NrzI { .. } => "NRZ_I",
            CodecSpec::Manchester => "MANCHESTER",
            CodecSpec::DiffManchester { .. } => "DIFF_MANCHESTER",
            CodecSpec::Ami { .. } => "AMI",
            CodecSpec::Pseudoternary { .. } => "PSEUDOTERNARY",
            CodecSpec::B8zs { .. } => "B8ZS",
        }
    }

    /// True for codecs that emit line symbols rather than bits.
    pub fn is_line_code(&self) -> bool {
        !matches!(self, CodecSpec::B4B5)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCodec {
    scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_level: Option<Polarity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_polarity: Option<Polarity>,
}

impl TryFrom<RawCodec> for CodecSpec {
    type Error = Error;

    fn try_from(raw: RawCodec) -> Result<CodecSpec> {
        let bad = |what: &str| Error::BadSpec(format!("{}: {what}", raw.scheme));
        let spec = match (raw.scheme.as_str(), raw.initial_level, raw.initial_polarity) {
            ("B4B5", None, None) => CodecSpec::B4B5,
            ("NRZ_L", None, None) => CodecSpec::NrzL,
            ("MANCHESTER", None, None) => CodecSpec::Manchester,
            ("NRZ_I", Some(initial_level), None) => CodecSpec::NrzI { initial_level },
            ("DIFF_MANCHESTER", Some(initial_level), None) => {
                CodecSpec::DiffManchester { initial_level }
            }
            ("AMI", None, Some(initial_polarity)) => CodecSpec::Ami { initial_polarity },
            ("PSEUDOTERNARY", None, Some(initial_polarity)) => {
                CodecSpec::Pseudoternary { initial_polarity }
            }
            ("B8ZS", None, Some(initial_polarity)) => CodecSpec::B8zs { initial_polarity },
            ("B4B5" | "NRZ_L" | "MANCHESTER", _, _) => return Err(bad("takes no parameters")),
            ("NRZ_I" | "DIFF_MANCHESTER", _, _) => return Err(bad("requires only initial_level")),
            ("AMI" | "PSEUDOTERNARY" | "B8ZS", _, _) => {
                return Err(bad("requires only initial_polarity"))
            }
            _ => return Err(bad("unknown scheme")),
        };
        Ok(spec)
    }
}

impl From<CodecSpec> for RawCodec {
    fn from(spec: CodecSpec) -> RawCodec {
        let (initial_level, initial_polarity) = match spec {
            CodecSpec::NrzI { initial_level } | CodecSpec::DiffManchester { initial_level } => {
                (Some(initial_level), None)
            }
            CodecSpec::Ami { initial_polarity }
            | CodecSpec::Pseudoternary { initial_polarity }
            | CodecSpec::B8zs { initial_polarity } => (None, Some(initial_polarity)),
            _ => (None, None),
        };
        RawCodec {
            scheme: spec.scheme_name().to_owned(),
            initial_level,
            initial_polarity,
        }
    }
}

fn level(bit: bool) -> Symbol {
    if bit {
        Symbol::Plus
    } else {
        Symbol::Minus
    }
}

/// Emits alternating-polarity pulses for the bits where `mark(bit)` holds.
fn alternate_marks(bits: &[bool], first: Polarity, mark: impl Fn(bool) -> bool) -> Vec<Symbol> {
    let mut next = Symbol::from(first);
    bits.iter()
        .map(|&b| {
            if mark(b) {
                let s = next;
                next = next.flip();
                s
            } else {
                Symbol::Zero
            }
        })
        .collect()
}

fn b8zs_encode(bits: &[bool], first: Polarity) -> Vec<Symbol> {
    let mut out = Vec::with_capacity(bits.len());
    // Polarity of the most recent pulse, real or virtual.
    let mut last = Symbol::from(first).flip();
    let mut zeros = 0;
    for &b in bits {
        if b {
            out.extend(std::iter::repeat_n(Symbol::Zero, zeros));
            zeros = 0;
            last = last.flip();
            out.push(last);
        } else {
            zeros += 1;
            if zeros == 8 {
                let v = last;
                let b = last.flip();
                out.extend([
                    Symbol::Zero,
                    Symbol::Zero,
                    Symbol::Zero,
                    v,
                    b,
                    Symbol::Zero,
                    b,
                    v,
                ]);
                zeros = 0;
            }
        }
    }
    out.extend(std::iter::repeat_n(Symbol::Zero, zeros));
    out
}

pub fn line_encode(b: &BitString, spec: &CodecSpec) -> Result<SymbolString> {
    let bits = b.bits();
    let symbols = match *spec {
        CodecSpec::B4B5 => {
            return Err(Error::BadSpec(
                "B4B5 is a block code, not a line code".into(),
            ))
        }
        CodecSpec::NrzL => bits.iter().map(|&b| level(b)).collect(),
        CodecSpec::NrzI { initial_level } => {
            let mut cur = Symbol::from(initial_level);
            bits.iter()
                .map(|&b| {
                    if b {
                        cur = cur.flip();
                    }
                    cur
                })
                .collect()
        }
        CodecSpec::Manchester => bits
            .iter()
            .flat_map(|&b| {
                if b {
                    [Symbol::Minus, Symbol::Plus]
                } else {
                    [Symbol::Plus, Symbol::Minus]
                }
            })
            .collect(),
        CodecSpec::DiffManchester { initial_level } => {
            let mut prev = Symbol::from(initial_level);
            bits.iter()
                .flat_map(|&b| {
                    let first = if b { prev } else { prev.flip() };
                    prev = first.flip();
                    [first, prev]
                })
                .collect()
        }
        CodecSpec::Ami { initial_polarity } => alternate_marks(bits, initial_polarity, |b| b),
        CodecSpec::Pseudoternary { initial_polarity } => {
            alternate_marks(bits, initial_polarity, |b| !b)
        }
        CodecSpec::B8zs { initial_polarity } => b8zs_encode(bits, initial_polarity),
    };
    Ok(SymbolString(symbols))
}

fn waveform(msg: String) -> Error {
    Error::InvalidWaveform(msg)
}

fn two_level(s: Symbol, i: usize) -> Result<bool> {
    match s {
        Symbol::Plus => Ok(true),
        Symbol::Minus => Ok(false),
        Symbol::Zero => Err(waveform(format!("zero level at {i} in a two-level code"))),
    }
}

/// Inverse of [`alternate_marks`]; `mark_bit` is the bit value a pulse stands for.
fn decode_marks(symbols: &[Symbol], first: Polarity, mark_bit: bool) -> Result<Vec<bool>> {
    let mut expected = Symbol::from(first);
    symbols
        .iter()
        .enumerate()
        .map(|(i, &s)| match s {
            Symbol::Zero => Ok(!mark_bit),
            pulse if pulse == expected => {
                expected = expected.flip();
                Ok(mark_bit)
            }
            _ => Err(waveform(format!("polarity violation at {i}"))),
        })
        .collect()
}

fn b8zs_decode(symbols: &[Symbol], first: Polarity) -> Result<Vec<bool>> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut last = Symbol::from(first).flip();
    let mut zero_run = 0;
    let mut i = 0;
    while i < symbols.len() {
        // The encoder only substitutes at the start of a zero run.
        if zero_run == 0 && symbols.len() - i >= 8 {
            let v = last;
            let b = last.flip();
            let pattern = [
                Symbol::Zero,
                Symbol::Zero,
                Symbol::Zero,
                v,
                b,
                Symbol::Zero,
                b,
                v,
            ];
            if symbols[i..i + 8] == pattern {
                out.extend([false; 8]);
                zero_run = 0;
                i += 8;
                continue;
            }
        }
        match symbols[i] {
            Symbol::Zero => {
                zero_run += 1;
                if zero_run == 8 {
                    return Err(waveform(format!(
                        "unsubstituted run of eight zeros ending at {i}"
                    )));
                }
                out.push(false);
            }
            pulse if pulse == last.flip() => {
                last = pulse;
                zero_run = 0;
                out.push(true);
            }
            _ => {
                return Err(waveform(format!(
                    "polarity violation at {i} outside a B8ZS pattern"
                )))
            }
        }
        i += 1;
    }
    Ok(out)
}

pub fn line_decode(s: &SymbolString, spec: &CodecSpec) -> Result<BitString> {
    let symbols = s.symbols();
    let bits = match *spec {
        CodecSpec::B4B5 => {
            return Err(Error::BadSpec(
                "B4B5 is a block code, not a line code".into(),
            ))
        }
        CodecSpec::NrzL => symbols
            .iter()
            .enumerate()
            .map(|(i, &s)| two_level(s, i))
            .collect::<Result<Vec<_>>>()?,
        CodecSpec::NrzI { initial_level } => {
            let mut prev = Symbol::from(initial_level);
            symbols
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    two_level(s, i)?;
                    let bit = s != prev;
                    prev = s;
                    Ok(bit)
                })
                .collect::<Result<Vec<_>>>()?
        }
        CodecSpec::Manchester => {
            if !symbols.len().is_multiple_of(2) {
                return Err(waveform("odd number of half-cells".into()));
            }
            symbols
                .chunks_exact(2)
                .enumerate()
                .map(|(i, cell)| match cell {
                    [Symbol::Minus, Symbol::Plus] => Ok(true),
                    [Symbol::Plus, Symbol::Minus] => Ok(false),
                    _ => Err(waveform(format!("cell {i} has no mid-cell transition"))),
                })
                .collect::<Result<Vec<_>>>()?
        }
        CodecSpec::DiffManchester { initial_level } => {
            if !symbols.len().is_multiple_of(2) {
                return Err(waveform("odd number of half-cells".into()));
            }
            let mut prev = Symbol::from(initial_level);
            symbols
                .chunks_exact(2)
                .enumerate()
                .map(|(i, cell)| {
                    let (a, b) = (two_level(cell[0], 2 * i)?, two_level(cell[1], 2 * i + 1)?);
                    if a == b {
                        return Err(waveform(format!("cell {i} has no mid-cell transition")));
                    }
                    let bit = cell[0] == prev;
                    prev = cell[1];
                    Ok(bit)
                })
                .collect::<Result<Vec<_>>>()?
        }
        CodecSpec::Ami { initial_polarity } => decode_marks(symbols, initial_polarity, true)?,
        CodecSpec::Pseudoternary { initial_polarity } => {
            decode_marks(symbols, initial_polarity, false)?
        }
        CodecSpec::B8zs { initial_polarity } => b8zs_decode(symbols, initial_polarity)?,
    };
    Ok(BitString::from_bits(bits))
}

/// Fixed two-bit serialization: `+` → 01, `0` → 00, `-` → 10.
pub fn symbols_to_bits(s: &SymbolString) -> BitString {
    let mut out = Vec::with_capacity(2 * s.len());
    for &sym in s.symbols() {
        out.extend_from_slice(match sym {
            Symbol::Plus => &[false, true],
            Symbol::Zero => &[false, false],
            Symbol::Minus => &[true, false],
        });
    }
    BitString::from_bits(out)
}

pub fn bits_to_symbols(b: &BitString) -> Result<SymbolString> {
    if !b.len().is_multiple_of(2) {
        return Err(Error::InvalidPair(format!("odd length {}", b.len())));
    }
    b.bits()
        .chunks_exact(2)
        .enumerate()
        .map(|(i, pair)| match pair {
            [false, true] => Ok(Symbol::Plus),
            [false, false] => Ok(Symbol::Zero),
            [true, false] => Ok(Symbol::Minus),
            _ => Err(Error::InvalidPair(format!("pair {i} is 11"))),
        })
        .collect::<Result<Vec<_>>>()
        .map(SymbolString)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn sy(s: &str) -> SymbolString {
        s.parse().unwrap()
    }

    const PLUS: Polarity = Polarity::Plus;
    const MINUS: Polarity = Polarity::Minus;

    fn all_line_specs() -> Vec<CodecSpec> {
        let mut v = vec![CodecSpec::NrzL, CodecSpec::Manchester];
        for p in [PLUS, MINUS] {
            v.push(CodecSpec::NrzI { initial_level: p });
            v.push(CodecSpec::DiffManchester { initial_level: p });
            v.push(CodecSpec::Ami {
                initial_polarity: p,
            });
            v.push(CodecSpec::Pseudoternary {
                initial_polarity: p,
            });
            v.push(CodecSpec::B8zs {
                initial_polarity: p,
            });
        }
        v
    }

    #[test]
    fn table_rows() {
        assert_eq!(encode_4b5b(&bs("0000")).unwrap(), bs("11110"));
        assert_eq!(encode_4b5b(&bs("1111")).unwrap(), bs("11101"));
        assert_eq!(encode_4b5b(&BitString::new()).unwrap(), BitString::new());
        assert_eq!(decode_4b5b(&bs("11110")).unwrap(), bs("0000"));
        assert_eq!(
            decode_4b5b(&bs("00000")).unwrap_err().code(),
            "ERR_INVALID_SYMBOL"
        );
        assert_eq!(encode_4b5b(&bs("101")).unwrap_err().code(), "ERR_UNALIGNED");
        assert_eq!(
            decode_4b5b(&bs("1111")).unwrap_err().code(),
            "ERR_UNALIGNED"
        );
    }

    #[test]
    fn all_12_bit_strings_roundtrip() {
        for v in 0u32..(1 << 12) {
            let b = BitString::from_bits((0..12).rev().map(|i| (v >> i) & 1 == 1).collect());
            let e = encode_4b5b(&b).unwrap();
            assert_eq!(e.len(), 15);
            assert_eq!(decode_4b5b(&e).unwrap(), b);
        }
    }

    #[test]
    fn zero_runs_across_symbol_pairs_are_short() {
        for &a in &TABLE_4B5B {
            for &b in &TABLE_4B5B {
                let pair = ((a as u16) << 5) | b as u16;
                let run = (0..10)
                    .map(|i| (pair >> (9 - i)) & 1)
                    .fold((0, 0), |(cur, best), bit| {
                        let cur = if bit == 0 { cur + 1 } else { 0 };
                        (cur, best.max(cur))
                    })
                    .1;
                assert!(run <= 3, "{a:05b}{b:05b}");
            }
        }
    }

    #[test]
    fn line_examples() {
        let ami = CodecSpec::Ami {
            initial_polarity: PLUS,
        };
        assert_eq!(line_encode(&bs("1011"), &ami).unwrap(), sy("+0-+"));
        assert_eq!(line_decode(&sy("+0-+"), &ami).unwrap(), bs("1011"));
        assert_eq!(
            line_encode(&bs("10"), &CodecSpec::Manchester).unwrap(),
            sy("-++-")
        );
        let nrzi = CodecSpec::NrzI {
            initial_level: MINUS,
        };
        assert_eq!(line_encode(&bs("101"), &nrzi).unwrap(), sy("++-"));
        assert_eq!(line_encode(&bs("10"), &CodecSpec::NrzL).unwrap(), sy("+-"));
        let pt = CodecSpec::Pseudoternary {
            initial_polarity: PLUS,
        };
        assert_eq!(line_encode(&bs("0100"), &pt).unwrap(), sy("+0-+"));
        let dm = CodecSpec::DiffManchester {
            initial_level: PLUS,
        };
        // 0: transition at start (+ → -), then mid-cell; 1: no start transition.
        assert_eq!(line_encode(&bs("01"), &dm).unwrap(), sy("-++-"));
    }

    #[test]
    fn invalid_waveforms() {
        let err = line_decode(&sy("++"), &CodecSpec::Manchester).unwrap_err();
        assert_eq!(err.code(), "ERR_INVALID_WAVEFORM");
        let ami = CodecSpec::Ami {
            initial_polarity: PLUS,
        };
        assert!(line_decode(&sy("++"), &ami).is_err());
        assert!(line_decode(&sy("-"), &ami).is_err());
        assert!(line_decode(&sy("+0"), &CodecSpec::NrzL).is_err());
        assert!(line_decode(&sy("+-+"), &CodecSpec::Manchester).is_err());
        let b8zs = CodecSpec::B8zs {
            initial_polarity: PLUS,
        };
        assert!(line_decode(&sy("00000000"), &b8zs).is_err());
        assert!(line_decode(&sy("0000-+0+-"), &b8zs).is_err());
        assert!(line_encode(&bs("1"), &CodecSpec::B4B5).is_err());
    }

    #[test]
    fn b8zs_substitution() {
        let spec = CodecSpec::B8zs {
            initial_polarity: PLUS,
        };
        // First pulse +, then eight zeros: V = +, B = -.
        let enc = line_encode(&bs("100000000"), &spec).unwrap();
        assert_eq!(enc, sy("+000+-0-+"));
        assert_eq!(line_decode(&enc, &spec).unwrap(), bs("100000000"));
        // After the pattern the next mark opposes the pattern's final pulse.
        let enc = line_encode(&bs("1000000001"), &spec).unwrap();
        assert_eq!(enc, sy("+000+-0-+-"));
        // Leading zeros: the virtual previous pulse is opposite initial polarity.
        let enc = line_encode(&bs("000000001"), &spec).unwrap();
        assert_eq!(enc, sy("000-+0+-+"));
        assert_eq!(line_decode(&enc, &spec).unwrap(), bs("000000001"));
        let enc = line_encode(&bs("0000000001"), &spec).unwrap();
        assert_eq!(enc, sy("000-+0+-0+"));
        let enc = line_encode(&bs(&"0".repeat(17)), &spec).unwrap();
        assert_eq!(line_decode(&enc, &spec).unwrap(), bs(&"0".repeat(17)));
    }

    #[test]
    fn symbol_serialization() {
        assert_eq!(symbols_to_bits(&sy("+0-")), bs("010010"));
        assert_eq!(symbols_to_bits(&SymbolString::default()), BitString::new());
        assert_eq!(
            bits_to_symbols(&bs("11")).unwrap_err().code(),
            "ERR_INVALID_PAIR"
        );
        assert_eq!(
            bits_to_symbols(&bs("010")).unwrap_err().code(),
            "ERR_INVALID_PAIR"
        );
        assert_eq!(bits_to_symbols(&bs("010010")).unwrap(), sy("+0-"));
    }

    #[test]
    fn spec_json() {
        let spec: CodecSpec =
            serde_json::from_str(r#"{"scheme":"AMI","initial_polarity":"+"}"#).unwrap();
        assert_eq!(
            spec,
            CodecSpec::Ami {
                initial_polarity: PLUS
            }
        );
        assert_eq!(
            serde_json::to_string(&CodecSpec::B4B5).unwrap(),
            r#"{"scheme":"B4B5"}"#
        );
        for bad in [
            r#"{"scheme":"RZ"}"#,
            r#"{"scheme":"AMI"}"#,
            r#"{"scheme":"B4B5","initial_level":"+"}"#,
            r#"{"scheme":"NRZ_I","initial_polarity":"+"}"#,
        ] {
            assert!(serde_json::from_str::<CodecSpec>(bad).is_err(), "{bad}");
        }
        for spec in all_line_specs() {
            let s = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<CodecSpec>(&s).unwrap(), spec);
        }
    }

    fn bits() -> impl Strategy<Value = BitString> {
        proptest::collection::vec(prop_oneof![3 => Just(false), 1 => Just(true)], 0..200)
            .prop_map(BitString::from_bits)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn line_roundtrip(b in bits()) {
            for spec in all_line_specs() {
                let enc = line_encode(&b, &spec).unwrap();
                prop_assert_eq!(line_decode(&enc, &spec).unwrap(), b.clone());
                prop_assert_eq!(bits_to_symbols(&symbols_to_bits(&enc)).unwrap(), enc);
            }
        }

        #[test]
        fn manchester_always_transitions(b in bits()) {
            let enc = line_encode(&b, &CodecSpec::Manchester).unwrap();
            prop_assert_eq!(enc.len(), 2 * b.len());
            for cell in enc.symbols().chunks(2) {
                prop_assert_ne!(cell[0], cell[1]);
            }
        }

        #[test]
        fn block_roundtrip(nibbles in proptest::collection::vec(0u8..16, 0..64)) {
            let mut raw = Vec::new();
            for n in &nibbles {
                push_bits(&mut raw, *n, 4);
            }
            let b = BitString::from_bits(raw);
            let e = encode_4b5b(&b).unwrap();
            prop_assert_eq!(e.len(), b.len() / 4 * 5);
            prop_assert_eq!(decode_4b5b(&e).unwrap(), b);
        }
    }
}
