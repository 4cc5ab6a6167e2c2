//! The five-stage pipeline and its file-level encrypt/decrypt.
//!
//! Stage order is fixed:
//!
//! ```text
//! key stage -> radix -> codec -> reinterpret -> series mask
//! Integer      Integer  BitString  BitString     Integer      Integer
//! ```
//!
//! Each stage is an invertible [`Stage`]; decryption runs the inverses in
//! reverse order. Plaintext is cut into chunks small enough that every
//! packed chunk times the salt stays below the modulus.

mod envelope;
mod recipe;
mod store;

use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use sha2::{Digest, Sha256};

use crate::codec::{
    bits_to_symbols, decode_4b5b, encode_4b5b, line_decode, line_encode, symbols_to_bits,
    CodecSpec, SymbolString,
};
use crate::error::{Error, Result, StageName};
use crate::keystage::{
    pack_integer, tier1_decrypt, tier1_encrypt, unpack_integer, KeyMaterial, PackMode, Tier1Params,
};
use crate::numeric::to_unsigned;
use crate::radix::{digits_to_bits, int_to_digits, pad_to_multiple, BitString};
use crate::seriesmask::{mask_decode, mask_encode, SeriesSpec};

pub use envelope::{EnvelopeHeader, MaskedBlock, MaskedEnvelope, ENVELOPE_VERSION};
pub use recipe::{Recipe, RECIPE_VERSION};
pub use store::{KeyRing, Store};

/// A datum flowing between stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Integer(BigInt),
    Bits(BitString),
    Symbols(SymbolString),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Integer,
    BitString,
    SymbolString,
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Integer(_) => ValueKind::Integer,
            Value::Bits(_) => ValueKind::BitString,
            Value::Symbols(_) => ValueKind::SymbolString,
        }
    }

    fn into_uint(self, stage: StageName) -> Result<BigUint> {
        match self {
            Value::Integer(i) => to_unsigned(&i, &stage.to_string()),
            other => Err(kind_mismatch(stage, ValueKind::Integer, other.kind())),
        }
    }

    fn into_int(self, stage: StageName) -> Result<BigInt> {
        match self {
            Value::Integer(i) => Ok(i),
            other => Err(kind_mismatch(stage, ValueKind::Integer, other.kind())),
        }
    }

    fn into_bits(self, stage: StageName) -> Result<BitString> {
        match self {
            Value::Bits(b) => Ok(b),
            other => Err(kind_mismatch(stage, ValueKind::BitString, other.kind())),
        }
    }
}

fn kind_mismatch(stage: StageName, want: ValueKind, got: ValueKind) -> Error {
    Error::recipe(stage, format!("expected {want:?} input, got {got:?}"))
}

/// One invertible pipeline step.
pub trait Stage: Send + Sync {
    fn name(&self) -> StageName;
    fn input(&self) -> ValueKind;
    fn output(&self) -> ValueKind;
    fn forward(&self, v: Value) -> Result<Value>;
    fn inverse(&self, v: Value) -> Result<Value>;
}

struct KeyStage {
    params: Tier1Params,
    key: KeyMaterial,
}

impl Stage for KeyStage {
    fn name(&self) -> StageName {
        StageName::Tier1
    }
    fn input(&self) -> ValueKind {
        ValueKind::Integer
    }
    fn output(&self) -> ValueKind {
        ValueKind::Integer
    }
    fn forward(&self, v: Value) -> Result<Value> {
        let m = v.into_uint(self.name())?;
        Ok(Value::Integer(
            tier1_encrypt(&m, &self.key, &self.params)?.into(),
        ))
    }
    fn inverse(&self, v: Value) -> Result<Value> {
        let c = v.into_uint(self.name())?;
        Ok(Value::Integer(
            tier1_decrypt(&c, &self.key, &self.params)?.into(),
        ))
    }
}

/// Number conversion; any base is normalized to binary for the codec.
struct RadixStage {
    base: u32,
}

impl Stage for RadixStage {
    fn name(&self) -> StageName {
        StageName::Radix
    }
    fn input(&self) -> ValueKind {
        ValueKind::Integer
    }
    fn output(&self) -> ValueKind {
        ValueKind::BitString
    }
    fn forward(&self, v: Value) -> Result<Value> {
        let x = v.into_uint(self.name())?;
        Ok(Value::Bits(digits_to_bits(&int_to_digits(&x, self.base)?)))
    }
    fn inverse(&self, v: Value) -> Result<Value> {
        Ok(Value::Integer(v.into_bits(self.name())?.to_uint().into()))
    }
}

/// Block or line coding. Line codes are serialized two bits per symbol
/// behind a leading `1` marker bit, so the reinterpretation stage cannot
/// drop leading zero symbols.
struct CodecStage {
    spec: CodecSpec,
}

impl Stage for CodecStage {
    fn name(&self) -> StageName {
        StageName::Codec
    }
    fn input(&self) -> ValueKind {
        ValueKind::BitString
    }
    fn output(&self) -> ValueKind {
        ValueKind::BitString
    }
    fn forward(&self, v: Value) -> Result<Value> {
        let bits = v.into_bits(self.name())?;
        let out = match self.spec {
            CodecSpec::B4B5 => encode_4b5b(&pad_to_multiple(&bits, 4))?,
            spec => {
                let mut framed = BitString::from_bits(vec![true]);
                framed.extend_from(&symbols_to_bits(&line_encode(&bits, &spec)?));
                framed
            }
        };
        Ok(Value::Bits(out))
    }
    fn inverse(&self, v: Value) -> Result<Value> {
        let bits = v.into_bits(self.name())?;
        let out = match self.spec {
            CodecSpec::B4B5 => decode_4b5b(&bits)?,
            spec => match bits.bits().split_first() {
                Some((true, rest)) => {
                    let symbols = bits_to_symbols(&BitString::from_bits(rest.to_vec()))?;
                    line_decode(&symbols, &spec)?
                }
                _ => return Err(Error::InvalidPair("missing line-code marker bit".into())),
            },
        };
        Ok(Value::Bits(out))
    }
}

/// Reads coded bits back as one integer. The inverse restores the leading
/// zeros that reading drops by padding to `align` bits.
struct ReinterpretStage {
    align: usize,
}

impl Stage for ReinterpretStage {
    fn name(&self) -> StageName {
        StageName::Reinterpret
    }
    fn input(&self) -> ValueKind {
        ValueKind::BitString
    }
    fn output(&self) -> ValueKind {
        ValueKind::Integer
    }
    fn forward(&self, v: Value) -> Result<Value> {
        Ok(Value::Integer(v.into_bits(self.name())?.to_uint().into()))
    }
    fn inverse(&self, v: Value) -> Result<Value> {
        let x = v.into_uint(self.name())?;
        Ok(Value::Bits(pad_to_multiple(
            &BitString::from_uint(&x),
            self.align,
        )))
    }
}

struct MaskStage {
    spec: SeriesSpec,
}

impl Stage for MaskStage {
    fn name(&self) -> StageName {
        StageName::Series
    }
    fn input(&self) -> ValueKind {
        ValueKind::Integer
    }
    fn output(&self) -> ValueKind {
        ValueKind::Integer
    }
    fn forward(&self, v: Value) -> Result<Value> {
        let x = v.into_uint(self.name())?;
        Ok(Value::Integer(mask_encode(&x, &self.spec)?))
    }
    fn inverse(&self, v: Value) -> Result<Value> {
        let t = v.into_int(self.name())?;
        Ok(Value::Integer(mask_decode(&t, &self.spec)?.into()))
    }
}

/// One entry of a validated plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedStage {
    pub name: StageName,
    pub input: ValueKind,
    pub output: ValueKind,
}

/// Type-checks a recipe and returns its stage plan.
pub fn validate_recipe(r: &Recipe) -> Result<Vec<PlannedStage>> {
    use ValueKind::*;
    if r.version != RECIPE_VERSION {
        return Err(Error::recipe(
            StageName::Tier1,
            format!("unsupported version {}", r.version),
        ));
    }
    r.tier1
        .validate()
        .map_err(|e| Error::recipe(StageName::Tier1, e.to_string()))?;
    if r.tier1.pack_mode == PackMode::PaperVariable {
        return Err(Error::recipe(
            StageName::Tier1,
            "paper_variable packing is not uniquely decodable",
        ));
    }
    if r.key_id.is_empty() {
        return Err(Error::recipe(StageName::Tier1, "missing key_id"));
    }
    if !(2..=36).contains(&r.base) {
        return Err(Error::recipe(
            StageName::Radix,
            format!("base {} outside 2..=36", r.base),
        ));
    }
    if r.series.n_terms == 0 {
        return Err(Error::recipe(StageName::Series, "N must be >= 1"));
    }
    let plan = vec![
        PlannedStage {
            name: StageName::Tier1,
            input: Integer,
            output: Integer,
        },
        PlannedStage {
            name: StageName::Radix,
            input: Integer,
            output: BitString,
        },
        PlannedStage {
            name: StageName::Codec,
            input: BitString,
            output: BitString,
        },
        PlannedStage {
            name: StageName::Reinterpret,
            input: BitString,
            output: Integer,
        },
        PlannedStage {
            name: StageName::Series,
            input: Integer,
            output: Integer,
        },
    ];
    for pair in plan.windows(2) {
        if pair[0].output != pair[1].input {
            return Err(kind_mismatch(pair[1].name, pair[1].input, pair[0].output));
        }
    }
    Ok(plan)
}

/// Largest plaintext chunk whose packed value times the salt is below `n`.
pub fn chunk_len(params: &Tier1Params, n: &BigUint) -> Result<usize> {
    let max_packed = |len: usize| match params.pack_mode {
        PackMode::BigEndian => (BigUint::one() << (8 * len)) - 1u32,
        _ => pack_integer(&vec![255u8; len], params.pack_mode),
    };
    let fits = |len: usize| max_packed(len) * &params.salt < *n;
    if !fits(1) {
        return Err(Error::recipe(
            StageName::Tier1,
            "salt too large for the key modulus",
        ));
    }
    let mut len = 1;
    while fits(len + 1) {
        len += 1;
    }
    Ok(len)
}

/// Wall time spent in each stage, in pipeline order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub stages: [Duration; 5],
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.stages.iter().sum()
    }
}

/// A recipe bound to its key and ready to run.
pub struct Pipeline {
    recipe_id: String,
    key_id: String,
    pack: PackMode,
    chunk_len: usize,
    stages: Vec<Box<dyn Stage>>,
}

impl Pipeline {
    pub fn new(recipe: &Recipe, keys: &(impl KeyRing + ?Sized)) -> Result<Pipeline> {
        let plan = validate_recipe(recipe)?;
        let key = keys.get_key(&recipe.key_id)?;
        let chunk_len = chunk_len(&recipe.tier1, &key.n)?;
        let align = if recipe.codec.is_line_code() { 1 } else { 5 };
        let stages: Vec<Box<dyn Stage>> = vec![
            Box::new(KeyStage {
                params: recipe.tier1.clone(),
                key,
            }),
            Box::new(RadixStage { base: recipe.base }),
            Box::new(CodecStage { spec: recipe.codec }),
            Box::new(ReinterpretStage { align }),
            Box::new(MaskStage {
                spec: recipe.series,
            }),
        ];
        for (stage, planned) in stages.iter().zip(&plan) {
            debug_assert_eq!(stage.name(), planned.name);
            debug_assert_eq!(
                (stage.input(), stage.output()),
                (planned.input, planned.output)
            );
        }
        Ok(Pipeline {
            recipe_id: recipe.recipe_id.clone(),
            key_id: recipe.key_id.clone(),
            pack: recipe.tier1.pack_mode,
            chunk_len,
            stages,
        })
    }

    pub fn chunk_len(&self) -> usize {
        self.chunk_len
    }

    pub fn stages(&self) -> &[Box<dyn Stage>] {
        &self.stages
    }

    /// Runs one packed chunk forward through every stage.
    pub fn encrypt_block(&self, chunk: &[u8], timings: &mut StageTimings) -> Result<BigInt> {
        let mut v = Value::Integer(pack_integer(chunk, self.pack).into());
        for (i, stage) in self.stages.iter().enumerate() {
            let start = Instant::now();
            v = stage.forward(v)?;
            timings.stages[i] += start.elapsed();
        }
        v.into_int(StageName::Series)
    }

    pub fn decrypt_block(&self, value: &BigInt, len: usize) -> Result<Vec<u8>> {
        let mut v = Value::Integer(value.clone());
        for stage in self.stages.iter().rev() {
            v = stage.inverse(v)?;
        }
        unpack_integer(&v.into_uint(StageName::Tier1)?, len, self.pack)
    }

    pub fn encrypt(&self, data: &[u8]) -> Result<(MaskedEnvelope, StageTimings)> {
        let mut timings = StageTimings::default();
        let blocks = data
            .chunks(self.chunk_len)
            .enumerate()
            .map(|(i, chunk)| {
                Ok(MaskedBlock {
                    value: self
                        .encrypt_block(chunk, &mut timings)
                        .map_err(|e| e.in_block(i))?,
                    plain_len: chunk.len() as u64,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let env = MaskedEnvelope {
            header: EnvelopeHeader {
                format_version: ENVELOPE_VERSION,
                recipe_id: self.recipe_id.clone(),
                key_id: self.key_id.clone(),
                chunk_len: self.chunk_len as u64,
                original_len: data.len() as u64,
                digest: Sha256::digest(data).into(),
            },
            blocks,
        };
        debug_assert!(env.check().is_ok());
        Ok((env, timings))
    }

    pub fn decrypt(&self, env: &MaskedEnvelope) -> Result<Vec<u8>> {
        env.check()?;
        let h = &env.header;
        if h.recipe_id != self.recipe_id {
            return Err(Error::EnvelopeInvalid(format!(
                "envelope was made with recipe {:?}, not {:?}",
                h.recipe_id, self.recipe_id
            )));
        }
        if h.key_id != self.key_id {
            return Err(Error::EnvelopeInvalid(format!(
                "envelope was made with key {:?}, not {:?}",
                h.key_id, self.key_id
            )));
        }
        if h.chunk_len != self.chunk_len as u64 {
            return Err(Error::EnvelopeInvalid(format!(
                "chunk_len {} does not match recipe ({})",
                h.chunk_len, self.chunk_len
            )));
        }
        let mut out = Vec::with_capacity(h.original_len as usize);
        for (i, block) in env.blocks.iter().enumerate() {
            let bytes = self
                .decrypt_block(&block.value, block.plain_len as usize)
                .map_err(|e| e.in_block(i))?;
            out.extend_from_slice(&bytes);
        }
        let digest: [u8; 32] = Sha256::digest(&out).into();
        if digest != h.digest {
            return Err(Error::DigestMismatch(format!(
                "plaintext digest {} != header {}",
                hex::encode(digest),
                hex::encode(h.digest)
            )));
        }
        Ok(out)
    }
}

pub fn pipeline_encrypt(
    data: &[u8],
    recipe: &Recipe,
    keys: &(impl KeyRing + ?Sized),
) -> Result<MaskedEnvelope> {
    Ok(Pipeline::new(recipe, keys)?.encrypt(data)?.0)
}

pub fn pipeline_decrypt(
    env: &MaskedEnvelope,
    recipe: &Recipe,
    keys: &(impl KeyRing + ?Sized),
) -> Result<Vec<u8>> {
    Pipeline::new(recipe, keys)?.decrypt(env)
}
