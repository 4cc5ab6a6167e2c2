//! Ciphertext container: header plus one signed masked integer per block.
//!
//! Parsing is strict so that any single-byte change to the serialized form
//! is either rejected outright or changes a value the decryptor checks.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_dec::parse_canonical;

pub const ENVELOPE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvelopeHeader {
    pub format_version: u32,
    pub recipe_id: String,
    pub key_id: String,
    pub chunk_len: u64,
    pub original_len: u64,
    /// SHA-256 of the plaintext.
    pub digest: [u8; 32],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedBlock {
    pub value: BigInt,
    pub plain_len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedEnvelope {
    pub header: EnvelopeHeader,
    pub blocks: Vec<MaskedBlock>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvelopeFile {
    format_version: u32,
    recipe_id: String,
    key_id: String,
    chunk_len: u64,
    original_len: u64,
    digest: String,
    blocks: Vec<BlockFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockFile {
    s: String,
    m: String,
    l: u64,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::EnvelopeInvalid(msg.into())
}

fn parse_digest(s: &str) -> Result<[u8; 32]> {
    if s.len() != 64 || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return Err(invalid("digest must be 64 lowercase hex digits"));
    }
    let mut out = [0u8; 32];
    hex::decode_to_slice(s, &mut out).map_err(|e| invalid(e.to_string()))?;
    Ok(out)
}

impl MaskedEnvelope {
    /// Checks the structural invariants shared by parsing and encryption.
    pub fn check(&self) -> Result<()> {
        let h = &self.header;
        if h.format_version != ENVELOPE_VERSION {
            return Err(invalid(format!(
                "unsupported format_version {}",
                h.format_version
            )));
        }
        if h.chunk_len == 0 {
            return Err(invalid("chunk_len must be positive"));
        }
        if (h.original_len == 0) != self.blocks.is_empty() {
            return Err(invalid("blocks must be present iff original_len > 0"));
        }
        let last = self.blocks.len().saturating_sub(1);
        let mut total = 0u64;
        for (i, b) in self.blocks.iter().enumerate() {
            let full = b.plain_len == h.chunk_len;
            let tail_ok = i == last && b.plain_len > 0 && b.plain_len <= h.chunk_len;
            if !full && !tail_ok {
                return Err(invalid(format!("block {i} has length {}", b.plain_len)));
            }
            total = total
                .checked_add(b.plain_len)
                .ok_or_else(|| invalid("length overflow"))?;
        }
        if total != h.original_len {
            return Err(invalid(format!(
                "block lengths sum to {total}, header says {}",
                h.original_len
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let file = EnvelopeFile {
            format_version: h.format_version,
            recipe_id: h.recipe_id.clone(),
            key_id: h.key_id.clone(),
            chunk_len: h.chunk_len,
            original_len: h.original_len,
            digest: hex::encode(h.digest),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockFile {
                    s: if b.value.sign() == Sign::Minus {
                        "-"
                    } else {
                        "+"
                    }
                    .to_owned(),
                    m: b.value.magnitude().to_string(),
                    l: b.plain_len,
                })
                .collect(),
        };
        serde_json::to_vec(&file).expect("serializable")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<MaskedEnvelope> {
        let file: EnvelopeFile = serde_json::from_slice(bytes)?;
        let blocks = file
            .blocks
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                let magnitude: BigUint = parse_canonical(&b.m)
                    .ok_or_else(|| invalid(format!("block {i}: bad magnitude")))?;
                let sign = match (b.s.as_str(), magnitude.is_zero()) {
                    ("+", _) => Sign::Plus,
                    ("-", false) => Sign::Minus,
                    _ => return Err(invalid(format!("block {i}: bad sign {:?}", b.s))),
                };
                Ok(MaskedBlock {
                    value: BigInt::from_biguint(sign, magnitude),
                    plain_len: b.l,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let env = MaskedEnvelope {
            header: EnvelopeHeader {
                format_version: file.format_version,
                recipe_id: file.recipe_id,
                key_id: file.key_id,
                chunk_len: file.chunk_len,
                original_len: file.original_len,
                digest: parse_digest(&file.digest)?,
            },
            blocks,
        };
        env.check()?;
        Ok(env)
    }
}
