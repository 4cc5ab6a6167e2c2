//! Timing report for one keygen plus one full encode.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::keystage::generate_keypair;
use crate::pipeline::{KeyRing, Pipeline, Recipe};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchReport {
    pub file_bytes: u64,
    /// Whitespace-separated tokens.
    pub word_count: u64,
    pub keygen_ms: f64,
    pub tier1_ms: f64,
    pub radix_ms: f64,
    pub codec_ms: f64,
    pub reinterpret_ms: f64,
    pub mask_ms: f64,
    /// Wall time of the whole encode, including chunking and digest.
    pub encode_ms: f64,
    /// `keygen_ms + encode_ms`.
    pub total_ms: f64,
    pub key_bits: u64,
    pub blocks: u64,
    pub machine: String,
}

pub fn word_count(data: &[u8]) -> u64 {
    data.split(u8::is_ascii_whitespace)
        .filter(|w| !w.is_empty())
        .count() as u64
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn machine_note() -> String {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{}-{}, threads={threads}",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

/// Generates a throwaway key the size of the recipe's key, then encodes
/// `data` with the real one. No judgement is made about the numbers.
pub fn run_bench(
    data: &[u8],
    recipe: &Recipe,
    keys: &(impl KeyRing + ?Sized),
) -> Result<BenchReport> {
    let key = keys.get_key(&recipe.key_id)?;
    let seed: [u8; 32] = rand::random();
    let started = Instant::now();
    generate_keypair("bench", key.bits.div_ceil(2), &seed)?;
    let keygen = started.elapsed();

    let pipeline = Pipeline::new(recipe, keys)?;
    let started = Instant::now();
    let (env, timings) = pipeline.encrypt(data)?;
    let encode = started.elapsed();

    let [tier1, radix, codec, reinterpret, mask] = timings.stages;
    Ok(BenchReport {
        file_bytes: data.len() as u64,
        word_count: word_count(data),
        keygen_ms: ms(keygen),
        tier1_ms: ms(tier1),
        radix_ms: ms(radix),
        codec_ms: ms(codec),
        reinterpret_ms: ms(reinterpret),
        mask_ms: ms(mask),
        encode_ms: ms(encode),
        total_ms: ms(keygen + encode),
        key_bits: key.bits,
        blocks: env.blocks.len() as u64,
        machine: machine_note(),
    })
}
