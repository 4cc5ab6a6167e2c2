//! Layered file encryption: an RSA key stage, radix conversion, block or line
//! coding, bit reinterpretation and exact series masking, composed into an
//! invertible pipeline with a recipe store, an envelope format and a TCP
//! transfer protocol.
//!
//! The construction is textbook RSA without padding wrapped in reversible,
//! keyless transforms. See the README's threat model before relying on it.

pub mod codec;
pub mod error;
pub mod keystage;
pub mod numeric;
pub mod pipeline;
pub mod radix;
pub mod report;
pub mod seriesmask;
pub mod transfer;

mod serde_dec;

pub use error::{Error, Result, StageName};
pub use num_bigint::{BigInt, BigUint};
pub use num_rational::BigRational;
