use std::fmt;

/// Pipeline stage named in recipe validation failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageName {
    Tier1,
    Radix,
    Codec,
    Reinterpret,
    Series,
}

impl fmt::Display for StageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageName::Tier1 => "tier1",
            StageName::Radix => "radix",
            StageName::Codec => "codec",
            StageName::Reinterpret => "reinterpret",
            StageName::Series => "series",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("ERR_BAD_MODULUS: modulus must be at least 2")]
    BadModulus,
    #[error("ERR_NOT_COPRIME: {0}")]
    NotCoprime(String),
    #[error("ERR_NOT_PRIME: {0}")]
    NotPrime(String),
    #[error("ERR_BAD_KEY: {0}")]
    BadKey(String),
    #[error("ERR_BLOCK_TOO_LARGE: {0}")]
    BlockTooLarge(String),
    #[error("ERR_NOT_DIVISIBLE: {0}")]
    NotDivisible(String),
    #[error("ERR_BAD_BASE: base {0} outside 2..=36")]
    BadBase(u32),
    #[error("ERR_BAD_DIGIT: {0}")]
    BadDigit(String),
    #[error("ERR_UNALIGNED: length {len} is not a multiple of {unit}")]
    Unaligned { len: usize, unit: usize },
    #[error("ERR_INVALID_SYMBOL: {0}")]
    InvalidSymbol(String),
    #[error("ERR_BAD_SPEC: {0}")]
    BadSpec(String),
    #[error("ERR_INVALID_WAVEFORM: {0}")]
    InvalidWaveform(String),
    #[error("ERR_INVALID_PAIR: {0}")]
    InvalidPair(String),
    #[error("ERR_AMBIGUOUS_MASK: {0}")]
    AmbiguousMask(String),
    #[error("ERR_NO_PREIMAGE: {0}")]
    NoPreimage(String),
    #[error("ERR_RECIPE_INVALID({stage}): {reason}")]
    RecipeInvalid { stage: StageName, reason: String },
    #[error("ERR_ENVELOPE_INVALID: {0}")]
    EnvelopeInvalid(String),
    #[error("ERR_DIGEST_MISMATCH: {0}")]
    DigestMismatch(String),
    #[error("ERR_NOT_FOUND: {0}")]
    NotFound(String),
    #[error("ERR_DUPLICATE_ID: {0}")]
    DuplicateId(String),
    #[error("ERR_NAME_TOO_LONG: {0} bytes")]
    NameTooLong(usize),
    #[error("ERR_BAD_MAGIC")]
    BadMagic,
    #[error("ERR_BAD_VERSION: {0}")]
    BadVersion(u8),
    #[error("ERR_BAD_COMMAND: {0:#04x}")]
    BadCommand(u8),
    #[error("ERR_TRUNCATED: {0}")]
    Truncated(String),
    #[error("ERR_PAYLOAD_TOO_LARGE: {len} > {max}")]
    PayloadTooLarge { len: u64, max: u64 },
    #[error("ERR_REMOTE: {0}")]
    Remote(String),
    #[error("{source} (block {index})")]
    Block { index: usize, source: Box<Error> },
    #[error("ERR_IO: {0}")]
    Io(#[from] std::io::Error),
    #[error("ERR_PARSE: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Error {
    /// Stable error code name, e.g. `ERR_NOT_FOUND`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::BadModulus => "ERR_BAD_MODULUS",
            Error::NotCoprime(_) => "ERR_NOT_COPRIME",
            Error::NotPrime(_) => "ERR_NOT_PRIME",
            Error::BadKey(_) => "ERR_BAD_KEY",
            Error::BlockTooLarge(_) => "ERR_BLOCK_TOO_LARGE",
            Error::NotDivisible(_) => "ERR_NOT_DIVISIBLE",
            Error::BadBase(_) => "ERR_BAD_BASE",
            Error::BadDigit(_) => "ERR_BAD_DIGIT",
            Error::Unaligned { .. } => "ERR_UNALIGNED",
            Error::InvalidSymbol(_) => "ERR_INVALID_SYMBOL",
            Error::BadSpec(_) => "ERR_BAD_SPEC",
            Error::InvalidWaveform(_) => "ERR_INVALID_WAVEFORM",
            Error::InvalidPair(_) => "ERR_INVALID_PAIR",
            Error::AmbiguousMask(_) => "ERR_AMBIGUOUS_MASK",
            Error::NoPreimage(_) => "ERR_NO_PREIMAGE",
            Error::RecipeInvalid { .. } => "ERR_RECIPE_INVALID",
            Error::EnvelopeInvalid(_) => "ERR_ENVELOPE_INVALID",
            Error::DigestMismatch(_) => "ERR_DIGEST_MISMATCH",
            Error::NotFound(_) => "ERR_NOT_FOUND",
            Error::DuplicateId(_) => "ERR_DUPLICATE_ID",
            Error::NameTooLong(_) => "ERR_NAME_TOO_LONG",
            Error::BadMagic => "ERR_BAD_MAGIC",
            Error::BadVersion(_) => "ERR_BAD_VERSION",
            Error::BadCommand(_) => "ERR_BAD_COMMAND",
            Error::Truncated(_) => "ERR_TRUNCATED",
            Error::PayloadTooLarge { .. } => "ERR_PAYLOAD_TOO_LARGE",
            Error::Remote(_) => "ERR_REMOTE",
            Error::Block { source, .. } => source.code(),
            Error::Io(_) => "ERR_IO",
            Error::Parse(_) => "ERR_PARSE",
        }
    }

    pub(crate) fn in_block(self, index: usize) -> Error {
        Error::Block {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn recipe(stage: StageName, reason: impl Into<String>) -> Error {
        Error::RecipeInvalid {
            stage,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
