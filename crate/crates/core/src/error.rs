use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("symbol {symbol} out of range for alphabet of size {alphabet_size}")]
    SymbolOutOfRange { symbol: u32, alphabet_size: usize },

    #[error("code stream is truncated")]
    TruncatedCode,

    #[error("all weights are zero")]
    ZeroWeights,

    #[error("invalid predictor spec: {0}")]
    InvalidSpec(String),

    #[error("unknown predictor {0:?}")]
    UnknownPredictor(String),

    #[error("predictor version mismatch: archive needs {expected:?}, available is {found:?}")]
    PredictorVersion { expected: String, found: String },

    #[error("predictor unavailable: {0}")]
    PredictorUnavailable(String),

    #[error("predictor misuse: {0}")]
    ProtocolMisuse(&'static str),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("corrupt archive: {0}")]
    Corrupt(String),

    #[error("not an archive (bad magic)")]
    BadMagic,

    #[error("unsupported archive format version {0}")]
    UnsupportedVersion(u16),

    #[error("archive body checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    BodyChecksum { stored: u32, computed: u32 },

    #[error("original file checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    OriginalChecksum { stored: u32, computed: u32 },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("handshake failed: {0}")]
    Handshake(String),

    #[error("predictor server error {code}: {message}")]
    Remote { code: u16, message: String },

    #[error("transport error: {0}")]
    Transport(#[from] io::Error),
}
