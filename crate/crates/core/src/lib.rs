//! Lossless compression driven by autoregressive next-symbol predictors.
//!
//! Data is turned into a flat byte sequence ([`media`]), split into chunks,
//! and each chunk is range coded ([`coder`]) against the distributions a
//! fresh predictor session ([`predictor`]) emits one symbol at a time. The
//! coded chunks, predictor identity and reconstruction metadata are bound
//! together in a self-checking archive ([`container`]). Predictors can live
//! in-process or behind a framed wire protocol ([`protocol`]).

pub mod bench;
pub mod coder;
pub mod container;
mod error;
pub mod media;
pub mod pipeline;
pub mod predictor;
pub mod protocol;

pub use coder::{decode_stream, encode_stream, ideal_code_length, QuantizedDistribution, TOTAL_FREQ};
pub use container::{read_archive, write_archive, Archive};
pub use error::{Error, Result};
pub use media::{ChunkPlan, MediaKind, MediaMeta, MediaPayload};
pub use pipeline::{compress, decompress, CompressOptions, CompressStats};
pub use predictor::{begin_session, quantize_distribution, Predictor, PredictorKind, PredictorSpec};
