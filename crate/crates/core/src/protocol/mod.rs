//! Framed request/response protocol for out-of-process predictors.
//!
//! Every frame is a 4-byte little-endian payload length, a 1-byte opcode
//! and the payload:
//!
//! | opcode | name        | direction | payload                                   |
//! |--------|-------------|-----------|-------------------------------------------|
//! | 0x01   | HELLO       | c → s     | u16 version, u32 alphabet size, model (UTF-8) |
//! | 0x02   | READY       | s → c     | version tag (UTF-8)                       |
//! | 0x03   | BEGIN_CHUNK | c → s     | empty                                     |
//! | 0x04   | PREDICT     | c → s     | empty                                     |
//! | 0x05   | DIST        | s → c     | alphabet size × u32 frequency             |
//! | 0x06   | OBSERVE     | c → s     | u32 symbol                                |
//! | 0x07   | END_CHUNK   | c → s     | empty                                     |
//! | 0x08   | BYE         | c → s     | empty                                     |
//! | 0x7F   | ERR         | s → c     | u16 code, message (UTF-8)                 |
//!
//! Frequencies are quantized by the server; the client validates them
//! (positive, summing to 65536) and never renormalizes. Within a chunk the
//! client strictly alternates PREDICT, DIST, OBSERVE.

mod client;
mod server;
pub mod wire;

pub use client::{connect, connect_with_timeout, ChildTransport, Duplex, Endpoint, PredictorClient, Transport, DEFAULT_TIMEOUT};
pub use server::{FixtureServer, ServeOutcome, ServerState};
pub use wire::{validate_dist, Message, Opcode, PROTOCOL_VERSION};
