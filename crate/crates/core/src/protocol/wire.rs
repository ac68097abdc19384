//! Frame layout: `u32` little-endian payload length, `u8` opcode, payload.

use std::io::{self, Read, Write};

use crate::coder::{QuantizedDistribution, TOTAL_FREQ};
use crate::error::{Error, Result};

pub const PROTOCOL_VERSION: u16 = 1;
/// Largest accepted payload (a DIST for a 65536-symbol alphabet is 256 KiB).
pub const MAX_PAYLOAD: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Opcode {
    Hello = 0x01,
    Ready = 0x02,
    BeginChunk = 0x03,
    Predict = 0x04,
    Dist = 0x05,
    Observe = 0x06,
    EndChunk = 0x07,
    Bye = 0x08,
    Err = 0x7F,
}

impl Opcode {
    pub const ALL: [Opcode; 9] = [
        Opcode::Hello,
        Opcode::Ready,
        Opcode::BeginChunk,
        Opcode::Predict,
        Opcode::Dist,
        Opcode::Observe,
        Opcode::EndChunk,
        Opcode::Bye,
        Opcode::Err,
    ];

    pub fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|op| *op as u8 == v)
    }
}

/// `ERR` codes.
pub mod err_code {
    pub const UNSUPPORTED_VERSION: u16 = 1;
    pub const ILLEGAL_TRANSITION: u16 = 2;
    pub const MALFORMED: u16 = 3;
    pub const UNSUPPORTED_MODEL: u16 = 4;
    pub const INTERNAL: u16 = 5;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Hello {
        version: u16,
        alphabet_size: u32,
        model: String,
    },
    Ready {
        version_tag: String,
    },
    BeginChunk,
    Predict,
    /// Raw frequencies; validated by [`validate_dist`] on receipt.
    Dist(Vec<u32>),
    Observe(u32),
    EndChunk,
    Bye,
    Err {
        code: u16,
        message: String,
    },
}

impl Message {
    pub fn opcode(&self) -> Opcode {
        match self {
            Message::Hello { .. } => Opcode::Hello,
            Message::Ready { .. } => Opcode::Ready,
            Message::BeginChunk => Opcode::BeginChunk,
            Message::Predict => Opcode::Predict,
            Message::Dist(_) => Opcode::Dist,
            Message::Observe(_) => Opcode::Observe,
            Message::EndChunk => Opcode::EndChunk,
            Message::Bye => Opcode::Bye,
            Message::Err { .. } => Opcode::Err,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        match self {
            Message::Hello {
                version,
                alphabet_size,
                model,
            } => {
                payload.extend_from_slice(&version.to_le_bytes());
                payload.extend_from_slice(&alphabet_size.to_le_bytes());
                payload.extend_from_slice(model.as_bytes());
            }
            Message::Ready { version_tag } => payload.extend_from_slice(version_tag.as_bytes()),
            Message::Dist(freqs) => {
                for f in freqs {
                    payload.extend_from_slice(&f.to_le_bytes());
                }
            }
            Message::Observe(s) => payload.extend_from_slice(&s.to_le_bytes()),
            Message::Err { code, message } => {
                payload.extend_from_slice(&code.to_le_bytes());
                payload.extend_from_slice(message.as_bytes());
            }
            Message::BeginChunk | Message::Predict | Message::EndChunk | Message::Bye => {}
        }
        let mut frame = Vec::with_capacity(5 + payload.len());
        frame.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        frame.push(self.opcode() as u8);
        frame.extend_from_slice(&payload);
        frame
    }

    pub fn decode(opcode: u8, payload: &[u8]) -> Result<Self> {
        let op = Opcode::from_u8(opcode)
            .ok_or_else(|| Error::Protocol(format!("unknown opcode {opcode:#04x}")))?;
        let exact = |n: usize| {
            if payload.len() == n {
                Ok(())
            } else {
                Err(Error::Protocol(format!(
                    "{op:?} payload is {} bytes, expected {n}",
                    payload.len()
                )))
            }
        };
        let text = |b: &[u8]| {
            String::from_utf8(b.to_vec())
                .map_err(|_| Error::Protocol(format!("{op:?} text is not UTF-8")))
        };
        Ok(match op {
            Opcode::Hello => {
                if payload.len() < 6 {
                    return Err(Error::Protocol("HELLO payload too short".into()));
                }
                Message::Hello {
                    version: u16::from_le_bytes([payload[0], payload[1]]),
                    alphabet_size: u32::from_le_bytes(payload[2..6].try_into().unwrap()),
                    model: text(&payload[6..])?,
                }
            }
            Opcode::Ready => Message::Ready {
                version_tag: text(payload)?,
            },
            Opcode::BeginChunk => {
                exact(0)?;
                Message::BeginChunk
            }
            Opcode::Predict => {
                exact(0)?;
                Message::Predict
            }
            Opcode::Dist => {
                if payload.len() % 4 != 0 {
                    return Err(Error::Protocol("DIST payload not a multiple of 4".into()));
                }
                Message::Dist(
                    payload
                        .chunks_exact(4)
                        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                )
            }
            Opcode::Observe => {
                exact(4)?;
                Message::Observe(u32::from_le_bytes(payload.try_into().unwrap()))
            }
            Opcode::EndChunk => {
                exact(0)?;
                Message::EndChunk
            }
            Opcode::Bye => {
                exact(0)?;
                Message::Bye
            }
            Opcode::Err => {
                if payload.len() < 2 {
                    return Err(Error::Protocol("ERR payload too short".into()));
                }
                Message::Err {
                    code: u16::from_le_bytes([payload[0], payload[1]]),
                    message: String::from_utf8_lossy(&payload[2..]).into_owned(),
                }
            }
        })
    }
}

pub fn write_message<W: Write + ?Sized>(w: &mut W, msg: &Message) -> io::Result<()> {
    w.write_all(&msg.encode())?;
    w.flush()
}

/// Reads one frame. `Ok(None)` on a clean end of stream before any byte of
/// the frame; I/O errors pass through as transport errors.
pub fn read_frame<R: Read + ?Sized>(r: &mut R) -> Result<Option<(u8, Vec<u8>)>> {
    let mut head = [0u8; 5];
    let mut got = 0;
    while got < head.len() {
        match r.read(&mut head[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(Error::Protocol("connection closed mid-frame".into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(head[..4].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(Error::Protocol(format!("frame of {len} bytes exceeds limit")));
    }
    let mut payload = vec![0; len];
    r.read_exact(&mut payload).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Protocol("connection closed mid-frame".into()),
        _ => e.into(),
    })?;
    Ok(Some((head[4], payload)))
}

pub fn read_message<R: Read + ?Sized>(r: &mut R) -> Result<Option<Message>> {
    match read_frame(r)? {
        Some((op, payload)) => Message::decode(op, &payload).map(Some),
        None => Ok(None),
    }
}

/// Parses a DIST payload of `4 * alphabet_size` bytes and checks the
/// distribution invariants. Never renormalizes.
pub fn validate_dist(payload: &[u8], alphabet_size: usize) -> Result<QuantizedDistribution> {
    if payload.len() != 4 * alphabet_size {
        return Err(Error::Protocol(format!(
            "DIST carries {} bytes, expected {} for {alphabet_size} symbols",
            payload.len(),
            4 * alphabet_size
        )));
    }
    let freqs: Vec<u32> = payload
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    check_freqs(freqs)
}

pub(crate) fn check_freqs(freqs: Vec<u32>) -> Result<QuantizedDistribution> {
    if let Some(i) = freqs.iter().position(|&f| f == 0) {
        return Err(Error::Protocol(format!("DIST rejected: zero frequency for symbol {i}")));
    }
    let sum: u64 = freqs.iter().map(|&f| u64::from(f)).sum();
    if sum != u64::from(TOTAL_FREQ) {
        return Err(Error::Protocol(format!(
            "DIST rejected: frequencies sum to {sum}, not {TOTAL_FREQ}"
        )));
    }
    QuantizedDistribution::new(freqs).map_err(|e| Error::Protocol(format!("DIST rejected: {e}")))
}
