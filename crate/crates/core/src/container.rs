//! The `LMCZ` archive format.
//!
//! All integers are little-endian, fields appear in this order:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "LMCZ"
//! 4       2     format version (1)
//! 6       1     media: 0 text, 1 image, 2 audio, 3 video
//! 7       2     predictor spec length P
//! 9       P     predictor spec, UTF-8, e.g. "orderK:k=2:S=256:v1"
//! .       4     metadata length L
//! .       L     metadata: u64 symbol count, then media fields
//! .       4     chunk count N
//! .       8N    chunk table: (u32 symbol count, u32 stored length) per chunk
//! .       ...   chunk blobs, concatenated in table order
//! .       4     side data length B
//! .       B     side data (audio LSBs, packed MSB-first)
//! .       4     CRC-32 of the original file
//! .       4     CRC-32 of every preceding archive byte
//! ```
//!
//! A chunk whose stored length equals its symbol count holds the raw
//! symbols; the encoder only keeps coded output that is strictly shorter.

use std::io::{Cursor, Read};

use byteorder::{ReadBytesExt, WriteBytesExt, LE};

use crate::error::{Error, Result};
use crate::media::{MediaKind, MediaMeta, MediaPayload};
use crate::predictor::PredictorSpec;

pub const MAGIC: &[u8; 4] = b"LMCZ";
pub const FORMAT_VERSION: u16 = 1;
const TRAILER_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub symbols: u32,
    pub data: Vec<u8>,
}

impl Chunk {
    pub fn is_stored(&self) -> bool {
        self.data.len() == self.symbols as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Archive {
    pub predictor: PredictorSpec,
    pub meta: MediaMeta,
    pub main_len: u64,
    pub chunks: Vec<Chunk>,
    pub side_bits: Vec<u8>,
    pub original_crc: u32,
}

impl Archive {
    pub fn media(&self) -> MediaKind {
        self.meta.kind()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let spec = self.predictor.to_string();
        let mut meta = Vec::new();
        meta.write_u64::<LE>(self.main_len).unwrap();
        meta.extend_from_slice(&self.meta.encode());

        let blobs: usize = self.chunks.iter().map(|c| c.data.len()).sum();
        let mut out = Vec::with_capacity(64 + spec.len() + meta.len() + 8 * self.chunks.len() + blobs);
        out.extend_from_slice(MAGIC);
        out.write_u16::<LE>(FORMAT_VERSION).unwrap();
        out.push(self.media() as u8);
        out.write_u16::<LE>(spec.len() as u16).unwrap();
        out.extend_from_slice(spec.as_bytes());
        out.write_u32::<LE>(meta.len() as u32).unwrap();
        out.extend_from_slice(&meta);
        out.write_u32::<LE>(self.chunks.len() as u32).unwrap();
        for c in &self.chunks {
            out.write_u32::<LE>(c.symbols).unwrap();
            out.write_u32::<LE>(c.data.len() as u32).unwrap();
        }
        for c in &self.chunks {
            out.extend_from_slice(&c.data);
        }
        out.write_u32::<LE>(self.side_bits.len() as u32).unwrap();
        out.extend_from_slice(&self.side_bits);
        out.write_u32::<LE>(self.original_crc).unwrap();
        let body_crc = crc32fast::hash(&out);
        out.write_u32::<LE>(body_crc).unwrap();
        out
    }

    /// Checks magic, version and body checksum before parsing anything
    /// else, so truncation and bit flips surface as checksum errors.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() >= 4 && &bytes[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() >= 6 {
            let version = u16::from_le_bytes([bytes[4], bytes[5]]);
            if version != FORMAT_VERSION {
                return Err(Error::UnsupportedVersion(version));
            }
        }
        if bytes.len() < 4 + 2 + 1 + 2 + 4 + 4 + 4 + TRAILER_LEN {
            return Err(Error::BodyChecksum {
                stored: 0,
                computed: crc32fast::hash(bytes),
            });
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(crc.try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(Error::BodyChecksum { stored, computed });
        }
        Self::parse_body(&body[6..]).map_err(|e| match e {
            Error::Transport(_) => Error::Corrupt("archive structure overruns its length".into()),
            e => e,
        })
    }

    fn parse_body(body: &[u8]) -> Result<Self> {
        let mut r = Cursor::new(body);
        let media_byte = r.read_u8()?;
        let media = MediaKind::from_u8(media_byte)
            .ok_or_else(|| Error::Corrupt(format!("unknown media code {media_byte}")))?;
        let spec_len = usize::from(r.read_u16::<LE>()?);
        let spec_bytes = take(&mut r, spec_len)?;
        let spec_text = String::from_utf8_lossy(&spec_bytes).into_owned();
        let predictor: PredictorSpec = spec_text.parse()?;

        let meta_len = r.read_u32::<LE>()? as usize;
        let meta_bytes = take(&mut r, meta_len)?;
        if meta_bytes.len() < 8 {
            return Err(Error::Corrupt("metadata too short".into()));
        }
        let main_len = u64::from_le_bytes(meta_bytes[..8].try_into().unwrap());
        let meta = MediaMeta::decode(media, &meta_bytes[8..])?;

        let n = r.read_u32::<LE>()? as usize;
        if n.saturating_mul(8) > remaining(&r) {
            return Err(Error::Corrupt("chunk table overruns archive".into()));
        }
        let mut table = Vec::with_capacity(n);
        for _ in 0..n {
            table.push((r.read_u32::<LE>()?, r.read_u32::<LE>()? as usize));
        }
        let mut chunks = Vec::with_capacity(n);
        for (symbols, len) in table {
            if len > symbols as usize || (symbols > 0 && len == 0) {
                return Err(Error::Corrupt(format!(
                    "chunk of {symbols} symbols with {len} stored bytes"
                )));
            }
            chunks.push(Chunk {
                symbols,
                data: take(&mut r, len)?,
            });
        }
        let side_len = r.read_u32::<LE>()? as usize;
        let side_bits = take(&mut r, side_len)?;
        let original_crc = r.read_u32::<LE>()?;
        if remaining(&r) != 0 {
            return Err(Error::Corrupt("trailing bytes after archive fields".into()));
        }

        let total: u64 = chunks.iter().map(|c| u64::from(c.symbols)).sum();
        if total != main_len {
            return Err(Error::Corrupt(format!(
                "chunks hold {total} symbols, metadata says {main_len}"
            )));
        }
        if let Some(expected) = meta.main_len() {
            if expected as u64 != main_len {
                return Err(Error::Corrupt(format!(
                    "media needs {expected} symbols, metadata says {main_len}"
                )));
            }
        }
        Ok(Self {
            predictor,
            meta,
            main_len,
            chunks,
            side_bits,
            original_crc,
        })
    }

    /// Payload with the metadata and side data filled in and `main_bytes`
    /// left empty for the decoder.
    pub fn payload_skeleton(&self) -> MediaPayload {
        MediaPayload {
            meta: self.meta.clone(),
            main_bytes: Vec::new(),
            side_bits: self.side_bits.clone(),
        }
    }
}

fn remaining(r: &Cursor<&[u8]>) -> usize {
    r.get_ref().len() - r.position() as usize
}

fn take(r: &mut Cursor<&[u8]>, n: usize) -> Result<Vec<u8>> {
    if n > remaining(r) {
        return Err(Error::Corrupt("field overruns archive".into()));
    }
    let mut v = vec![0; n];
    r.read_exact(&mut v)?;
    Ok(v)
}

/// Serializes `payload` with its coded chunks. `chunks` must follow the
/// payload's chunk plan, in order.
pub fn write_archive(payload: &MediaPayload, spec: &PredictorSpec, chunks: Vec<Chunk>, original_crc: u32) -> Vec<u8> {
    debug_assert_eq!(
        chunks.iter().map(|c| c.symbols as usize).sum::<usize>(),
        payload.main_bytes.len()
    );
    Archive {
        predictor: spec.clone(),
        meta: payload.meta.clone(),
        main_len: payload.main_bytes.len() as u64,
        chunks,
        side_bits: payload.side_bits.clone(),
        original_crc,
    }
    .to_bytes()
}

/// Parses and integrity-checks an archive, returning the payload skeleton,
/// predictor spec and chunk blobs.
pub fn read_archive(bytes: &[u8]) -> Result<(MediaPayload, PredictorSpec, Vec<Chunk>)> {
    let archive = Archive::from_bytes(bytes)?;
    Ok((archive.payload_skeleton(), archive.predictor, archive.chunks))
}
