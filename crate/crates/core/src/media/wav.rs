//! RIFF/WAVE with 16-bit PCM samples.
//!
//! Each data byte `b` becomes the symbol `b >> 1` (always 7-bit ASCII) and
//! its low bit goes to the side channel, packed MSB-first.

use byteorder::{ByteOrder, WriteBytesExt, LE};

use super::meta::{AudioMeta, MediaMeta};
use super::{pack_bits, unpack_bit, MediaPayload};
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WavFile {
    pub channels: u16,
    pub sample_rate: u32,
    pub bits_per_sample: u16,
    /// Everything before the PCM data.
    pub prefix: Vec<u8>,
    pub data: Vec<u8>,
    /// Everything after the PCM data.
    pub suffix: Vec<u8>,
}

/// Standard 44-byte header for a file holding only `fmt ` and `data`.
pub fn canonical_header(channels: u16, sample_rate: u32, bits: u16, data_len: u64) -> Vec<u8> {
    let block_align = channels.wrapping_mul(bits / 8);
    let data_len32 = data_len as u32;
    let pad = data_len32 & 1;
    let mut h = Vec::with_capacity(44);
    h.extend_from_slice(b"RIFF");
    h.write_u32::<LE>(36u32.wrapping_add(data_len32).wrapping_add(pad)).unwrap();
    h.extend_from_slice(b"WAVEfmt ");
    h.write_u32::<LE>(16).unwrap();
    h.write_u16::<LE>(FORMAT_PCM).unwrap();
    h.write_u16::<LE>(channels).unwrap();
    h.write_u32::<LE>(sample_rate).unwrap();
    h.write_u32::<LE>(sample_rate.wrapping_mul(u32::from(block_align))).unwrap();
    h.write_u16::<LE>(block_align).unwrap();
    h.write_u16::<LE>(bits).unwrap();
    h.extend_from_slice(b"data");
    h.write_u32::<LE>(data_len32).unwrap();
    h
}

/// Builds a minimal PCM16 file around `data`.
pub fn write_pcm16(channels: u16, sample_rate: u32, data: &[u8]) -> Vec<u8> {
    let mut out = canonical_header(channels, sample_rate, 16, data.len() as u64);
    out.extend_from_slice(data);
    if data.len() % 2 == 1 {
        out.push(0);
    }
    out
}

impl WavFile {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
            return Err(Error::Malformed("not a RIFF/WAVE file".into()));
        }
        let mut pos = 12;
        let mut fmt: Option<(u16, u32, u16)> = None;
        while pos + 8 <= bytes.len() {
            let id = &bytes[pos..pos + 4];
            let size = LE::read_u32(&bytes[pos + 4..pos + 8]) as usize;
            let body = pos + 8;
            let end = body
                .checked_add(size)
                .filter(|&e| e <= bytes.len())
                .ok_or_else(|| Error::Malformed("WAV chunk overruns file".into()))?;
            match id {
                b"fmt " => {
                    if size < 16 {
                        return Err(Error::Malformed("short fmt chunk".into()));
                    }
                    let f = &bytes[body..end];
                    let mut tag = LE::read_u16(&f[0..2]);
                    if tag == FORMAT_EXTENSIBLE && size >= 40 {
                        // sub-format GUID begins with the real format tag
                        tag = LE::read_u16(&f[24..26]);
                    }
                    let bits = LE::read_u16(&f[14..16]);
                    if tag != FORMAT_PCM {
                        return Err(Error::UnsupportedFormat(format!(
                            "WAV format tag {tag:#06x} is not PCM"
                        )));
                    }
                    if bits != 16 {
                        return Err(Error::UnsupportedFormat(format!(
                            "{bits}-bit WAV samples; only 16-bit PCM is supported"
                        )));
                    }
                    fmt = Some((LE::read_u16(&f[2..4]), LE::read_u32(&f[4..8]), bits));
                }
                b"data" => {
                    let (channels, sample_rate, bits_per_sample) =
                        fmt.ok_or_else(|| Error::Malformed("WAV data before fmt chunk".into()))?;
                    return Ok(Self {
                        channels,
                        sample_rate,
                        bits_per_sample,
                        prefix: bytes[..body].to_vec(),
                        data: bytes[body..end].to_vec(),
                        suffix: bytes[end..].to_vec(),
                    });
                }
                _ => {}
            }
            pos = end + (size & 1);
        }
        Err(Error::Malformed("WAV file has no data chunk".into()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        [&self.prefix[..], &self.data, &self.suffix].concat()
    }

    pub fn to_payload(&self) -> MediaPayload {
        let canonical = canonical_header(
            self.channels,
            self.sample_rate,
            self.bits_per_sample,
            self.data.len() as u64,
        );
        MediaPayload {
            meta: MediaMeta::Audio(AudioMeta {
                channels: self.channels,
                sample_rate: self.sample_rate,
                bits_per_sample: self.bits_per_sample,
                data_len: self.data.len() as u64,
                prefix: (self.prefix != canonical).then(|| self.prefix.clone()),
                suffix: self.suffix.clone(),
            }),
            main_bytes: self.data.iter().map(|b| b >> 1).collect(),
            side_bits: pack_bits(self.data.iter().map(|b| b & 1 == 1)),
        }
    }
}

pub(super) fn rebuild(meta: &AudioMeta, main: &[u8], side_bits: &[u8]) -> Result<Vec<u8>> {
    let n = meta.data_len as usize;
    if main.len() != n {
        return Err(Error::Corrupt(format!(
            "audio needs {n} bytes, payload has {}",
            main.len()
        )));
    }
    if side_bits.len() != n.div_ceil(8) {
        return Err(Error::Corrupt(format!(
            "audio side channel has {} bytes, expected {}",
            side_bits.len(),
            n.div_ceil(8)
        )));
    }
    if let Some(b) = main.iter().find(|&&b| b > 0x7F) {
        return Err(Error::Corrupt(format!("audio symbol {b:#04x} above 0x7f")));
    }
    let mut out = match &meta.prefix {
        Some(p) => p.clone(),
        None => canonical_header(meta.channels, meta.sample_rate, meta.bits_per_sample, meta.data_len),
    };
    out.reserve(n + meta.suffix.len());
    out.extend(
        main.iter()
            .enumerate()
            .map(|(i, &b)| (b << 1) | u8::from(unpack_bit(side_bits, i))),
    );
    out.extend_from_slice(&meta.suffix);
    Ok(out)
}
