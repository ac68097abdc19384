use std::io::{Cursor, Read};

use byteorder::{ReadBytesExt, WriteBytesExt, LE};

use super::y4m::Chroma;
use super::MediaKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageMeta {
    /// 1 for PGM, 3 for PPM.
    pub channels: u8,
    pub width: u32,
    pub height: u32,
    pub maxval: u16,
    /// Original header bytes, present only when they differ from the
    /// canonical `P5`/`P6` header.
    pub header: Option<Vec<u8>>,
    /// Bytes after the raster.
    pub trailer: Vec<u8>,
}

impl ImageMeta {
    pub fn plane_len(&self) -> usize {
        (self.width as usize).saturating_mul(self.height as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioMeta {
    pub channels: u16,
    pub sample_rate: u32,
    pub bits_per_sample: u16,
    /// Length of the PCM data chunk payload.
    pub data_len: u64,
    /// Bytes preceding the PCM data when they differ from the canonical
    /// 44-byte header.
    pub prefix: Option<Vec<u8>>,
    /// Bytes following the PCM data (pad byte, trailing chunks).
    pub suffix: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoMeta {
    /// Stream header parameters in file order, e.g. `["W352", "H288", "F30:1"]`.
    pub params: Vec<String>,
    pub width: u32,
    pub height: u32,
    pub chroma: Chroma,
    /// Original stream header line when it is not `YUV4MPEG2 ` + params
    /// joined by single spaces + newline.
    pub header: Option<Vec<u8>>,
    pub frame_count: u32,
    /// `(frame index, header line)` for frames whose header is not `FRAME\n`.
    pub frame_headers: Vec<(u32, Vec<u8>)>,
}

impl VideoMeta {
    pub fn frame_len(&self) -> usize {
        self.chroma.frame_len(self.width as usize, self.height as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MediaMeta {
    Text,
    Image(ImageMeta),
    Audio(AudioMeta),
    Video(VideoMeta),
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    out.write_u32::<LE>(b.len() as u32).unwrap();
    out.extend_from_slice(b);
}

fn put_opt(out: &mut Vec<u8>, b: &Option<Vec<u8>>) {
    match b {
        Some(b) => {
            out.push(1);
            put_bytes(out, b);
        }
        None => out.push(0),
    }
}

fn get_bytes(r: &mut Cursor<&[u8]>) -> Result<Vec<u8>> {
    let n = r.read_u32::<LE>()? as usize;
    let left = r.get_ref().len() - r.position() as usize;
    if n > left {
        return Err(Error::Corrupt("metadata field overruns blob".into()));
    }
    let mut b = vec![0; n];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn get_opt(r: &mut Cursor<&[u8]>) -> Result<Option<Vec<u8>>> {
    match r.read_u8()? {
        0 => Ok(None),
        1 => Ok(Some(get_bytes(r)?)),
        v => Err(Error::Corrupt(format!("bad option flag {v}"))),
    }
}

impl MediaMeta {
    pub fn kind(&self) -> MediaKind {
        match self {
            MediaMeta::Text => MediaKind::Text,
            MediaMeta::Image(_) => MediaKind::Image,
            MediaMeta::Audio(_) => MediaKind::Audio,
            MediaMeta::Video(_) => MediaKind::Video,
        }
    }

    /// Symbol count implied by the metadata; `None` for text.
    pub fn main_len(&self) -> Option<usize> {
        match self {
            MediaMeta::Text => None,
            MediaMeta::Image(m) => Some(m.plane_len().saturating_mul(usize::from(m.channels))),
            MediaMeta::Audio(m) => Some(m.data_len as usize),
            MediaMeta::Video(m) => Some(m.frame_len().saturating_mul(m.frame_count as usize)),
        }
    }

    /// Little-endian serialization; the media kind is stored by the caller.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            MediaMeta::Text => {}
            MediaMeta::Image(m) => {
                out.push(m.channels);
                out.write_u32::<LE>(m.width).unwrap();
                out.write_u32::<LE>(m.height).unwrap();
                out.write_u16::<LE>(m.maxval).unwrap();
                put_opt(&mut out, &m.header);
                put_bytes(&mut out, &m.trailer);
            }
            MediaMeta::Audio(m) => {
                out.write_u16::<LE>(m.channels).unwrap();
                out.write_u32::<LE>(m.sample_rate).unwrap();
                out.write_u16::<LE>(m.bits_per_sample).unwrap();
                out.write_u64::<LE>(m.data_len).unwrap();
                put_opt(&mut out, &m.prefix);
                put_bytes(&mut out, &m.suffix);
            }
            MediaMeta::Video(m) => {
                out.write_u32::<LE>(m.params.len() as u32).unwrap();
                for p in &m.params {
                    put_bytes(&mut out, p.as_bytes());
                }
                put_opt(&mut out, &m.header);
                out.write_u32::<LE>(m.frame_count).unwrap();
                out.write_u32::<LE>(m.frame_headers.len() as u32).unwrap();
                for (i, h) in &m.frame_headers {
                    out.write_u32::<LE>(*i).unwrap();
                    put_bytes(&mut out, h);
                }
            }
        }
        out
    }

    pub fn decode(kind: MediaKind, blob: &[u8]) -> Result<Self> {
        let mut r = Cursor::new(blob);
        let meta = Self::decode_inner(kind, &mut r).map_err(|e| match e {
            Error::Transport(_) => Error::Corrupt("metadata blob truncated".into()),
            e => e,
        })?;
        if r.position() as usize != blob.len() {
            return Err(Error::Corrupt("trailing bytes in metadata blob".into()));
        }
        Ok(meta)
    }

    fn decode_inner(kind: MediaKind, r: &mut Cursor<&[u8]>) -> Result<Self> {
        Ok(match kind {
            MediaKind::Text => MediaMeta::Text,
            MediaKind::Image => {
                let channels = r.read_u8()?;
                if channels != 1 && channels != 3 {
                    return Err(Error::Corrupt(format!("image with {channels} channels")));
                }
                MediaMeta::Image(ImageMeta {
                    channels,
                    width: r.read_u32::<LE>()?,
                    height: r.read_u32::<LE>()?,
                    maxval: r.read_u16::<LE>()?,
                    header: get_opt(r)?,
                    trailer: get_bytes(r)?,
                })
            }
            MediaKind::Audio => MediaMeta::Audio(AudioMeta {
                channels: r.read_u16::<LE>()?,
                sample_rate: r.read_u32::<LE>()?,
                bits_per_sample: r.read_u16::<LE>()?,
                data_len: r.read_u64::<LE>()?,
                prefix: get_opt(r)?,
                suffix: get_bytes(r)?,
            }),
            MediaKind::Video => {
                let n = r.read_u32::<LE>()?;
                let mut params = Vec::new();
                for _ in 0..n {
                    let p = String::from_utf8(get_bytes(r)?)
                        .map_err(|_| Error::Corrupt("non-UTF-8 video parameter".into()))?;
                    params.push(p);
                }
                let geometry = super::y4m::Geometry::from_params(&params)
                    .map_err(|e| Error::Corrupt(format!("video parameters: {e}")))?;
                let header = get_opt(r)?;
                let frame_count = r.read_u32::<LE>()?;
                let n = r.read_u32::<LE>()?;
                let mut frame_headers = Vec::new();
                for _ in 0..n {
                    let i = r.read_u32::<LE>()?;
                    frame_headers.push((i, get_bytes(r)?));
                }
                MediaMeta::Video(VideoMeta {
                    params,
                    width: geometry.width,
                    height: geometry.height,
                    chroma: geometry.chroma,
                    header,
                    frame_count,
                    frame_headers,
                })
            }
        })
    }
}
