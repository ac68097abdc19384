//! YUV4MPEG2 streams with 8-bit 4:2:0 or 4:4:4 progressive frames.

use super::meta::{MediaMeta, VideoMeta};
use super::MediaPayload;
use crate::error::{Error, Result};

const STREAM_MAGIC: &[u8] = b"YUV4MPEG2";
const FRAME_MAGIC: &[u8] = b"FRAME";
const CANONICAL_FRAME_HEADER: &[u8] = b"FRAME\n";
const MAX_HEADER_LINE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chroma {
    C420,
    C444,
}

impl Chroma {
    pub fn frame_len(self, width: usize, height: usize) -> usize {
        // saturating: dimensions come from untrusted headers
        let luma = width.saturating_mul(height);
        match self {
            Chroma::C420 => luma.saturating_add(width.div_ceil(2).saturating_mul(height.div_ceil(2)).saturating_mul(2)),
            Chroma::C444 => luma.saturating_mul(3),
        }
    }

    fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "420" | "420jpeg" | "420paldv" | "420mpeg2" => Ok(Chroma::C420),
            "444" => Ok(Chroma::C444),
            _ => Err(Error::UnsupportedFormat(format!(
                "Y4M colorspace C{tag}; only 8-bit 4:2:0 and 4:4:4 are supported"
            ))),
        }
    }
}

/// Frame geometry decoded from the stream header parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    pub width: u32,
    pub height: u32,
    pub chroma: Chroma,
}

impl Geometry {
    pub fn from_params(params: &[String]) -> Result<Self> {
        let mut width = None;
        let mut height = None;
        let mut chroma = Chroma::C420;
        for p in params {
            let mut chars = p.chars();
            let key = chars.next();
            let value = chars.as_str();
            let number = || {
                value
                    .parse::<u32>()
                    .map_err(|_| Error::Malformed(format!("Y4M parameter {p:?}")))
            };
            match key {
                Some('W') => width = Some(number()?),
                Some('H') => height = Some(number()?),
                Some('C') => chroma = Chroma::from_tag(value)?,
                Some('I') if value != "p" && value != "?" => {
                    return Err(Error::UnsupportedFormat(format!("interlaced Y4M (I{value})")));
                }
                _ => {}
            }
        }
        match (width, height) {
            (Some(width), Some(height)) => Ok(Self {
                width,
                height,
                chroma,
            }),
            _ => Err(Error::Malformed("Y4M header lacks W or H".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Y4mFrame {
    /// Header line including the trailing newline.
    pub header: Vec<u8>,
    /// Y, U and V planes back to back.
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Y4mVideo {
    pub params: Vec<String>,
    pub geometry: Geometry,
    /// Stream header line including the trailing newline.
    pub header: Vec<u8>,
    pub frames: Vec<Y4mFrame>,
}

fn header_line(bytes: &[u8], start: usize) -> Result<usize> {
    bytes[start..]
        .iter()
        .take(MAX_HEADER_LINE)
        .position(|&b| b == b'\n')
        .map(|i| start + i + 1)
        .ok_or_else(|| Error::Malformed("unterminated Y4M header line".into()))
}

fn canonical_stream_header(params: &[String]) -> Vec<u8> {
    let mut h = STREAM_MAGIC.to_vec();
    for p in params {
        h.push(b' ');
        h.extend_from_slice(p.as_bytes());
    }
    h.push(b'\n');
    h
}

impl Y4mVideo {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if !bytes.starts_with(STREAM_MAGIC) {
            return Err(Error::Malformed("not a YUV4MPEG2 stream".into()));
        }
        let end = header_line(bytes, 0)?;
        let line = std::str::from_utf8(&bytes[STREAM_MAGIC.len()..end - 1])
            .map_err(|_| Error::Malformed("non-ASCII Y4M header".into()))?;
        if !line.is_empty() && !line.starts_with(' ') {
            return Err(Error::Malformed("Y4M magic not followed by a space".into()));
        }
        let params: Vec<String> = line.split_ascii_whitespace().map(str::to_string).collect();
        let geometry = Geometry::from_params(&params)?;
        let frame_len = geometry
            .chroma
            .frame_len(geometry.width as usize, geometry.height as usize);

        let mut frames = Vec::new();
        let mut pos = end;
        while pos < bytes.len() {
            if !bytes[pos..].starts_with(FRAME_MAGIC) {
                return Err(Error::Malformed(format!("expected FRAME at offset {pos}")));
            }
            let data_start = header_line(bytes, pos)?;
            let data_end = data_start
                .checked_add(frame_len)
                .filter(|&e| e <= bytes.len())
                .ok_or_else(|| Error::Malformed("Y4M frame truncated".into()))?;
            frames.push(Y4mFrame {
                header: bytes[pos..data_start].to_vec(),
                data: bytes[data_start..data_end].to_vec(),
            });
            pos = data_end;
        }
        Ok(Self {
            params,
            geometry,
            header: bytes[..end].to_vec(),
            frames,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header.clone();
        for f in &self.frames {
            out.extend_from_slice(&f.header);
            out.extend_from_slice(&f.data);
        }
        out
    }

    fn meta_for<'a>(&self, frames: impl Iterator<Item = &'a Y4mFrame>) -> VideoMeta {
        let mut frame_headers = Vec::new();
        let mut frame_count = 0;
        for (i, f) in frames.enumerate() {
            if f.header != CANONICAL_FRAME_HEADER {
                frame_headers.push((i as u32, f.header.clone()));
            }
            frame_count += 1;
        }
        VideoMeta {
            params: self.params.clone(),
            width: self.geometry.width,
            height: self.geometry.height,
            chroma: self.geometry.chroma,
            header: (self.header != canonical_stream_header(&self.params)).then(|| self.header.clone()),
            frame_count,
            frame_headers,
        }
    }

    /// The whole clip as one payload; frames stay independent through
    /// [`MediaPayload::segments`].
    pub fn to_payload(&self) -> MediaPayload {
        MediaPayload {
            meta: MediaMeta::Video(self.meta_for(self.frames.iter())),
            main_bytes: self.frames.iter().flat_map(|f| f.data.iter().copied()).collect(),
            side_bits: Vec::new(),
        }
    }

    /// One single-frame payload per frame.
    pub fn frame_payloads(&self) -> Vec<MediaPayload> {
        self.frames
            .iter()
            .map(|f| MediaPayload {
                meta: MediaMeta::Video(self.meta_for(std::iter::once(f))),
                main_bytes: f.data.clone(),
                side_bits: Vec::new(),
            })
            .collect()
    }
}

pub(super) fn rebuild(meta: &VideoMeta, main: &[u8]) -> Result<Vec<u8>> {
    let frame_len = meta.frame_len();
    let n = meta.frame_count as usize;
    if main.len() != frame_len.saturating_mul(n) {
        return Err(Error::Corrupt(format!(
            "video needs {} bytes, payload has {}",
            frame_len.saturating_mul(n),
            main.len()
        )));
    }
    let mut out = match &meta.header {
        Some(h) => h.clone(),
        None => canonical_stream_header(&meta.params),
    };
    let mut custom = meta.frame_headers.iter().peekable();
    for i in 0..n {
        match custom.next_if(|(idx, _)| *idx as usize == i) {
            Some((_, h)) => out.extend_from_slice(h),
            None => out.extend_from_slice(CANONICAL_FRAME_HEADER),
        }
        out.extend_from_slice(&main[i * frame_len..(i + 1) * frame_len]);
    }
    if custom.next().is_some() {
        return Err(Error::Corrupt("frame header index out of range".into()));
    }
    Ok(out)
}
