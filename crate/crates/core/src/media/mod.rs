//! Reversible mapping between media files and the flat byte sequences that
//! get model-coded.
//!
//! | media | symbols                                   | default chunk |
//! |-------|-------------------------------------------|---------------|
//! | text  | the file bytes                            | 2048          |
//! | image | one plane per channel, each row-major     | 1024          |
//! | audio | every PCM byte shifted right by one bit   | 2048          |
//! | video | per frame: Y, U, V planes, each row-major | 1024          |
//!
//! Chunks never straddle an image plane or a video frame. Container
//! headers are parsed into [`MediaMeta`] and regenerated on the way back;
//! whenever the original header bytes differ from the regenerated ones they
//! are kept verbatim so every file round-trips byte for byte.

mod meta;
pub mod pnm;
pub mod wav;
pub mod y4m;

use std::fmt;
use std::str::FromStr;

pub use meta::{AudioMeta, ImageMeta, MediaMeta, VideoMeta};
pub use pnm::PnmImage;
pub use wav::WavFile;
pub use y4m::Y4mVideo;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MediaKind {
    Text = 0,
    Image = 1,
    Audio = 2,
    Video = 3,
}

impl MediaKind {
    pub fn default_chunk_size(self) -> usize {
        match self {
            MediaKind::Image | MediaKind::Video => 1024,
            MediaKind::Audio | MediaKind::Text => 2048,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0 => MediaKind::Text,
            1 => MediaKind::Image,
            2 => MediaKind::Audio,
            3 => MediaKind::Video,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            MediaKind::Text => "text",
            MediaKind::Image => "image",
            MediaKind::Audio => "audio",
            MediaKind::Video => "video",
        }
    }
}

impl fmt::Display for MediaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MediaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(MediaKind::Text),
            "image" => Ok(MediaKind::Image),
            "audio" => Ok(MediaKind::Audio),
            "video" => Ok(MediaKind::Video),
            _ => Err(Error::UnsupportedFormat(format!("unknown media type {s:?}"))),
        }
    }
}

/// Guesses the media type from magic bytes. Anything unrecognized is text.
pub fn detect(bytes: &[u8]) -> MediaKind {
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        MediaKind::Image
    } else if bytes.len() >= 12 && &bytes[..4] == b"RIFF" && &bytes[8..12] == b"WAVE" {
        MediaKind::Audio
    } else if bytes.starts_with(b"YUV4MPEG2") {
        MediaKind::Video
    } else {
        MediaKind::Text
    }
}

/// Symbols to be model-coded plus everything needed to rebuild the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MediaPayload {
    pub meta: MediaMeta,
    pub main_bytes: Vec<u8>,
    /// Packed MSB-first; audio LSBs, empty for other media.
    pub side_bits: Vec<u8>,
}

impl MediaPayload {
    pub fn media(&self) -> MediaKind {
        self.meta.kind()
    }

    /// Lengths of the independent regions of `main_bytes` that chunks must
    /// not cross.
    pub fn segments(&self) -> Vec<usize> {
        match &self.meta {
            MediaMeta::Text | MediaMeta::Audio(_) => vec![self.main_bytes.len()],
            MediaMeta::Image(m) => vec![m.plane_len(); usize::from(m.channels)],
            MediaMeta::Video(m) => vec![m.frame_len(); m.frame_count as usize],
        }
    }

    pub fn chunk_plan(&self, chunk_size: usize) -> ChunkPlan {
        ChunkPlan::new(&self.segments(), chunk_size)
    }

    pub fn default_chunk_plan(&self) -> ChunkPlan {
        self.chunk_plan(self.media().default_chunk_size())
    }
}

/// Non-overlapping `(offset, length)` chunks covering a symbol sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPlan {
    pub chunk_size: usize,
    pub boundaries: Vec<(usize, usize)>,
}

impl ChunkPlan {
    /// Cuts each segment into `chunk_size` pieces, restarting at every
    /// segment boundary. Empty segments produce no chunks.
    pub fn new(segments: &[usize], chunk_size: usize) -> Self {
        assert!(chunk_size > 0, "chunk size must be positive");
        let mut boundaries = Vec::new();
        let mut offset = 0;
        for &len in segments {
            let end = offset + len;
            while offset < end {
                let n = chunk_size.min(end - offset);
                boundaries.push((offset, n));
                offset += n;
            }
        }
        Self {
            chunk_size,
            boundaries,
        }
    }

    pub fn len(&self) -> usize {
        self.boundaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }

    pub fn total(&self) -> usize {
        self.boundaries.iter().map(|&(_, n)| n).sum()
    }

    pub fn slices<'a>(&'a self, data: &'a [u8]) -> impl Iterator<Item = &'a [u8]> + 'a {
        self.boundaries.iter().map(move |&(o, n)| &data[o..o + n])
    }
}

pub fn text_to_sequence(bytes: &[u8]) -> MediaPayload {
    MediaPayload {
        meta: MediaMeta::Text,
        main_bytes: bytes.to_vec(),
        side_bits: Vec::new(),
    }
}

pub fn image_to_sequence(image: &PnmImage) -> MediaPayload {
    image.to_payload()
}

pub fn audio_to_sequence(audio: &WavFile) -> MediaPayload {
    audio.to_payload()
}

/// One payload per frame, each a self-contained single-frame clip.
pub fn video_to_sequences(video: &Y4mVideo) -> Vec<MediaPayload> {
    video.frame_payloads()
}

/// Parses `bytes` as `media` and returns the whole-file payload.
pub fn parse_media(bytes: &[u8], media: MediaKind) -> Result<MediaPayload> {
    Ok(match media {
        MediaKind::Text => text_to_sequence(bytes),
        MediaKind::Image => PnmImage::parse(bytes)?.to_payload(),
        MediaKind::Audio => WavFile::parse(bytes)?.to_payload(),
        MediaKind::Video => Y4mVideo::parse(bytes)?.to_payload(),
    })
}

/// Rebuilds the original file from a payload.
pub fn sequence_to_media(payload: &MediaPayload) -> Result<Vec<u8>> {
    match &payload.meta {
        MediaMeta::Text => {
            if !payload.side_bits.is_empty() {
                return Err(Error::Corrupt("text payload carries side bits".into()));
            }
            Ok(payload.main_bytes.clone())
        }
        MediaMeta::Image(m) => pnm::rebuild(m, &payload.main_bytes),
        MediaMeta::Audio(m) => wav::rebuild(m, &payload.main_bytes, &payload.side_bits),
        MediaMeta::Video(m) => y4m::rebuild(m, &payload.main_bytes),
    }
}

/// Packs bits MSB-first; the final byte is zero padded.
pub fn pack_bits(bits: impl IntoIterator<Item = bool>) -> Vec<u8> {
    let mut out = Vec::new();
    for (i, bit) in bits.into_iter().enumerate() {
        if i % 8 == 0 {
            out.push(0);
        }
        if bit {
            *out.last_mut().unwrap() |= 0x80 >> (i % 8);
        }
    }
    out
}

pub fn unpack_bit(packed: &[u8], index: usize) -> bool {
    packed[index / 8] & (0x80 >> (index % 8)) != 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_chunking() {
        assert!(text_to_sequence(b"").default_chunk_plan().is_empty());
        assert_eq!(text_to_sequence(&[7; 2048]).default_chunk_plan().len(), 1);
        let plan = text_to_sequence(&[1; 5000]).default_chunk_plan();
        let lens: Vec<usize> = plan.boundaries.iter().map(|b| b.1).collect();
        assert_eq!(lens, vec![2048, 2048, 904]);
    }

    #[test]
    fn chunk_plan_restarts_per_segment() {
        let plan = ChunkPlan::new(&[5, 0, 3], 4);
        assert_eq!(plan.boundaries, vec![(0, 4), (4, 1), (5, 3)]);
        assert_eq!(plan.total(), 8);
    }

    #[test]
    fn detection() {
        assert_eq!(detect(b"P6\n1 1\n255\n\0\0\0"), MediaKind::Image);
        assert_eq!(detect(b"P5 1 1 255 x"), MediaKind::Image);
        assert_eq!(detect(b"RIFF\0\0\0\0WAVEfmt "), MediaKind::Audio);
        assert_eq!(detect(b"YUV4MPEG2 W2 H2\n"), MediaKind::Video);
        assert_eq!(detect(b"hello"), MediaKind::Text);
        assert_eq!(detect(b""), MediaKind::Text);
    }

    #[test]
    fn bit_packing() {
        assert_eq!(pack_bits([true, false, true]), vec![0b1010_0000]);
        assert!(pack_bits([]).is_empty());
        let p = pack_bits((0..9).map(|i| i == 8));
        assert_eq!(p, vec![0, 0x80]);
        assert!(unpack_bit(&p, 8));
    }
}
