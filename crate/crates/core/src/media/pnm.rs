//! Binary 8-bit PGM (`P5`) and PPM (`P6`).

use super::meta::{ImageMeta, MediaMeta};
use super::MediaPayload;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmImage {
    pub channels: u8,
    pub width: u32,
    pub height: u32,
    pub maxval: u16,
    /// Header exactly as found in the file, through the single whitespace
    /// byte that precedes the raster.
    pub header: Vec<u8>,
    /// Interleaved samples, row-major.
    pub raster: Vec<u8>,
    pub trailer: Vec<u8>,
}

fn canonical_header(channels: u8, width: u32, height: u32, maxval: u16) -> Vec<u8> {
    let magic = if channels == 1 { 5 } else { 6 };
    format!("P{magic}\n{width} {height}\n{maxval}\n").into_bytes()
}

struct HeaderScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderScanner<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Malformed(format!("PNM header: bad {what}")))
    }
}

impl PnmImage {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let channels = match bytes.get(..2) {
            Some(b"P5") => 1u8,
            Some(b"P6") => 3u8,
            Some([b'P', b'1'..=b'7']) => {
                return Err(Error::UnsupportedFormat(
                    "only binary PGM (P5) and PPM (P6) are supported".into(),
                ))
            }
            _ => return Err(Error::Malformed("not a PNM file".into())),
        };
        let mut scan = HeaderScanner { bytes, pos: 2 };
        let width = scan.number("width")?;
        let height = scan.number("height")?;
        let maxval = scan.number("maxval")?;
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Malformed(format!("PNM maxval {maxval}")));
        }
        if maxval > 255 {
            return Err(Error::UnsupportedFormat("16-bit PNM samples".into()));
        }
        match bytes.get(scan.pos) {
            Some(b) if b.is_ascii_whitespace() => scan.pos += 1,
            _ => return Err(Error::Malformed("PNM header not terminated".into())),
        }
        let raster_len = (width as usize)
            .checked_mul(height as usize)
            .and_then(|n| n.checked_mul(usize::from(channels)))
            .ok_or_else(|| Error::Malformed("PNM dimensions overflow".into()))?;
        let end = scan
            .pos
            .checked_add(raster_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Malformed("PNM raster truncated".into()))?;
        Ok(Self {
            channels,
            width,
            height,
            maxval: maxval as u16,
            header: bytes[..scan.pos].to_vec(),
            raster: bytes[scan.pos..end].to_vec(),
            trailer: bytes[end..].to_vec(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header.clone();
        out.extend_from_slice(&self.raster);
        out.extend_from_slice(&self.trailer);
        out
    }

    /// Plane-separated layout: every sample of channel 0 row-major, then
    /// channel 1, then channel 2.
    pub fn to_payload(&self) -> MediaPayload {
        let ch = usize::from(self.channels);
        let mut main = Vec::with_capacity(self.raster.len());
        for c in 0..ch {
            main.extend(self.raster.iter().skip(c).step_by(ch));
        }
        let canonical = canonical_header(self.channels, self.width, self.height, self.maxval);
        MediaPayload {
            meta: MediaMeta::Image(ImageMeta {
                channels: self.channels,
                width: self.width,
                height: self.height,
                maxval: self.maxval,
                header: (self.header != canonical).then(|| self.header.clone()),
                trailer: self.trailer.clone(),
            }),
            main_bytes: main,
            side_bits: Vec::new(),
        }
    }
}

pub(super) fn rebuild(meta: &ImageMeta, main: &[u8]) -> Result<Vec<u8>> {
    let ch = usize::from(meta.channels);
    let plane = meta.plane_len();
    if main.len() != plane.saturating_mul(ch) {
        return Err(Error::Corrupt(format!(
            "image needs {} samples, payload has {}",
            plane.saturating_mul(ch),
            main.len()
        )));
    }
    let mut out = match &meta.header {
        Some(h) => h.clone(),
        None => canonical_header(meta.channels, meta.width, meta.height, meta.maxval),
    };
    out.reserve(main.len() + meta.trailer.len());
    for p in 0..plane {
        for c in 0..ch {
            out.push(main[c * plane + p]);
        }
    }
    out.extend_from_slice(&meta.trailer);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{sequence_to_media, MediaKind};
    use super::*;

    #[test]
    fn ppm_planes() {
        let mut file = b"P6\n2 2\n255\n".to_vec();
        file.extend(1u8..=12);
        let img = PnmImage::parse(&file).unwrap();
        let payload = img.to_payload();
        assert_eq!(payload.main_bytes, vec![1, 4, 7, 10, 2, 5, 8, 11, 3, 6, 9, 12]);
        assert_eq!(payload.media(), MediaKind::Image);
        assert!(matches!(&payload.meta, MediaMeta::Image(m) if m.header.is_none()));
        assert_eq!(sequence_to_media(&payload).unwrap(), file);
    }

    #[test]
    fn single_pixel_pgm() {
        let file = b"P5\n1 1\n255\n\0".to_vec();
        let payload = PnmImage::parse(&file).unwrap().to_payload();
        assert_eq!(payload.main_bytes, vec![0]);
        assert_eq!(payload.default_chunk_plan().len(), 1);
    }

    #[test]
    fn chunks_per_plane() {
        let mut file = b"P6\n64 64\n255\n".to_vec();
        file.extend((0..64 * 64 * 3).map(|i| (i % 251) as u8));
        let payload = PnmImage::parse(&file).unwrap().to_payload();
        let plan = payload.default_chunk_plan();
        assert_eq!(plan.len(), 12);
        assert!(plan.boundaries.iter().all(|&(_, n)| n == 1024));
    }

    #[test]
    fn odd_header_is_kept_verbatim() {
        let mut file = b"P5 # made by hand\n 3\t1 # dims\n200\r".to_vec();
        file.extend([9, 8, 7]);
        file.extend(b"junk after raster");
        let img = PnmImage::parse(&file).unwrap();
        assert_eq!((img.width, img.height, img.maxval), (3, 1, 200));
        assert_eq!(img.to_bytes(), file);
        let payload = img.to_payload();
        assert!(matches!(&payload.meta, MediaMeta::Image(m) if m.header.is_some()));
        assert_eq!(sequence_to_media(&payload).unwrap(), file);
    }

    #[test]
    fn rejects_unsupported_and_malformed() {
        let wide = b"P5\n1 1\n65535\n\0\0";
        assert!(matches!(PnmImage::parse(wide), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(PnmImage::parse(b"P3\n1 1\n255\n0 0 0\n"), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(PnmImage::parse(b"P6\n2 2\n255\n\0\0"), Err(Error::Malformed(_))));
        assert!(matches!(PnmImage::parse(b"P6\n2 x\n255\n"), Err(Error::Malformed(_))));
        assert!(matches!(PnmImage::parse(b"P6\n2 2\n255"), Err(Error::Malformed(_))));
    }
}
