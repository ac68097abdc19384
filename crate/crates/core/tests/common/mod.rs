//! Random media generators shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;

use lmcompress::media::wav::write_pcm16;
use lmcompress::MediaKind;

const WORDS: &[&str] = &[
    "the", "compression", "of", "data", "is", "a", "model", "predicts", "next", "symbol",
    "and", "coder", "turns", "probability", "into", "bits", "with", "little", "loss",
];

pub fn random_text<R: Rng>(rng: &mut R, max_len: usize) -> Vec<u8> {
    let len = rng.gen_range(0..=max_len);
    let mut out = Vec::with_capacity(len + 16);
    if rng.gen_ratio(1, 4) {
        // arbitrary bytes
        out.extend((0..len).map(|_| rng.gen::<u8>()));
    } else {
        while out.len() < len {
            out.extend_from_slice(WORDS[rng.gen_range(0..WORDS.len())].as_bytes());
            out.push(if rng.gen_ratio(1, 10) { b'\n' } else { b' ' });
        }
        out.truncate(len);
    }
    // never accidentally look like another media type
    if out.first() == Some(&b'P') || out.starts_with(b"RIFF") || out.starts_with(b"YUV4") {
        out[0] = b'#';
    }
    out
}

fn raster<R: Rng>(rng: &mut R, len: usize, maxval: u8) -> Vec<u8> {
    if rng.gen_bool(0.5) {
        (0..len).map(|_| rng.gen_range(0..=maxval)).collect()
    } else {
        // smooth ramp with noise, so predictors have something to find
        let step = rng.gen_range(0..4u32);
        (0..len)
            .map(|i| ((i as u32 * step + rng.gen_range(0..3)) % (u32::from(maxval) + 1)) as u8)
            .collect()
    }
}

pub fn random_pnm<R: Rng>(rng: &mut R) -> Vec<u8> {
    let channels = if rng.gen_bool(0.5) { 1 } else { 3 };
    let w = rng.gen_range(0..=24u32);
    let h = rng.gen_range(0..=24u32);
    let maxval: u8 = if rng.gen_bool(0.8) { 255 } else { rng.gen_range(1..=255) };
    let magic = if channels == 1 { "P5" } else { "P6" };
    let mut out = match rng.gen_range(0..4) {
        0 => format!("{magic}\n# made by a test\n{w} {h}\n{maxval}\n"),
        1 => format!("{magic} {w}  {h}\r\n{maxval}\t"),
        _ => format!("{magic}\n{w} {h}\n{maxval}\n"),
    }
    .into_bytes();
    out.extend(raster(rng, (w * h) as usize * channels, maxval));
    if rng.gen_ratio(1, 8) {
        out.extend_from_slice(b"trailing junk");
    }
    out
}

pub fn random_wav<R: Rng>(rng: &mut R) -> Vec<u8> {
    let channels = rng.gen_range(1..=2u16);
    let rate = [8000, 16000, 44100][rng.gen_range(0..3)];
    let samples = rng.gen_range(0..2000usize) * usize::from(channels);
    let mut data = Vec::with_capacity(samples * 2);
    let freq = rng.gen_range(1.0..50.0f64);
    for i in 0..samples {
        let s = if rng.gen_bool(0.3) {
            rng.gen::<i16>()
        } else {
            ((i as f64 / freq).sin() * 12000.0) as i16 + rng.gen_range(-64..64)
        };
        data.extend_from_slice(&s.to_le_bytes());
    }
    if rng.gen_ratio(1, 10) {
        // odd data length exercises the pad byte
        data.push(rng.gen());
    }
    let mut out = write_pcm16(channels, rate, &data);
    if rng.gen_ratio(1, 6) {
        // extra chunk after the samples
        out.extend_from_slice(b"LIST\x04\x00\x00\x00abcd");
        let len = (out.len() - 8) as u32;
        out[4..8].copy_from_slice(&len.to_le_bytes());
    }
    out
}

pub fn random_y4m<R: Rng>(rng: &mut R) -> Vec<u8> {
    let w = rng.gen_range(1..=20u32);
    let h = rng.gen_range(1..=20u32);
    let c444 = rng.gen_bool(0.3);
    let mut header = format!("YUV4MPEG2 W{w} H{h} F25:1 Ip A1:1");
    if c444 {
        header.push_str(" C444");
    } else if rng.gen_bool(0.5) {
        header.push_str(" C420jpeg");
    }
    if rng.gen_ratio(1, 5) {
        header.push_str(" XYSCSS=420JPEG");
    }
    header.push('\n');
    let (w, h) = (w as usize, h as usize);
    let frame_len = if c444 { 3 * w * h } else { w * h + 2 * w.div_ceil(2) * h.div_ceil(2) };
    let mut out = header.into_bytes();
    for _ in 0..rng.gen_range(0..4) {
        if rng.gen_ratio(1, 5) {
            out.extend_from_slice(b"FRAME Ixyz\n");
        } else {
            out.extend_from_slice(b"FRAME\n");
        }
        out.extend(raster(rng, frame_len, 255));
    }
    out
}

pub fn random_media<R: Rng>(rng: &mut R, kind: MediaKind) -> Vec<u8> {
    match kind {
        MediaKind::Text => random_text(rng, 6000),
        MediaKind::Image => random_pnm(rng),
        MediaKind::Audio => random_wav(rng),
        MediaKind::Video => random_y4m(rng),
    }
}
