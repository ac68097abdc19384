//! Byte-oriented range coder over fixed-total frequency tables.
//!
//! The encoder keeps a 32-bit `low` inside a 64-bit accumulator so the
//! carry out of an interval addition is visible in bit 32; the carry is then
//! rippled back into bytes that were already emitted. Renormalization
//! shifts one byte at a time whenever `range` falls below 2^24.
//!
//! Interval bounds are computed as `floor(range * cum / 2^16)` for each
//! cumulative frequency, so adjacent symbols share exact boundaries and the
//! decoder can locate a symbol by a single division.
//!
//! A stream carries no length and no end marker: the symbol count travels
//! out of band. Decoding with a distribution source that differs from the
//! one used for encoding cannot be detected here and simply yields garbage;
//! integrity is checked by the container.

use crate::error::{Error, Result};
use crate::predictor::Predictor;

/// Every [`QuantizedDistribution`] sums to exactly this value.
pub const TOTAL_FREQ: u32 = 1 << 16;

const FREQ_BITS: u32 = 16;
const RENORM_BOUND: u32 = 1 << 24;
const LOW_MASK: u64 = 0xFFFF_FFFF;
/// Bytes appended by [`RangeEncoder::finish`].
pub const FLUSH_BYTES: usize = 8;

/// Integer next-symbol frequencies, every entry at least 1, summing to
/// [`TOTAL_FREQ`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedDistribution {
    freqs: Vec<u32>,
    // cum[i] = sum of freqs[..i]; len = freqs.len() + 1
    cum: Vec<u32>,
}

impl QuantizedDistribution {
    pub fn new(freqs: Vec<u32>) -> Result<Self> {
        let mut dist = Self {
            freqs,
            cum: Vec::new(),
        };
        dist.rebuild()?;
        Ok(dist)
    }

    /// The flat distribution over `alphabet_size` symbols. The remainder of
    /// `TOTAL_FREQ / alphabet_size` goes to the lowest symbol indices.
    pub fn uniform(alphabet_size: usize) -> Result<Self> {
        if alphabet_size == 0 || alphabet_size > TOTAL_FREQ as usize {
            return Err(Error::InvalidDistribution(format!(
                "alphabet size {alphabet_size} outside 1..=65536"
            )));
        }
        let base = TOTAL_FREQ / alphabet_size as u32;
        let extra = (TOTAL_FREQ % alphabet_size as u32) as usize;
        let freqs = (0..alphabet_size)
            .map(|i| base + u32::from(i < extra))
            .collect();
        Self::new(freqs)
    }

    pub(crate) fn empty() -> Self {
        Self {
            freqs: Vec::new(),
            cum: vec![0],
        }
    }

    /// Mutable access for in-place refills; callers must call `rebuild`.
    pub(crate) fn freqs_mut(&mut self) -> &mut Vec<u32> {
        &mut self.freqs
    }

    /// Recomputes the cumulative table and checks the invariants.
    pub(crate) fn rebuild(&mut self) -> Result<()> {
        let n = self.freqs.len();
        if n == 0 || n > TOTAL_FREQ as usize {
            return Err(Error::InvalidDistribution(format!(
                "alphabet size {n} outside 1..=65536"
            )));
        }
        self.cum.clear();
        self.cum.reserve(n + 1);
        let mut acc: u64 = 0;
        self.cum.push(0);
        for (i, &f) in self.freqs.iter().enumerate() {
            if f == 0 {
                return Err(Error::InvalidDistribution(format!(
                    "zero frequency for symbol {i}"
                )));
            }
            acc += u64::from(f);
            if acc > u64::from(TOTAL_FREQ) {
                break;
            }
            self.cum.push(acc as u32);
        }
        if acc != u64::from(TOTAL_FREQ) {
            let sum: u64 = self.freqs.iter().map(|&f| u64::from(f)).sum();
            return Err(Error::InvalidDistribution(format!(
                "frequencies sum to {sum}, expected {TOTAL_FREQ}"
            )));
        }
        Ok(())
    }

    pub fn alphabet_size(&self) -> usize {
        self.freqs.len()
    }

    pub fn freqs(&self) -> &[u32] {
        &self.freqs
    }

    pub fn freq(&self, symbol: u32) -> u32 {
        self.freqs[symbol as usize]
    }

    /// Cumulative frequency of all symbols below `symbol`.
    pub fn cum_freq(&self, symbol: u32) -> u32 {
        self.cum[symbol as usize]
    }

    /// Largest symbol whose cumulative frequency is `<= target`.
    fn symbol_at(&self, target: u32) -> u32 {
        // cum is strictly increasing and cum[0] = 0 <= target
        (self.cum.partition_point(|&c| c <= target) - 1) as u32
    }

    /// Information content of `symbol` in bits.
    pub fn cost_bits(&self, symbol: u32) -> f64 {
        f64::from(FREQ_BITS) - f64::from(self.freq(symbol)).log2()
    }

    fn check_symbol(&self, symbol: u32) -> Result<()> {
        if (symbol as usize) < self.freqs.len() {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange {
                symbol,
                alphabet_size: self.freqs.len(),
            })
        }
    }
}

#[inline]
fn scaled(range: u32, cum: u32) -> u64 {
    (u64::from(range) * u64::from(cum)) >> FREQ_BITS
}

#[derive(Debug, Clone)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            out: Vec::new(),
        }
    }

    pub fn encode(&mut self, dist: &QuantizedDistribution, symbol: u32) -> Result<()> {
        dist.check_symbol(symbol)?;
        let lo = scaled(self.range, dist.cum[symbol as usize]);
        let hi = scaled(self.range, dist.cum[symbol as usize + 1]);
        self.low += lo;
        self.range = (hi - lo) as u32;
        if self.low > LOW_MASK {
            self.propagate_carry();
            self.low &= LOW_MASK;
        }
        while self.range < RENORM_BOUND {
            self.out.push((self.low >> 24) as u8);
            self.low = (self.low << 8) & LOW_MASK;
            self.range <<= 8;
        }
        Ok(())
    }

    fn propagate_carry(&mut self) {
        for byte in self.out.iter_mut().rev() {
            let (v, overflow) = byte.overflowing_add(1);
            *byte = v;
            if !overflow {
                return;
            }
        }
        unreachable!("carry past the start of the code stream");
    }

    /// Bytes emitted so far, excluding the flush.
    pub fn pending_len(&self) -> usize {
        self.out.len()
    }

    /// Writes the final 8 bytes: the 32 significant bits of `low`, then zero
    /// padding.
    pub fn finish(mut self) -> Vec<u8> {
        self.out.extend_from_slice(&(self.low << 32).to_be_bytes());
        self.out
    }
}

#[derive(Debug, Clone)]
pub struct RangeDecoder<'a> {
    // offset of the code value above the current interval's low end
    value: u32,
    range: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self> {
        if input.len() < 4 {
            return Err(Error::TruncatedCode);
        }
        let value = u32::from_be_bytes([input[0], input[1], input[2], input[3]]);
        Ok(Self {
            value,
            range: u32::MAX,
            input,
            pos: 4,
        })
    }

    pub fn decode(&mut self, dist: &QuantizedDistribution) -> Result<u32> {
        if self.value >= self.range {
            return Err(Error::Corrupt("code value outside the coding interval".into()));
        }
        let target = (((u64::from(self.value) + 1) << FREQ_BITS) - 1) / u64::from(self.range);
        let symbol = dist.symbol_at(target as u32);
        let lo = scaled(self.range, dist.cum[symbol as usize]);
        let hi = scaled(self.range, dist.cum[symbol as usize + 1]);
        self.value -= lo as u32;
        self.range = (hi - lo) as u32;
        while self.range < RENORM_BOUND {
            let byte = *self.input.get(self.pos).ok_or(Error::TruncatedCode)?;
            self.pos += 1;
            self.value = (self.value << 8) | u32::from(byte);
            self.range <<= 8;
        }
        Ok(symbol)
    }

    /// Confirms the stream still holds the rest of the encoder's flush.
    pub fn finish(self) -> Result<()> {
        if self.input.len() < self.pos + (FLUSH_BYTES - 4) {
            return Err(Error::TruncatedCode);
        }
        Ok(())
    }
}

/// Encodes `symbols`, asking `model` for one distribution per position and
/// feeding each coded symbol back to it.
pub fn encode_stream<P: Predictor + ?Sized>(symbols: &[u32], model: &mut P) -> Result<Vec<u8>> {
    let mut enc = RangeEncoder::new();
    for &s in symbols {
        enc.encode(model.predict()?, s)?;
        model.observe(s)?;
    }
    Ok(enc.finish())
}

/// Decodes `n` symbols. `model` must replay the exact distribution sequence
/// seen by the encoder; a mismatch is not detectable at this layer.
pub fn decode_stream<P: Predictor + ?Sized>(code: &[u8], model: &mut P, n: usize) -> Result<Vec<u32>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut dec = RangeDecoder::new(code)?;
    // `n` may come from an untrusted archive
    let mut out = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        let s = dec.decode(model.predict()?)?;
        model.observe(s)?;
        out.push(s);
    }
    dec.finish()?;
    Ok(out)
}

/// Sum of `-log2(freq / 65536)` over the coded symbols.
pub fn ideal_code_length<P: Predictor + ?Sized>(symbols: &[u32], model: &mut P) -> Result<f64> {
    let mut bits = 0.0;
    for &s in symbols {
        let dist = model.predict()?;
        dist.check_symbol(s)?;
        bits += dist.cost_bits(s);
        model.observe(s)?;
    }
    Ok(bits)
}
