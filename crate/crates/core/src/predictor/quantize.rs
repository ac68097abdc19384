//! Deterministic conversion of integer weights into a [`QuantizedDistribution`].
//!
//! With `W = sum(weights)`, `T = 65536` and `M = T - S`, each symbol first
//! gets `floor(w_i * M / W) + 1`. The `R = T - sum` leftover units then go,
//! one each, to the `R` symbols with the largest remainders
//! `w_i * M mod W`, ties broken toward the lower index. `R < S` always, so
//! no symbol gets more than one extra unit.

use std::cmp::Ordering;

use num_bigint::BigUint;

use crate::coder::{QuantizedDistribution, TOTAL_FREQ};
use crate::error::{Error, Result};

/// Unsigned integer usable as an unnormalized probability weight.
pub trait Weight: Clone + Ord {
    fn from_u64(v: u64) -> Self;
    fn is_zero(&self) -> bool;
    fn checked_add(&self, other: &Self) -> Option<Self>;
    fn checked_mul_u64(&self, m: u64) -> Option<Self>;
    fn div_rem(&self, divisor: &Self) -> (Self, Self);
    /// Number of significant bits.
    fn bit_len(&self) -> u64;
    fn to_u64(&self) -> Option<u64>;
    fn to_u128(&self) -> Option<u128>;
    fn to_big(&self) -> BigUint;
}

impl Weight for u64 {
    fn from_u64(v: u64) -> Self {
        v
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn checked_add(&self, other: &Self) -> Option<Self> {
        u64::checked_add(*self, *other)
    }
    fn checked_mul_u64(&self, m: u64) -> Option<Self> {
        self.checked_mul(m)
    }
    fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        (self / divisor, self % divisor)
    }
    fn bit_len(&self) -> u64 {
        u64::from(64 - self.leading_zeros())
    }
    fn to_u64(&self) -> Option<u64> {
        Some(*self)
    }
    fn to_u128(&self) -> Option<u128> {
        Some(u128::from(*self))
    }
    fn to_big(&self) -> BigUint {
        BigUint::from(*self)
    }
}

impl Weight for u128 {
    fn from_u64(v: u64) -> Self {
        u128::from(v)
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn checked_add(&self, other: &Self) -> Option<Self> {
        u128::checked_add(*self, *other)
    }
    fn checked_mul_u64(&self, m: u64) -> Option<Self> {
        self.checked_mul(u128::from(m))
    }
    fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        (self / divisor, self % divisor)
    }
    fn bit_len(&self) -> u64 {
        u64::from(128 - self.leading_zeros())
    }
    fn to_u64(&self) -> Option<u64> {
        u64::try_from(*self).ok()
    }
    fn to_u128(&self) -> Option<u128> {
        Some(*self)
    }
    fn to_big(&self) -> BigUint {
        BigUint::from(*self)
    }
}

impl Weight for BigUint {
    fn from_u64(v: u64) -> Self {
        BigUint::from(v)
    }
    fn is_zero(&self) -> bool {
        self.bits() == 0
    }
    fn checked_add(&self, other: &Self) -> Option<Self> {
        Some(self + other)
    }
    fn checked_mul_u64(&self, m: u64) -> Option<Self> {
        Some(self * m)
    }
    fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        (self / divisor, self % divisor)
    }
    fn bit_len(&self) -> u64 {
        self.bits()
    }
    fn to_u64(&self) -> Option<u64> {
        u64::try_from(self).ok()
    }
    fn to_u128(&self) -> Option<u128> {
        u128::try_from(self).ok()
    }
    fn to_big(&self) -> BigUint {
        self.clone()
    }
}

/// Quantizes `weights` (one per symbol, `len == alphabet_size`).
pub fn quantize_distribution(weights: &[u64], alphabet_size: usize) -> Result<QuantizedDistribution> {
    if weights.len() != alphabet_size {
        return Err(Error::InvalidDistribution(format!(
            "{} weights for alphabet of size {alphabet_size}",
            weights.len()
        )));
    }
    let mut out = QuantizedDistribution::empty();
    quantize_wide(weights, &mut out)?;
    Ok(out)
}

/// Quantizes into `out`, reusing its storage. Picks the narrowest integer
/// width in which `sum(weights) * (T - S)` cannot overflow; the result does
/// not depend on the width chosen.
pub fn quantize_wide<W: Weight>(weights: &[W], out: &mut QuantizedDistribution) -> Result<()> {
    let s = weights.len();
    if !(2..=TOTAL_FREQ as usize).contains(&s) {
        return Err(Error::InvalidDistribution(format!(
            "alphabet size {s} outside 2..=65536"
        )));
    }
    let spare = u64::from(TOTAL_FREQ) - s as u64;

    let mut total = Some(W::from_u64(0));
    for w in weights {
        total = total.and_then(|t| t.checked_add(w));
    }
    let Some(total) = total else {
        let big: Vec<BigUint> = weights.iter().map(Weight::to_big).collect();
        return quantize_wide(&big, out);
    };
    if total.is_zero() {
        return Err(Error::ZeroWeights);
    }

    // room for total * spare (spare < 2^16)
    let need = total.bit_len() + 16;
    if need <= 64 {
        let w: Vec<u64> = weights.iter().map(|w| w.to_u64().unwrap()).collect();
        quantize_core(&w, total.to_u64().unwrap(), spare, out)
    } else if need <= 128 {
        let w: Vec<u128> = weights.iter().map(|w| w.to_u128().unwrap()).collect();
        quantize_core(&w, total.to_u128().unwrap(), spare, out)
    } else {
        let w: Vec<BigUint> = weights.iter().map(Weight::to_big).collect();
        quantize_core(&w, total.to_big(), spare, out)
    }
}

fn quantize_core<W: Weight>(
    weights: &[W],
    total: W,
    spare: u64,
    out: &mut QuantizedDistribution,
) -> Result<()> {
    let freqs = out.freqs_mut();
    freqs.clear();
    let mut remainders = Vec::with_capacity(weights.len());
    let mut assigned: u64 = 0;
    for w in weights {
        let scaled = w.checked_mul_u64(spare).expect("width chosen to fit");
        let (q, r) = scaled.div_rem(&total);
        // q <= spare < 2^16
        let f = q.to_u64().expect("quotient bounded by spare") + 1;
        assigned += f;
        freqs.push(f as u32);
        remainders.push(r);
    }
    let leftover = (u64::from(TOTAL_FREQ) - assigned) as usize;
    if leftover > 0 {
        let mut order: Vec<u32> = (0..weights.len() as u32).collect();
        let by_remainder = |a: &u32, b: &u32| -> Ordering {
            remainders[*b as usize]
                .cmp(&remainders[*a as usize])
                .then(a.cmp(b))
        };
        if leftover < order.len() {
            order.select_nth_unstable_by(leftover - 1, by_remainder);
        }
        for &i in &order[..leftover] {
            freqs[i as usize] += 1;
        }
    }
    out.rebuild()
}
