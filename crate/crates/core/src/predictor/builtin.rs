use std::collections::HashMap;

use num_bigint::BigUint;

use super::quantize::{quantize_wide, Weight};
use super::{Predictor, Turn};
use crate::coder::QuantizedDistribution;
use crate::error::{Error, Result};

fn check_symbol(symbol: u32, alphabet_size: usize) -> Result<()> {
    if (symbol as usize) < alphabet_size {
        Ok(())
    } else {
        Err(Error::SymbolOutOfRange {
            symbol,
            alphabet_size,
        })
    }
}

/// Replays one fixed distribution forever.
#[derive(Debug, Clone)]
pub struct StaticModel {
    dist: QuantizedDistribution,
    turn: Turn,
}

impl StaticModel {
    pub fn new(dist: QuantizedDistribution) -> Self {
        Self {
            dist,
            turn: Turn::default(),
        }
    }
}

impl Predictor for StaticModel {
    fn predict(&mut self) -> Result<&QuantizedDistribution> {
        self.turn.start_predict()?;
        Ok(&self.dist)
    }

    fn observe(&mut self, symbol: u32) -> Result<()> {
        check_symbol(symbol, self.dist.alphabet_size())?;
        self.turn.start_observe()
    }
}

#[derive(Debug, Clone)]
pub struct UniformModel(StaticModel);

impl UniformModel {
    pub fn new(alphabet_size: usize) -> Result<Self> {
        Ok(Self(StaticModel::new(QuantizedDistribution::uniform(alphabet_size)?)))
    }
}

impl Predictor for UniformModel {
    fn predict(&mut self) -> Result<&QuantizedDistribution> {
        self.0.predict()
    }

    fn observe(&mut self, symbol: u32) -> Result<()> {
        self.0.observe(symbol)
    }
}

/// Order-0 frequency counts with add-one smoothing:
/// `P(x) = (count(x) + 1) / (seen + S)`.
#[derive(Debug, Clone)]
pub struct Order0Model {
    counts: Vec<u64>,
    dist: QuantizedDistribution,
    turn: Turn,
}

impl Order0Model {
    pub fn new(alphabet_size: usize) -> Result<Self> {
        if !(2..=65536).contains(&alphabet_size) {
            return Err(Error::InvalidSpec(format!(
                "alphabet size {alphabet_size} outside 2..=65536"
            )));
        }
        Ok(Self {
            counts: vec![0; alphabet_size],
            dist: QuantizedDistribution::empty(),
            turn: Turn::default(),
        })
    }
}

impl Predictor for Order0Model {
    fn predict(&mut self) -> Result<&QuantizedDistribution> {
        self.turn.start_predict()?;
        let weights: Vec<u64> = self.counts.iter().map(|c| c + 1).collect();
        quantize_wide(&weights, &mut self.dist)?;
        Ok(&self.dist)
    }

    fn observe(&mut self, symbol: u32) -> Result<()> {
        check_symbol(symbol, self.counts.len())?;
        self.turn.start_observe()?;
        self.counts[symbol as usize] += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
struct Successors {
    total: u64,
    // (symbol, count), in first-seen order
    counts: Vec<(u32, u64)>,
}

impl Successors {
    fn add(&mut self, symbol: u32) {
        self.total += 1;
        match self.counts.iter_mut().find(|(s, _)| *s == symbol) {
            Some((_, c)) => *c += 1,
            None => self.counts.push((symbol, 1)),
        }
    }
}

/// Interpolated finite-context model of order `k`.
///
/// `P_j(x) = 0.9 * c_j(x) / n_j + 0.1 * P_{j-1}(x)` when the length-`j`
/// context has been seen before, else `P_j = P_{j-1}`; `P_0` is the add-one
/// order-0 estimate. All weights are carried as exact integers:
/// `W_j(x) = n_j * W_{j-1}(x) + 9 * c_j(x) * Z_{j-1}` and
/// `Z_j = 10 * n_j * Z_{j-1}`, so that `P_j = W_j / Z_j`.
#[derive(Debug, Clone)]
pub struct ContextModel {
    alphabet_size: usize,
    order: usize,
    order0: Vec<u64>,
    seen: u64,
    // tables[j - 1] maps a packed length-j context to its successor counts
    tables: Vec<HashMap<u128, Successors>>,
    // most recent symbol last, at most `order` entries
    history: Vec<u32>,
    dist: QuantizedDistribution,
    turn: Turn,
}

const MIX_NUM: u64 = 9;
const MIX_DEN: u64 = 10;

impl ContextModel {
    pub fn new(alphabet_size: usize, order: u32) -> Result<Self> {
        if !(2..=65536).contains(&alphabet_size) {
            return Err(Error::InvalidSpec(format!(
                "alphabet size {alphabet_size} outside 2..=65536"
            )));
        }
        if order > super::MAX_ORDER {
            return Err(Error::InvalidSpec(format!("order {order} exceeds 8")));
        }
        Ok(Self {
            alphabet_size,
            order: order as usize,
            order0: vec![0; alphabet_size],
            seen: 0,
            tables: vec![HashMap::new(); order as usize],
            history: Vec::with_capacity(order as usize),
            dist: QuantizedDistribution::empty(),
            turn: Turn::default(),
        })
    }

    /// Packed keys of the available contexts, shortest first. Symbols fit
    /// in 16 bits and there are at most 8 of them.
    fn context_keys(&self) -> impl Iterator<Item = u128> + '_ {
        self.history
            .iter()
            .rev()
            .enumerate()
            .scan(0u128, |key, (i, &sym)| {
                *key |= u128::from(sym) << (16 * i);
                Some(*key)
            })
    }

    fn weights<W: Weight>(&self) -> Option<Vec<W>> {
        let mut weights: Vec<W> = self.order0.iter().map(|&c| W::from_u64(c + 1)).collect();
        let mut total = W::from_u64(self.seen + self.alphabet_size as u64);
        for (j, key) in self.context_keys().enumerate() {
            let Some(succ) = self.tables[j].get(&key) else {
                continue;
            };
            for w in weights.iter_mut() {
                *w = w.checked_mul_u64(succ.total)?;
            }
            for &(sym, count) in &succ.counts {
                let add = total.checked_mul_u64(MIX_NUM * count)?;
                weights[sym as usize] = weights[sym as usize].checked_add(&add)?;
            }
            total = total.checked_mul_u64(MIX_DEN * succ.total)?;
        }
        Some(weights)
    }
}

impl Predictor for ContextModel {
    fn predict(&mut self) -> Result<&QuantizedDistribution> {
        self.turn.start_predict()?;
        match self.weights::<u128>() {
            Some(w) => quantize_wide(&w, &mut self.dist)?,
            None => {
                let w = self
                    .weights::<BigUint>()
                    .expect("arbitrary precision cannot overflow");
                quantize_wide(&w, &mut self.dist)?
            }
        }
        Ok(&self.dist)
    }

    fn observe(&mut self, symbol: u32) -> Result<()> {
        check_symbol(symbol, self.alphabet_size)?;
        self.turn.start_observe()?;
        self.order0[symbol as usize] += 1;
        self.seen += 1;
        let keys: Vec<u128> = self.context_keys().collect();
        for (j, key) in keys.into_iter().enumerate() {
            self.tables[j].entry(key).or_default().add(symbol);
        }
        if self.order > 0 {
            if self.history.len() == self.order {
                self.history.remove(0);
            }
            self.history.push(symbol);
        }
        Ok(())
    }
}
