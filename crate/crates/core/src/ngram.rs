//! Online interpolated token n-gram model.
//!
//! Order 1 is a Laplace-smoothed unigram. Orders 2 to 4 condition on the
//! previous 1 to 3 tokens and are blended recursively:
//! `P_k = lambda_k * Phat_k + (1 - lambda_k) * P_{k-1}` with
//! `lambda_k = n_k / (n_k + epsilon)`.
//!
//! Context tables are keyed by a 64-bit hash of the context, hold at most
//! [`MAX_SLOTS`] continuations each, and stop admitting new contexts once an
//! order reaches its capacity. Hash collisions merge contexts, which costs a
//! little prediction quality but never losslessness: encoder and decoder
//! collide identically.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use crate::cdf::Distribution;
use crate::scalar::Scalar;

pub const MAX_ORDER: usize = 4;
pub const MAX_SLOTS: usize = 64;
pub const DEFAULT_CAPACITY: usize = 500_000;
pub const DEFAULT_EPSILON: u32 = 5;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the order tag followed by each token's little-endian bytes.
pub fn context_hash(tokens: &[u32], order: usize) -> u64 {
    debug_assert_eq!(tokens.len() + 1, order);
    let mut h = FNV_OFFSET;
    let mut mix = |byte: u8| {
        h ^= u64::from(byte);
        h = h.wrapping_mul(FNV_PRIME);
    };
    mix(order as u8);
    for &t in tokens {
        t.to_le_bytes().into_iter().for_each(&mut mix);
    }
    h
}

/// Keys are already well-mixed hashes; pass them through.
#[derive(Default)]
struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 << 8) | u64::from(b);
        }
    }

    fn write_u64(&mut self, n: u64) {
        self.0 = n;
    }
}

type ContextTable = HashMap<u64, Context, BuildHasherDefault<KeyHasher>>;

#[derive(Clone, Debug, Default)]
struct Context {
    /// Times this context was observed, including evicted continuations.
    total: u32,
    slots: Vec<(u32, u32)>,
}

impl Context {
    fn observe(&mut self, token: u32) {
        self.total = self.total.saturating_add(1);
        if let Some(slot) = self.slots.iter_mut().find(|(t, _)| *t == token) {
            slot.1 = slot.1.saturating_add(1);
        } else if self.slots.len() < MAX_SLOTS {
            self.slots.push((token, 1));
        } else {
            let mut victim = 0;
            for (i, slot) in self.slots.iter().enumerate().skip(1) {
                if slot.1 < self.slots[victim].1 {
                    victim = i;
                }
            }
            self.slots[victim] = (token, 1);
        }
    }
}

#[derive(Clone, Debug)]
pub struct NgramModel {
    vocab: usize,
    unigram: Vec<u32>,
    seen: u64,
    /// Tables for orders 2, 3 and 4.
    tables: [ContextTable; MAX_ORDER - 1],
    capacity: usize,
    epsilon: u32,
    recent: Vec<u32>,
}

impl NgramModel {
    pub fn new(vocab: usize) -> Self {
        Self::with_capacity(vocab, DEFAULT_CAPACITY)
    }

    pub fn with_capacity(vocab: usize, capacity: usize) -> Self {
        Self {
            vocab,
            unigram: vec![0; vocab],
            seen: 0,
            tables: Default::default(),
            capacity,
            epsilon: DEFAULT_EPSILON,
            recent: Vec::with_capacity(MAX_ORDER - 1),
        }
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    /// Tokens observed so far.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    fn context_key(&self, order: usize) -> Option<u64> {
        let len = order - 1;
        (self.recent.len() >= len).then(|| context_hash(&self.recent[self.recent.len() - len..], order))
    }

    /// Interpolated prediction for the token following the recent history.
    pub fn predict<F: Scalar>(&self) -> Distribution<F> {
        let denom = F::from_u64(self.seen + self.vocab as u64).unwrap();
        let mut probs: Vec<F> = self
            .unigram
            .iter()
            .map(|&c| F::from_u64(u64::from(c) + 1).unwrap() / denom)
            .collect();

        let eps = F::from_u32(self.epsilon).unwrap();
        for order in 2..=MAX_ORDER {
            let Some(ctx) = self.context_key(order).and_then(|k| self.tables[order - 2].get(&k)) else {
                continue;
            };
            if ctx.total == 0 {
                continue;
            }
            let n = F::from_u32(ctx.total).unwrap();
            let lambda = n / (n + eps);
            let surviving: u64 = ctx.slots.iter().map(|&(_, c)| u64::from(c)).sum();
            // mass of evicted continuations falls back to the lower order
            let keep = F::one() - lambda * F::from_u64(surviving).unwrap() / n;
            probs.iter_mut().for_each(|p| *p = *p * keep);
            for &(t, c) in &ctx.slots {
                probs[t as usize] = probs[t as usize] + lambda * F::from_u32(c).unwrap() / n;
            }
        }
        Distribution::from_vec_unchecked(probs)
    }

    pub fn update(&mut self, token: u32) {
        debug_assert!((token as usize) < self.vocab);
        for order in 2..=MAX_ORDER {
            let Some(key) = self.context_key(order) else {
                continue;
            };
            let table = &mut self.tables[order - 2];
            if let Some(ctx) = table.get_mut(&key) {
                ctx.observe(token);
            } else if table.len() < self.capacity {
                table.entry(key).or_default().observe(token);
            }
        }
        self.unigram[token as usize] = self.unigram[token as usize].saturating_add(1);
        self.seen += 1;
        if self.recent.len() == MAX_ORDER - 1 {
            self.recent.remove(0);
        }
        self.recent.push(token);
    }

    /// Number of stored contexts for `order` (2..=4).
    pub fn context_count(&self, order: usize) -> usize {
        self.tables[order - 2].len()
    }

    /// Stored continuation slots over all orders.
    pub fn slot_count(&self) -> usize {
        self.tables
            .iter()
            .flat_map(|t| t.values())
            .map(|c| c.slots.len())
            .sum()
    }

    /// `(observations, continuations)` recorded for an explicit context.
    pub fn continuations(&self, context: &[u32]) -> Option<(u32, &[(u32, u32)])> {
        let order = context.len() + 1;
        if !(2..=MAX_ORDER).contains(&order) {
            return None;
        }
        self.tables[order - 2]
            .get(&context_hash(context, order))
            .map(|c| (c.total, c.slots.as_slice()))
    }
}
