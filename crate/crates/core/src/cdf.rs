//! Probability vectors and their integer CDF quantization.
//!
//! Every symbol gets at least [`MIN_PROB`] counts so the arithmetic coder
//! never sees a zero-width interval. The remaining `T - V` counts are handed
//! out proportionally and the rounding residual lands on the most likely
//! symbol.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Minimum count assigned to every symbol.
pub const MIN_PROB: u32 = 1;

/// 16-bit CDF precision.
pub const CDF_16: u32 = 1 << 16;

/// 24-bit CDF precision, the default.
pub const CDF_24: u32 = 1 << 24;

/// A dense probability vector over a token vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<F = f64> {
    probs: Vec<F>,
}

impl<F: Scalar> Distribution<F> {
    /// Validates non-negativity, finiteness and unit mass.
    pub fn new(probs: Vec<F>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty vocabulary".into()));
        }
        let mut sum = F::zero();
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < F::zero() {
                return Err(Error::InvalidDistribution(format!("entry {i} is {p:?}")));
            }
            sum = sum + p;
        }
        if (sum - F::one()).abs() > F::sum_tolerance(probs.len()) {
            return Err(Error::InvalidDistribution(format!("mass {sum:?}")));
        }
        Ok(Self { probs })
    }

    /// Wraps a vector the caller already knows to be a valid distribution.
    pub fn from_vec_unchecked(probs: Vec<F>) -> Self {
        debug_assert!(!probs.is_empty());
        Self { probs }
    }

    /// Normalizes non-negative weights. Returns `None` if the weights sum to
    /// zero or are not finite.
    pub fn from_weights(mut weights: Vec<F>) -> Option<Self> {
        let sum: F = weights.iter().copied().sum();
        if !sum.is_finite() || sum <= F::zero() {
            return None;
        }
        weights.iter_mut().for_each(|w| *w = *w / sum);
        Some(Self { probs: weights })
    }

    pub fn uniform(vocab: usize) -> Self {
        let p = F::one() / F::from_usize(vocab).unwrap();
        Self {
            probs: vec![p; vocab],
        }
    }

    pub fn one_hot(vocab: usize, token: usize) -> Self {
        let mut probs = vec![F::zero(); vocab];
        probs[token] = F::one();
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn get(&self, token: usize) -> F {
        self.probs[token]
    }

    pub fn into_vec(self) -> Vec<F> {
        self.probs
    }

    /// Index of the largest probability, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn cast<G: Scalar>(&self) -> Distribution<G> {
        Distribution {
            probs: self.probs.iter().map(|p| G::from(*p).unwrap()).collect(),
        }
    }
}

/// Integer cumulative counts `cum[0] = 0 < cum[1] < ... < cum[V] = T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedCdf {
    cum: Vec<u32>,
}

impl QuantizedCdf {
    /// Builds a CDF from per-symbol counts; every count must be at least
    /// [`MIN_PROB`] and the total must fit in 32 bits.
    pub fn from_counts(counts: &[u32]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidDistribution("empty vocabulary".into()));
        }
        let mut cum = Vec::with_capacity(counts.len() + 1);
        let mut acc = 0u64;
        cum.push(0);
        for &c in counts {
            if c < MIN_PROB {
                return Err(Error::CoderIntegrity("zero-width symbol interval".into()));
            }
            acc += u64::from(c);
            if acc > u64::from(u32::MAX) {
                return Err(Error::CoderIntegrity("CDF total exceeds 32 bits".into()));
            }
            cum.push(acc as u32);
        }
        Ok(Self { cum })
    }

    pub fn total(&self) -> u32 {
        *self.cum.last().unwrap()
    }

    pub fn vocab(&self) -> usize {
        self.cum.len() - 1
    }

    pub fn cumulative(&self) -> &[u32] {
        &self.cum
    }

    pub fn count(&self, sym: usize) -> u32 {
        self.cum[sym + 1] - self.cum[sym]
    }

    /// Half-open interval `[lo, hi)` of `sym`.
    pub fn interval(&self, sym: usize) -> (u32, u32) {
        (self.cum[sym], self.cum[sym + 1])
    }

    /// Symbol whose interval contains `scaled`, by binary search.
    pub fn find(&self, scaled: u32) -> usize {
        find_symbol(&self.cum, scaled)
    }
}

/// Largest `s` with `cum[s] <= scaled`, clamped to the last symbol.
pub fn find_symbol(cum: &[u32], scaled: u32) -> usize {
    let v = cum.len() - 1;
    // partition_point gives the first index with cum[i] > scaled
    let idx = cum.partition_point(|&c| c <= scaled);
    idx.saturating_sub(1).min(v - 1)
}

/// Quantizes `p` to integer counts summing to `total`:
/// `c_i = max(1, floor(p_i * (T - V)))`, residual to the argmax symbol.
pub fn quantize<F: Scalar>(p: &Distribution<F>, total: u32) -> Result<QuantizedCdf> {
    let vocab = p.len();
    if u64::from(total) <= vocab as u64 {
        return Err(Error::PrecisionInfeasible { vocab, total });
    }
    let spare = u64::from(total) - vocab as u64;
    let scale = F::from_u64(spare).unwrap();

    let mut counts: Vec<u32> = Vec::with_capacity(vocab);
    let mut sum = 0u64;
    for &pi in p.probs() {
        let raw = (pi * scale).floor().to_u64().unwrap_or(0).min(spare);
        let c = raw.max(u64::from(MIN_PROB));
        sum += c;
        counts.push(c as u32);
    }

    let top = p.argmax();
    let total = u64::from(total);
    if sum <= total {
        counts[top] += (total - sum) as u32;
    } else {
        let excess = sum - total;
        let current = u64::from(counts[top]);
        if current < excess + u64::from(MIN_PROB) {
            return Err(Error::CoderIntegrity(format!(
                "cannot remove {excess} excess counts from symbol {top}"
            )));
        }
        counts[top] = (current - excess) as u32;
    }
    QuantizedCdf::from_counts(&counts)
}

/// Share of the CDF range consumed by unit floors, `V * MIN_PROB / T`.
pub fn floor_fraction(vocab: usize, total: u64) -> f64 {
    vocab as f64 * f64::from(MIN_PROB) / total as f64
}

/// Approximate per-token cost of the floors for a peaked distribution,
/// `log2(T / (T - V))`.
pub fn floor_overhead_bits(vocab: usize, total: u64) -> f64 {
    let t = total as f64;
    (t / (t - vocab as f64)).log2()
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy_bits<F: Scalar>(p: &Distribution<F>) -> F {
    let mut h = F::zero();
    for &pi in p.probs() {
        if pi > F::zero() {
            h = h - pi * pi.log2();
        }
    }
    h
}
