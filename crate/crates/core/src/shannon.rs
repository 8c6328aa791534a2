//! Empirical order-k byte entropy, a classical compressibility reference.

use std::collections::HashMap;

/// Conditional entropy in bits per byte of each byte given its `order`
/// predecessors, estimated from counts over positions `order..len`.
///
/// Returns 0 when there is no position to estimate from.
pub fn shannon_entropy(data: &[u8], order: usize) -> f64 {
    assert!(order <= 7, "context must fit in 56 bits");
    if data.len() <= order {
        return 0.0;
    }
    let mask = if order == 0 { 0 } else { u64::MAX >> (64 - 8 * order) };
    let mut joint: HashMap<u64, u64> = HashMap::new();
    let mut marginal: HashMap<u64, u64> = HashMap::new();
    let mut ctx = 0u64;
    for (i, &b) in data.iter().enumerate() {
        if i >= order {
            *joint.entry((ctx << 8) | u64::from(b)).or_default() += 1;
            *marginal.entry(ctx).or_default() += 1;
        }
        ctx = ((ctx << 8) | u64::from(b)) & mask;
    }
    let n = (data.len() - order) as f64;
    let bits: f64 = joint
        .iter()
        .map(|(&key, &c)| {
            let c = c as f64;
            c * (marginal[&(key >> 8)] as f64 / c).log2()
        })
        .sum();
    bits / n
}
