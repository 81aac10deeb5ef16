//! Deterministic sampling primitives shared by the dataset builder and the
//! bootstrap test.
//!
//! Reproducibility contract, stable across platforms and crate versions:
//!
//! * PRNG: ChaCha20 (`rand_chacha::ChaCha20Rng`), seeded with
//!   `seed_from_u64(seed)`.
//! * Bounded index: `next_u64() % n`. The modulo bias is below 2^-50 for any
//!   `n` this toolkit samples over and keeps the stream specifiable without
//!   reference to rejection-sampling internals.
//! * Shuffle / without-replacement selection: Fisher-Yates as written in
//!   [`shuffle`] and [`sample_indices`].
//! * Stream labels: independent streams derived from one run seed use
//!   `seed ^ fnv1a64(label)`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// FNV-1a over the label bytes; used to derive per-stream seeds.
pub fn fnv1a64(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn derive_seed(seed: u64, label: &str) -> u64 {
    seed ^ fnv1a64(label)
}

/// Uniform index in `0..n`. `n` must be nonzero.
pub fn index_below(rng: &mut ChaCha20Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    (rng.next_u64() % n as u64) as usize
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(items: &mut [T], rng: &mut ChaCha20Rng) {
    let n = items.len();
    for i in 0..n.saturating_sub(1) {
        let j = i + index_below(rng, n - i);
        items.swap(i, j);
    }
}

/// First `count` positions of a Fisher-Yates shuffle of `0..n`: a uniform
/// sample without replacement, in draw order.
pub fn sample_indices(n: usize, count: usize, rng: &mut ChaCha20Rng) -> Vec<usize> {
    assert!(count <= n, "cannot sample {count} of {n} without replacement");
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = i + index_below(rng, n - i);
        idx.swap(i, j);
    }
    idx.truncate(count);
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn sample_is_without_replacement_and_deterministic() {
        let mut rng = rng_from_seed(9);
        let picked = sample_indices(100, 40, &mut rng);
        assert_eq!(picked.len(), 40);
        assert_eq!(picked.iter().collect::<HashSet<_>>().len(), 40);
        assert!(picked.iter().all(|&i| i < 100));

        let mut rng2 = rng_from_seed(9);
        assert_eq!(picked, sample_indices(100, 40, &mut rng2));

        let mut rng3 = rng_from_seed(10);
        assert_ne!(picked, sample_indices(100, 40, &mut rng3));
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut v: Vec<u32> = (0..50).collect();
        let mut rng = rng_from_seed(4);
        shuffle(&mut v, &mut rng);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn fnv_matches_reference_vector() {
        // FNV-1a test vectors: empty string and "a".
        assert_eq!(fnv1a64(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64("a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn full_sample_is_permutation() {
        let mut rng = rng_from_seed(1);
        let all = sample_indices(10, 10, &mut rng);
        let mut sorted = all.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
    }
}
