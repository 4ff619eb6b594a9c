//! Deterministic numeric plumbing: seeded RNG streams, initializers,
//! activations, and the softmax / cross-entropy pair shared by every model.
//!
//! All randomness flows through ChaCha8 streams derived from `(seed, domain)`
//! so that independent components (per-aspect init, shuffling, dropout) never
//! share or disturb each other's streams, and every run is bit-reproducible.
//! Uniform doubles, normals, and shuffles are built directly on `next_u64`
//! rather than on distribution crates so the byte-level stream is pinned by
//! this crate alone.

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// FNV-1a hash of a byte string; used only for domain separation of RNG
/// streams (stable across platforms and releases, unlike `DefaultHasher`).
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer; scrambles seeds before keying ChaCha.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// A ChaCha8 stream keyed by `(seed, domain)`. Different domains with the
/// same seed give statistically independent, individually reproducible
/// streams.
pub fn rng_for(seed: u64, domain: &str) -> ChaCha8Rng {
    let key = splitmix64(seed ^ fnv1a(domain.as_bytes()));
    ChaCha8Rng::seed_from_u64(key)
}

/// Uniform double in [0, 1) from the top 53 bits of one `next_u64`.
pub fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform double in [lo, hi).
pub fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + uniform01(rng) * (hi - lo)
}

/// Uniform integer in [0, n) by modulo (n is tiny everywhere we shuffle, the
/// modulo bias is irrelevant; determinism is what matters).
pub fn uniform_usize(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Standard normal via Box-Muller on two uniforms (u1 nudged away from 0).
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = uniform01(rng).max(1e-300);
    let u2 = uniform01(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// In-place Fisher-Yates shuffle driven by the given stream.
pub fn shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = uniform_usize(rng, i + 1);
        items.swap(i, j);
    }
}

/// Glorot/Xavier uniform init: entries ~ U(-L, L) with L = sqrt(6/(r+c)).
pub fn glorot_uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| uniform_in(rng, -limit, limit))
}

/// Uniform init with an explicit half-width, for layers whose scale is pinned
/// elsewhere (LSTM gates, near-zero pointer transforms).
pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, limit: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| uniform_in(rng, -limit, limit))
}

/// ReLU, elementwise.
pub fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Row-wise softmax with the max-subtraction trick. Each output row sums to 1.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - m).exp());
        let s: f64 = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    out
}

/// Mean cross-entropy over rows plus its gradient w.r.t. the logits.
///
/// loss = -(1/N) sum_i ln softmax(logits_i)[label_i]
/// dlogits = (softmax - onehot) / N
///
/// Returns (loss, probabilities, dlogits); `probabilities` is the row softmax,
/// reused by callers for accuracy bookkeeping.
pub fn cross_entropy(
    logits: &Array2<f64>,
    labels: &[usize],
) -> (f64, Array2<f64>, Array2<f64>) {
    let n = logits.nrows();
    assert_eq!(labels.len(), n, "one label per logit row");
    let probs = softmax_rows(logits);
    let mut loss = 0.0;
    let mut grad = probs.clone();
    for (i, &y) in labels.iter().enumerate() {
        loss -= probs[[i, y]].max(1e-300).ln();
        grad[[i, y]] -= 1.0;
    }
    let n_f = n as f64;
    (loss / n_f, probs, grad / n_f)
}

/// Argmax of a row, ties broken by the lowest index.
pub fn argmax(row: &Array1<f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in row.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rng_streams_are_reproducible_and_domain_separated() {
        let a: Vec<u64> = (0..4).map(|_| rng_for(7, "init").next_u64()).collect();
        let b: Vec<u64> = (0..4).map(|_| rng_for(7, "init").next_u64()).collect();
        assert_eq!(a, b);
        let mut r1 = rng_for(7, "init");
        let mut r2 = rng_for(7, "shuffle");
        assert_ne!(r1.next_u64(), r2.next_u64());
    }

    #[test]
    fn softmax_rows_sum_to_one_and_shift_invariant() {
        let x = array![[1.0, 2.0, 3.0], [-5.0, 0.0, 5.0]];
        let p = softmax_rows(&x);
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        let shifted = softmax_rows(&(&x + 100.0));
        for (a, b) in p.iter().zip(shifted.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_uniform_logits_is_ln_c() {
        let logits = Array2::zeros((3, 5));
        let (loss, _, _) = cross_entropy(&logits, &[0, 2, 4]);
        assert!((loss - 5.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_difference() {
        let mut rng = rng_for(3, "ce-fd");
        let mut logits = Array2::from_shape_fn((4, 3), |_| uniform_in(&mut rng, -1.0, 1.0));
        let labels = [2, 0, 1, 1];
        let (_, _, grad) = cross_entropy(&logits, &labels);
        let eps = 1e-6;
        for i in 0..4 {
            for j in 0..3 {
                let orig = logits[[i, j]];
                logits[[i, j]] = orig + eps;
                let (lp, _, _) = cross_entropy(&logits, &labels);
                logits[[i, j]] = orig - eps;
                let (lm, _, _) = cross_entropy(&logits, &labels);
                logits[[i, j]] = orig;
                let fd = (lp - lm) / (2.0 * eps);
                assert!((fd - grad[[i, j]]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = rng_for(11, "shuffle-test");
        let mut v: Vec<usize> = (0..50).collect();
        shuffle(&mut rng, &mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn standard_normal_moments_are_sane() {
        let mut rng = rng_for(5, "normal-test");
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
