//! Deterministic fallback features for segments without inline vectors.
//!
//! Corpora rarely ship precomputed text/vision embeddings. When a segment has
//! no `semantic_vec` or `appearance_vec`, the pipeline fills the gap with a
//! hash feature: a unit-norm pseudo-random vector that is a pure function of
//! (segment content signature, seed, dim). The signature is the segment's
//! `content_key` when the corpus provides one — so segments with identical
//! content share a feature vector, the way identical texts share an
//! embedding — and otherwise falls back to the segment's id bytes, char
//! count, and bbox bits, which identify the segment within the schema. Same
//! signature and seed always produce the same vector; changing the seed
//! produces an unrelated one.

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use sha2::{Digest, Sha256};

use crate::corpus::{Segment, APPEARANCE_DIM, SEMANTIC_DIM};
use crate::math::standard_normal;
use crate::{Error, Result};

/// Unit-L2-norm feature vector for a segment, deterministic in
/// (segment signature, seed, dim).
pub fn hash_featurize(seg: &Segment, dim: usize, seed: u64) -> Vec<f64> {
    let mut hasher = Sha256::new();
    hasher.update(b"layoutgcn.hashfeat.v1");
    hasher.update(seed.to_le_bytes());
    hasher.update((dim as u64).to_le_bytes());
    match &seg.content_key {
        Some(key) => {
            hasher.update(b"content");
            hasher.update(key.as_bytes());
        }
        None => {
            hasher.update((seg.id.len() as u64).to_le_bytes());
            hasher.update(seg.id.as_bytes());
            hasher.update(seg.char_count.to_le_bytes());
            for coord in [seg.bbox.x1, seg.bbox.y1, seg.bbox.x2, seg.bbox.y2] {
                hasher.update(coord.to_bits().to_le_bytes());
            }
        }
    }
    let digest: [u8; 32] = hasher.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(digest);
    let mut v: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-12 {
        for x in &mut v {
            *x /= norm;
        }
    } else if dim > 0 {
        v[0] = 1.0; // unreachable in practice; keeps the unit-norm contract
    }
    v
}

/// Resolves per-segment semantic/appearance features, falling back to hash
/// features when the corpus has no inline vector and the fallback is enabled.
#[derive(Debug, Clone, Copy)]
pub struct Featurizer {
    seed: u64,
    fallback_enabled: bool,
}

impl Featurizer {
    pub fn new(seed: u64, fallback_enabled: bool) -> Self {
        Featurizer {
            seed,
            fallback_enabled,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn semantic(&self, seg: &Segment) -> Result<Vec<f64>> {
        match &seg.semantic_vec {
            Some(v) => Ok(v.clone()),
            None if self.fallback_enabled => Ok(hash_featurize(seg, SEMANTIC_DIM, self.seed)),
            None => Err(Error::Data(format!(
                "segment {}: semantic_vec missing and fallback featurizer disabled",
                seg.id
            ))),
        }
    }

    pub fn appearance(&self, seg: &Segment) -> Result<Vec<f64>> {
        match &seg.appearance_vec {
            Some(v) => Ok(v.clone()),
            None if self.fallback_enabled => Ok(hash_featurize(seg, APPEARANCE_DIM, self.seed)),
            None => Err(Error::Data(format!(
                "segment {}: appearance_vec missing and fallback featurizer disabled",
                seg.id
            ))),
        }
    }

    /// Stack semantic features for all segments into an N x 768 matrix.
    pub fn semantic_matrix(&self, segs: &[Segment]) -> Result<Array2<f64>> {
        stack(segs, SEMANTIC_DIM, |s| self.semantic(s))
    }

    /// Stack appearance features for all segments into an N x 2048 matrix.
    pub fn appearance_matrix(&self, segs: &[Segment]) -> Result<Array2<f64>> {
        stack(segs, APPEARANCE_DIM, |s| self.appearance(s))
    }
}

fn stack(
    segs: &[Segment],
    dim: usize,
    f: impl Fn(&Segment) -> Result<Vec<f64>>,
) -> Result<Array2<f64>> {
    let mut m = Array2::zeros((segs.len(), dim));
    for (i, seg) in segs.iter().enumerate() {
        let v = f(seg)?;
        for (j, x) in v.into_iter().enumerate() {
            m[[i, j]] = x;
        }
    }
    Ok(m)
}
