//! Graph-convolutional document layout analysis.
//!
//! A page is a set of text segments with bounding boxes. This crate classifies
//! each segment (paragraph, title, list, ...) by viewing the page as six
//! aspect graphs over the same node set:
//!
//! * `den1`, `den2` — density aspects: nodes carry sinusoidal encodings of the
//!   character-density ratio / raw character count; edges connect each segment
//!   to its two nearest neighbors by vertical (and optionally horizontal) gap,
//!   weighted 1/(1+d).
//! * `appr` — appearance aspect: 2048-dim visual features on the same
//!   nearest-neighbor edges.
//! * `syn1`, `syn2` — syntactic aspects: Bi-LSTM encodings of constituency
//!   symbols (top level and second level), edges from parent-child relations.
//! * `semc` — semantic aspect: 768-dim text features on relation edges.
//!
//! Each aspect graph is pretrained with a two-layer GCN on node classification
//! (`gcn`), hidden representations are pooled pairwise per aspect (`fusion`),
//! projected, concatenated, and classified by a small MLP. Parent relations
//! for unannotated pages are predicted by a transformer pointer model
//! (`relpred`). Everything is seeded and bit-for-bit reproducible.
//!
//! Module map: [`corpus`] (schema, ingestion, fallback features), [`geometry`]
//! (gaps, density, nearest-neighbor edges), [`encoding`] (sinusoidal + Bi-LSTM),
//! [`graphs`] (adjacency + feature assembly), [`gcn`], [`fusion`], [`relpred`],
//! [`eval`] (scoring and harnesses), plus plumbing: [`math`], [`optim`],
//! [`checkpoint`], [`pipeline`], [`synth`] (corpus generators), [`render`].

pub mod checkpoint;
pub mod corpus;
pub mod encoding;
pub mod eval;
pub mod fusion;
pub mod gcn;
pub mod geometry;
pub mod graphs;
pub mod math;
pub mod optim;
pub mod pipeline;
pub mod relpred;
pub mod render;
pub mod synth;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
