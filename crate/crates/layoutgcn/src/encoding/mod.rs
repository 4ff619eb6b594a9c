//! Node feature encoders: sinusoidal scalar encodings, the constituency
//! symbol table, and Bi-LSTM sequence encoding for syntactic features.
//!
//! The scalar encoder is the classic interleaved sin/cos code,
//!
//!   out[2k]   = sin(t / 10000^(2k/dim))
//!   out[2k+1] = cos(t / 10000^(2k/dim))
//!
//! applied to density ratios, character counts, and constituency symbol
//! indices alike (dimension 768 in the pipeline). Symbol sequences are
//! embedded row-per-symbol, padded with zero rows to a fixed length (16), and
//! run through a single-layer Bi-LSTM whose forward/backward final hidden
//! states (384 each) concatenate to a 768-wide node feature. Padding rows are
//! part of the recurrence — there is no masking — which is exactly why the
//! pad length is part of the model contract.

pub mod bilstm;

pub use bilstm::{BiLstmCache, BiLstmGrads, BiLstmParams};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::Segment;
use crate::{Error, Result};

/// Feature width shared by the scalar and syntactic encoders.
pub const ENCODING_DIM: usize = 768;
/// Bi-LSTM hidden width per direction (2 * 384 = 768 output).
pub const LSTM_HIDDEN: usize = 384;
/// Fixed symbol-sequence length after pad/truncate.
pub const PAD_LEN: usize = 16;

/// Interleaved sin/cos encoding of a scalar. `dim` must be even.
pub fn sinusoidal_encode(t: f64, dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || dim % 2 != 0 {
        return Err(Error::Contract(format!(
            "sinusoidal encoding width must be even and positive, got {dim}"
        )));
    }
    let mut out = vec![0.0; dim];
    for k in 0..dim / 2 {
        let denom = 10000_f64.powf(2.0 * k as f64 / dim as f64);
        let angle = t / denom;
        out[2 * k] = angle.sin();
        out[2 * k + 1] = angle.cos();
    }
    Ok(out)
}

/// 768-wide sinusoidal encoding of a density value (ratio or raw count).
pub fn encode_density_node(value: f64) -> Vec<f64> {
    sinusoidal_encode(value, ENCODING_DIM).expect("ENCODING_DIM is even")
}

/// Which constituency level a syntactic aspect reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseLevel {
    /// Top-level symbol (`parse_l1`), a single-element sequence.
    L1,
    /// Second-level symbols (`parse_l2`).
    L2,
}

/// Fixed inventory of constituency phrase/clause symbols with UNK at index 0.
///
/// The inventory is the standard Penn Treebank phrase and clause label set;
/// unknown or missing symbols map to UNK. The table is serialized with
/// checkpoints so the index space travels with trained models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolTable {
    symbols: Vec<String>,
}

const PTB_SYMBOLS: [&str; 26] = [
    "S", "SBAR", "SBARQ", "SINV", "SQ", "NP", "VP", "PP", "ADJP", "ADVP", "CONJP", "FRAG",
    "INTJ", "LST", "NAC", "NX", "PRN", "PRT", "QP", "RRC", "UCP", "WHADJP", "WHADVP", "WHNP",
    "WHPP", "X",
];

impl Default for SymbolTable {
    fn default() -> Self {
        let mut symbols = vec!["UNK".to_string()];
        symbols.extend(PTB_SYMBOLS.iter().map(|s| s.to_string()));
        SymbolTable { symbols }
    }
}

impl SymbolTable {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Index of a symbol; unknown symbols map to UNK (0).
    pub fn index_of(&self, symbol: &str) -> usize {
        self.symbols
            .iter()
            .position(|s| s == symbol)
            .unwrap_or(0)
    }

    /// The symbol-index sequence a segment contributes at a parse level.
    /// Missing or empty parses become a single UNK.
    pub fn symbol_sequence(&self, seg: &Segment, level: ParseLevel) -> Vec<usize> {
        match level {
            ParseLevel::L1 => vec![seg
                .parse_l1
                .as_deref()
                .map_or(0, |s| self.index_of(s))],
            ParseLevel::L2 => match &seg.parse_l2 {
                Some(syms) if !syms.is_empty() => {
                    syms.iter().map(|s| self.index_of(s)).collect()
                }
                _ => vec![0],
            },
        }
    }
}

/// Embed a symbol-index sequence as a PAD_LEN x ENCODING_DIM matrix: one
/// sinusoidal row per symbol (truncated at PAD_LEN), zero rows after.
pub fn embed_symbol_sequence(indices: &[usize]) -> Array2<f64> {
    let mut m = Array2::zeros((PAD_LEN, ENCODING_DIM));
    for (t, &idx) in indices.iter().take(PAD_LEN).enumerate() {
        let row = sinusoidal_encode(idx as f64, ENCODING_DIM).expect("even dim");
        for (j, v) in row.into_iter().enumerate() {
            m[[t, j]] = v;
        }
    }
    m
}

/// Encode one segment's syntactic feature: embed its symbol sequence and run
/// the Bi-LSTM. Returns a 768-wide vector.
pub fn encode_syntactic_node(
    seg: &Segment,
    level: ParseLevel,
    table: &SymbolTable,
    params: &BiLstmParams,
) -> Result<Vec<f64>> {
    let seq = embed_symbol_sequence(&table.symbol_sequence(seg, level));
    let (out, _) = params.forward_batch(&[&seq])?;
    Ok(out.row(0).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::BBox;
    use crate::math::rng_for;

    #[test]
    fn zero_input_gives_alternating_zero_one() {
        let v = sinusoidal_encode(0.0, 8).unwrap();
        assert_eq!(v, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn sin_cos_pairs_are_pythagorean() {
        for &t in &[0.3, 1.0, 17.5, 4096.0] {
            let v = sinusoidal_encode(t, 768).unwrap();
            for k in 0..384 {
                let s = v[2 * k] * v[2 * k] + v[2 * k + 1] * v[2 * k + 1];
                assert!((s - 1.0).abs() < 1e-12, "t={t} k={k}");
            }
        }
    }

    #[test]
    fn distinct_scalars_encode_apart() {
        let a = sinusoidal_encode(1.0, 768).unwrap();
        let b = sinusoidal_encode(1000.0, 768).unwrap();
        let dist: f64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!(dist > 0.1, "L2 distance {dist}");
    }

    #[test]
    fn odd_width_is_rejected() {
        assert!(matches!(
            sinusoidal_encode(1.0, 7),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn symbol_table_has_unk_at_zero_and_finds_symbols() {
        let t = SymbolTable::default();
        assert_eq!(t.index_of("UNK"), 0);
        assert_eq!(t.index_of("definitely-not-a-symbol"), 0);
        assert!(t.index_of("NP") > 0);
        assert_ne!(t.index_of("NP"), t.index_of("VP"));
        assert_eq!(t.len(), 27);
    }

    fn seg_with_parses(l1: Option<&str>, l2: Option<Vec<&str>>) -> Segment {
        Segment {
            id: "s".into(),
            bbox: BBox::new(0.0, 0.0, 1.0, 1.0),
            char_count: 1,
            label: "x".into(),
            parse_l1: l1.map(String::from),
            parse_l2: l2.map(|v| v.into_iter().map(String::from).collect()),
            parent_id: None,
            content_key: None,
            semantic_vec: None,
            appearance_vec: None,
        }
    }

    #[test]
    fn symbol_sequences_fall_back_to_unk() {
        let t = SymbolTable::default();
        let full = seg_with_parses(Some("S"), Some(vec!["NP", "VP"]));
        assert_eq!(t.symbol_sequence(&full, ParseLevel::L1), vec![t.index_of("S")]);
        assert_eq!(
            t.symbol_sequence(&full, ParseLevel::L2),
            vec![t.index_of("NP"), t.index_of("VP")]
        );
        let bare = seg_with_parses(None, None);
        assert_eq!(t.symbol_sequence(&bare, ParseLevel::L1), vec![0]);
        assert_eq!(t.symbol_sequence(&bare, ParseLevel::L2), vec![0]);
        let empty = seg_with_parses(None, Some(vec![]));
        assert_eq!(t.symbol_sequence(&empty, ParseLevel::L2), vec![0]);
    }

    #[test]
    fn embedding_pads_with_zero_rows_and_truncates() {
        let m = embed_symbol_sequence(&[1, 2]);
        assert_eq!(m.dim(), (PAD_LEN, ENCODING_DIM));
        assert!(m.row(0).iter().any(|&v| v != 0.0));
        assert!(m.row(1).iter().any(|&v| v != 0.0));
        for t in 2..PAD_LEN {
            assert!(m.row(t).iter().all(|&v| v == 0.0), "row {t} not zero");
        }
        let long = embed_symbol_sequence(&vec![3; PAD_LEN + 9]);
        assert_eq!(long.dim(), (PAD_LEN, ENCODING_DIM));
    }

    #[test]
    fn syntactic_encoding_distinguishes_levels_and_matches_direct_call() {
        let table = SymbolTable::default();
        let mut rng = rng_for(5, "enc-test");
        let params = BiLstmParams::new(ENCODING_DIM, LSTM_HIDDEN, &mut rng);
        let seg = seg_with_parses(Some("NP"), Some(vec!["NP", "PP"]));
        let v1 = encode_syntactic_node(&seg, ParseLevel::L1, &table, &params).unwrap();
        let v2 = encode_syntactic_node(&seg, ParseLevel::L2, &table, &params).unwrap();
        assert_eq!(v1.len(), 768);
        assert_ne!(v1, v2);
        // Same as embedding + forward by hand.
        let seq = embed_symbol_sequence(&table.symbol_sequence(&seg, ParseLevel::L1));
        let (out, _) = params.forward_batch(&[&seq]).unwrap();
        assert_eq!(v1, out.row(0).to_vec());
    }
}
