//! Aspect graph assembly: adjacency matrices from geometry or relations,
//! symmetric normalization, and node feature matrices per aspect kind.
//!
//! Normalization implements
//!
//!   A_hat = D~^(-1/2) (A + I) D~^(-1/2),   D~(i,i) = sum_j (A + I)(i, j)
//!
//! over a symmetric, non-negative, zero-diagonal adjacency. A_hat is
//! symmetric with spectral radius at most 1, which keeps stacked propagation
//! stable.
//!
//! Six kinds share two adjacency sources: `den1`/`den2`/`appr` use the
//! nearest-two-neighbor geometric edges, `syn1`/`syn2`/`semc` use the page's
//! parent-relation forest (binary, symmetrized). Features: den1 encodes the
//! density ratio, den2 the raw character count (so two pages with identical
//! geometry but different texts share adjacency and den1 but differ in den2),
//! appr/semc carry the 2048/768-wide vectors (inline or hash fallback), and
//! the syntactic kinds are encoded downstream by the Bi-LSTM because their
//! features change while it trains.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{Featurizer, Page};
use crate::encoding::{encode_density_node, ENCODING_DIM};
use crate::geometry::{density_ratio, nearest_two_edges};
use crate::{Error, Result};

/// The six aspect graph kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Den1,
    Den2,
    Appr,
    Syn1,
    Syn2,
    Semc,
}

impl GraphKind {
    pub const ALL: [GraphKind; 6] = [
        GraphKind::Den1,
        GraphKind::Den2,
        GraphKind::Appr,
        GraphKind::Syn1,
        GraphKind::Syn2,
        GraphKind::Semc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Den1 => "den1",
            GraphKind::Den2 => "den2",
            GraphKind::Appr => "appr",
            GraphKind::Syn1 => "syn1",
            GraphKind::Syn2 => "syn2",
            GraphKind::Semc => "semc",
        }
    }

    pub fn from_name(name: &str) -> Option<GraphKind> {
        GraphKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// True for the kinds whose adjacency comes from parent relations.
    pub fn uses_relations(self) -> bool {
        matches!(self, GraphKind::Syn1 | GraphKind::Syn2 | GraphKind::Semc)
    }

    /// Node feature width fed into the first GCN layer.
    pub fn feature_dim(self) -> usize {
        match self {
            GraphKind::Appr => crate::corpus::APPEARANCE_DIM,
            _ => ENCODING_DIM,
        }
    }
}

/// One aspect graph: raw adjacency, its normalized form, and node features.
/// For syntactic kinds `features` holds the encoding current at build time;
/// training loops re-encode as the Bi-LSTM moves.
#[derive(Debug, Clone)]
pub struct AspectGraph {
    pub kind: GraphKind,
    pub adjacency: Array2<f64>,
    pub norm_adjacency: Array2<f64>,
    pub features: Array2<f64>,
}

impl AspectGraph {
    pub fn node_count(&self) -> usize {
        self.adjacency.nrows()
    }
}

/// Symmetric degree normalization with self-loops. The input must be square,
/// symmetric, non-negative, and zero on the diagonal.
pub fn normalize_adjacency(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Contract(format!(
            "adjacency must be square, got {} x {}",
            n,
            a.ncols()
        )));
    }
    for i in 0..n {
        if a[[i, i]] != 0.0 {
            return Err(Error::Contract(format!(
                "adjacency diagonal must be zero, found {} at ({i}, {i})",
                a[[i, i]]
            )));
        }
        for j in 0..n {
            let v = a[[i, j]];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Contract(format!(
                    "adjacency entries must be finite and non-negative, found {v} at ({i}, {j})"
                )));
            }
            if (v - a[[j, i]]).abs() > 1e-12 {
                return Err(Error::Contract(format!(
                    "adjacency must be symmetric, ({i}, {j}) = {v} but ({j}, {i}) = {}",
                    a[[j, i]]
                )));
            }
        }
    }
    // A + I, then D~^(-1/2) (A + I) D~^(-1/2) entrywise.
    let mut tilde = a.clone();
    for i in 0..n {
        tilde[[i, i]] += 1.0;
    }
    let degrees: Vec<f64> = (0..n).map(|i| tilde.row(i).sum()).collect();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut out = tilde;
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    Ok(out)
}

/// Geometric adjacency from the nearest-two-neighbor rule (weights 1/(1+d)).
pub fn geometric_adjacency(page: &Page) -> Array2<f64> {
    let n = page.segments.len();
    let mut a = Array2::zeros((n, n));
    for e in nearest_two_edges(page) {
        a[[e.src, e.dst]] = e.weight;
    }
    a
}

/// Binary symmetric adjacency from parent links. `parents[i]` is the node
/// index of segment i's parent (None for roots); self-links are a contract
/// violation (the corpus validator rejects them earlier).
pub fn relation_adjacency(n: usize, parents: &[Option<usize>]) -> Result<Array2<f64>> {
    if parents.len() != n {
        return Err(Error::Contract(format!(
            "parents length {} does not match node count {n}",
            parents.len()
        )));
    }
    let mut a = Array2::zeros((n, n));
    for (child, parent) in parents.iter().enumerate() {
        if let Some(p) = *parent {
            if p >= n || p == child {
                return Err(Error::Contract(format!(
                    "invalid parent index {p} for node {child}"
                )));
            }
            a[[child, p]] = 1.0;
            a[[p, child]] = 1.0;
        }
    }
    Ok(a)
}

/// Build the two density graphs for a page: shared geometric adjacency,
/// den1 features encode char_count / area, den2 features encode char_count.
pub fn build_density_graphs(page: &Page) -> Result<(AspectGraph, AspectGraph)> {
    let a = geometric_adjacency(page);
    let norm = normalize_adjacency(&a)?;
    let n = page.segments.len();
    let mut den1 = Array2::zeros((n, ENCODING_DIM));
    let mut den2 = Array2::zeros((n, ENCODING_DIM));
    for (i, seg) in page.segments.iter().enumerate() {
        for (j, v) in encode_density_node(density_ratio(seg)).into_iter().enumerate() {
            den1[[i, j]] = v;
        }
        for (j, v) in encode_density_node(seg.char_count as f64).into_iter().enumerate() {
            den2[[i, j]] = v;
        }
    }
    Ok((
        AspectGraph {
            kind: GraphKind::Den1,
            adjacency: a.clone(),
            norm_adjacency: norm.clone(),
            features: den1,
        },
        AspectGraph {
            kind: GraphKind::Den2,
            adjacency: a,
            norm_adjacency: norm,
            features: den2,
        },
    ))
}

/// Build the appearance graph: geometric adjacency plus 2048-wide features
/// (inline vectors or the hash fallback via the featurizer).
pub fn build_appearance_graph(page: &Page, featurizer: &Featurizer) -> Result<AspectGraph> {
    let a = geometric_adjacency(page);
    let norm = normalize_adjacency(&a)?;
    let features = featurizer.appearance_matrix(&page.segments)?;
    Ok(AspectGraph {
        kind: GraphKind::Appr,
        adjacency: a,
        norm_adjacency: norm,
        features,
    })
}

/// Build the semantic graph over the relation forest: binary adjacency plus
/// 768-wide features (inline or fallback). `parents` may come from gold
/// annotations or from the relation predictor.
pub fn build_semantic_graph(
    page: &Page,
    parents: &[Option<usize>],
    featurizer: &Featurizer,
) -> Result<AspectGraph> {
    let a = relation_adjacency(page.segments.len(), parents)?;
    let norm = normalize_adjacency(&a)?;
    let features = featurizer.semantic_matrix(&page.segments)?;
    Ok(AspectGraph {
        kind: GraphKind::Semc,
        adjacency: a,
        norm_adjacency: norm,
        features,
    })
}

/// Sparse export record for one (page, kind) pair: adjacency triplets plus
/// feature shape, for external inspection. Feature matrices are written to a
/// sidecar file referenced here when exports are requested with features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphExport {
    pub page_id: String,
    pub kind: GraphKind,
    pub nodes: usize,
    /// Upper-triangle adjacency triplets (i < j, weight).
    pub edges: Vec<(usize, usize, f64)>,
    pub feature_dim: usize,
    /// Relative path of the JSON file holding the N x feature_dim matrix,
    /// when features were exported.
    pub features_ref: Option<String>,
}

impl GraphExport {
    pub fn from_graph(page_id: &str, g: &AspectGraph, features_ref: Option<String>) -> Self {
        let n = g.node_count();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if g.adjacency[[i, j]] != 0.0 {
                    edges.push((i, j, g.adjacency[[i, j]]));
                }
            }
        }
        GraphExport {
            page_id: page_id.to_string(),
            kind: g.kind,
            nodes: n,
            edges,
            feature_dim: g.features.ncols(),
            features_ref,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BBox, ColumnMode, Segment};
    use crate::math::{rng_for, uniform01, uniform_in, uniform_usize};
    use ndarray::array;

    fn seg(id: &str, bbox: BBox, chars: u64) -> Segment {
        Segment {
            id: id.into(),
            bbox,
            char_count: chars,
            label: "x".into(),
            parse_l1: None,
            parse_l2: None,
            parent_id: None,
            content_key: None,
            semantic_vec: None,
            appearance_vec: None,
        }
    }

    fn page(segs: Vec<Segment>) -> Page {
        Page {
            page_id: "p".into(),
            width: 1000.0,
            height: 1000.0,
            column_mode: ColumnMode::Auto,
            segments: segs,
        }
    }

    #[test]
    fn single_node_normalizes_to_one() {
        let a = Array2::zeros((1, 1));
        let norm = normalize_adjacency(&a).unwrap();
        assert_eq!(norm, array![[1.0]]);
    }

    /// Two nodes, unit edge: A + I is all ones, degrees are 2, so every
    /// normalized entry is 1/2.
    #[test]
    fn two_node_unit_edge_gives_halves() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let norm = normalize_adjacency(&a).unwrap();
        for v in norm.iter() {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    /// Elementwise oracle on random symmetric matrices:
    /// out[i][j] = (A+I)[i][j] / sqrt(deg_i * deg_j).
    #[test]
    fn matches_elementwise_oracle() {
        let mut rng = rng_for(4, "normadj-test");
        for _ in 0..50 {
            let n = 2 + uniform_usize(&mut rng, 6);
            let mut a = Array2::zeros((n, n));
            for i in 0..n {
                for j in (i + 1)..n {
                    if uniform01(&mut rng) < 0.5 {
                        let w = uniform_in(&mut rng, 0.01, 2.0);
                        a[[i, j]] = w;
                        a[[j, i]] = w;
                    }
                }
            }
            let norm = normalize_adjacency(&a).unwrap();
            let deg: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| a[[i, j]]).sum::<f64>() + 1.0)
                .collect();
            for i in 0..n {
                for j in 0..n {
                    let tilde = a[[i, j]] + if i == j { 1.0 } else { 0.0 };
                    let expect = tilde / (deg[i] * deg[j]).sqrt();
                    assert!((norm[[i, j]] - expect).abs() < 1e-12);
                    // Symmetry is preserved exactly.
                    assert_eq!(norm[[i, j]], norm[[j, i]]);
                }
            }
        }
    }

    #[test]
    fn contract_violations_are_rejected() {
        let asym = array![[0.0, 1.0], [0.5, 0.0]];
        assert!(matches!(normalize_adjacency(&asym), Err(Error::Contract(_))));
        let diag = array![[1.0, 0.0], [0.0, 0.0]];
        assert!(matches!(normalize_adjacency(&diag), Err(Error::Contract(_))));
        let neg = array![[0.0, -1.0], [-1.0, 0.0]];
        assert!(matches!(normalize_adjacency(&neg), Err(Error::Contract(_))));
    }

    /// Spectral radius of the normalized matrix is at most 1 (power
    /// iteration on random graphs).
    #[test]
    fn spectral_radius_at_most_one() {
        let mut rng = rng_for(6, "spectral-test");
        for _ in 0..20 {
            let n = 3 + uniform_usize(&mut rng, 5);
            let mut a = Array2::zeros((n, n));
            for i in 0..n {
                for j in (i + 1)..n {
                    if uniform01(&mut rng) < 0.6 {
                        let w = uniform_in(&mut rng, 0.1, 3.0);
                        a[[i, j]] = w;
                        a[[j, i]] = w;
                    }
                }
            }
            let norm = normalize_adjacency(&a).unwrap();
            let mut v = ndarray::Array1::from_elem(n, 1.0 / (n as f64).sqrt());
            let mut lambda = 0.0;
            for _ in 0..200 {
                let w = norm.dot(&v);
                lambda = w.dot(&v);
                let norm_w = w.dot(&w).sqrt();
                if norm_w < 1e-30 {
                    break;
                }
                v = w / norm_w;
            }
            assert!(lambda.abs() <= 1.0 + 1e-6, "spectral radius {lambda}");
        }
    }

    #[test]
    fn single_segment_page_has_identity_graph() {
        let p = page(vec![seg("a", BBox::new(0.0, 0.0, 10.0, 10.0), 50)]);
        let (den1, den2) = build_density_graphs(&p).unwrap();
        assert_eq!(den1.adjacency, Array2::<f64>::zeros((1, 1)));
        assert_eq!(den1.norm_adjacency, array![[1.0]]);
        // ratio = 50 / 100 = 0.5; count = 50.
        let expect1 = encode_density_node(0.5);
        let expect2 = encode_density_node(50.0);
        for j in 0..ENCODING_DIM {
            assert_eq!(den1.features[[0, j]], expect1[j]);
            assert_eq!(den2.features[[0, j]], expect2[j]);
        }
    }

    /// Identical geometry with different texts: same adjacency and den1 is
    /// computed from the same ratios only if counts match; here counts differ
    /// so den2 (and the ratio) differ while adjacency is shared.
    #[test]
    fn density_graphs_separate_geometry_from_text() {
        let geom = |chars_a: u64, chars_b: u64| {
            page(vec![
                seg("a", BBox::new(0.0, 0.0, 10.0, 10.0), chars_a),
                seg("b", BBox::new(0.0, 20.0, 10.0, 30.0), chars_b),
            ])
        };
        let p1 = geom(100, 200);
        let p2 = geom(300, 400);
        let (d1a, d2a) = build_density_graphs(&p1).unwrap();
        let (d1b, d2b) = build_density_graphs(&p2).unwrap();
        assert_eq!(d1a.adjacency, d1b.adjacency);
        assert_ne!(d2a.features, d2b.features);
        assert_ne!(d1a.features, d1b.features); // ratios changed too
    }

    #[test]
    fn relation_adjacency_is_binary_symmetric() {
        // Chain 0 <- 1 <- 2 plus isolated 3.
        let a = relation_adjacency(4, &[None, Some(0), Some(1), None]).unwrap();
        assert_eq!(a[[0, 1]], 1.0);
        assert_eq!(a[[1, 0]], 1.0);
        assert_eq!(a[[1, 2]], 1.0);
        assert_eq!(a[[0, 2]], 0.0);
        assert_eq!(a.row(3).sum(), 0.0);
        // No parents at all: empty edge set.
        let empty = relation_adjacency(3, &[None, None, None]).unwrap();
        assert_eq!(empty.sum(), 0.0);
    }

    #[test]
    fn semantic_graph_uses_fallback_features() {
        let p = page(vec![
            seg("a", BBox::new(0.0, 0.0, 10.0, 10.0), 5),
            seg("b", BBox::new(0.0, 20.0, 10.0, 30.0), 7),
        ]);
        let f = Featurizer::new(11, true);
        let g = build_semantic_graph(&p, &[None, Some(0)], &f).unwrap();
        assert_eq!(g.features.dim(), (2, 768));
        // Unit-norm rows from the hash featurizer.
        for i in 0..2 {
            let n: f64 = g.features.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
        // Disabled fallback on missing vectors is an error.
        let strict = Featurizer::new(11, false);
        assert!(build_semantic_graph(&p, &[None, Some(0)], &strict).is_err());
    }

    #[test]
    fn export_lists_upper_triangle_edges() {
        let p = page(vec![
            seg("a", BBox::new(0.0, 0.0, 10.0, 10.0), 5),
            seg("b", BBox::new(0.0, 12.0, 10.0, 22.0), 7),
            seg("c", BBox::new(0.0, 30.0, 10.0, 40.0), 9),
        ]);
        let (den1, _) = build_density_graphs(&p).unwrap();
        let export = GraphExport::from_graph("p", &den1, None);
        assert_eq!(export.nodes, 3);
        assert!(!export.edges.is_empty());
        for &(i, j, w) in &export.edges {
            assert!(i < j);
            assert!(w > 0.0);
        }
    }
}
