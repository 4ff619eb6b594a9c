//! Canonical page schema, strict ingestion, and label bookkeeping.
//!
//! The interchange format is JSON Lines, one page object per line:
//!
//! ```json
//! {"page_id": "p1", "width": 612.0, "height": 792.0, "column_mode": "auto",
//!  "segments": [{"id": "s0", "bbox": [40.0, 50.0, 300.0, 90.0],
//!                "char_count": 120, "label": "paragraph",
//!                "parse_l1": "S", "parse_l2": ["NP", "VP"],
//!                "parent_id": null, "semantic_vec": null, "appearance_vec": null}]}
//! ```
//!
//! Ingestion is strict: malformed lines are rejected with their 1-based line
//! number and the offending field, never repaired. Validated invariants:
//! bboxes are finite with x1 < x2, y1 < y2 and lie inside the page; segment
//! ids are unique per page (page ids unique per corpus); `parent_id` points at
//! an existing, different segment and the parent links form a forest (checked
//! by union-find); inline feature vectors have the pinned widths (768
//! semantic, 2048 appearance) and finite entries.
//!
//! Serialization is lossless for in-schema fields: `read(write(pages)) ==
//! pages` exactly (f64 values survive JSON round-trips bit-for-bit).

mod featurize;
mod funsd;

pub use featurize::{hash_featurize, Featurizer};
pub use funsd::{ingest_funsd, FunsdSplit};

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Width of semantic feature vectors (inline or fallback).
pub const SEMANTIC_DIM: usize = 768;
/// Width of appearance feature vectors (inline or fallback).
pub const APPEARANCE_DIM: usize = 2048;

/// Column layout of a page; governs whether nearest-neighbor edge building
/// adds the horizontal candidate. `Auto` is the default choice for corpora
/// that do not annotate columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnMode {
    Single,
    Double,
    Auto,
}

/// Axis-aligned bounding box in page coordinates, y growing downward.
/// Serialized as `[x1, y1, x2, y2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        BBox {
            x1: v[0],
            y1: v[1],
            x2: v[2],
            y2: v[3],
        }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        BBox { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    fn validate(&self, field_ctx: &str) -> Result<()> {
        let vals = [self.x1, self.y1, self.x2, self.y2];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("{field_ctx}: bbox has non-finite coordinate")));
        }
        if self.x1 >= self.x2 || self.y1 >= self.y2 {
            return Err(Error::Data(format!(
                "{field_ctx}: bbox must satisfy x1 < x2 and y1 < y2, got [{}, {}, {}, {}]",
                self.x1, self.y1, self.x2, self.y2
            )));
        }
        Ok(())
    }
}

/// One laid-out text region of a page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub id: String,
    pub bbox: BBox,
    /// Number of non-whitespace characters in the segment's text.
    pub char_count: u64,
    /// Gold layout category name.
    pub label: String,
    /// Top-level constituency symbol of the segment text, if parsed.
    #[serde(default)]
    pub parse_l1: Option<String>,
    /// Second-level constituency symbols, if parsed.
    #[serde(default)]
    pub parse_l2: Option<Vec<String>>,
    /// Id of the parent segment in the page's relation forest.
    #[serde(default)]
    pub parent_id: Option<String>,
    /// Content signature for the fallback featurizer: segments sharing a
    /// key share hash features (e.g. identical texts). Without it the
    /// segment's identity (id, char count, bbox) is the signature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_key: Option<String>,
    /// Inline semantic feature vector (width 768) if the corpus provides one.
    #[serde(default)]
    pub semantic_vec: Option<Vec<f64>>,
    /// Inline appearance feature vector (width 2048) if the corpus provides one.
    #[serde(default)]
    pub appearance_vec: Option<Vec<f64>>,
}

/// One document page: geometry plus its segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Page {
    pub page_id: String,
    pub width: f64,
    pub height: f64,
    pub column_mode: ColumnMode,
    pub segments: Vec<Segment>,
}

impl Page {
    /// Index of a segment id within this page, if present.
    pub fn segment_index(&self, id: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.id == id)
    }

    /// Parent links as node indices: `out[i]` is the index of segment i's
    /// parent, or None for roots. Assumes the page has been validated.
    pub fn parent_indices(&self) -> Vec<Option<usize>> {
        self.segments
            .iter()
            .map(|s| {
                s.parent_id
                    .as_deref()
                    .and_then(|pid| self.segment_index(pid))
            })
            .collect()
    }

    /// True if any segment carries a parent link.
    pub fn has_parent_links(&self) -> bool {
        self.segments.iter().any(|s| s.parent_id.is_some())
    }
}

/// Disjoint-set forest used for cycle detection over parent links.
struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// Returns false if x and y were already connected (a union would close a
    /// cycle).
    fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        self.0[rx] = ry;
        true
    }
}

/// Validate a single page against every schema invariant.
pub fn validate_page(page: &Page) -> Result<()> {
    let ctx = &page.page_id;
    if page.page_id.is_empty() {
        return Err(Error::Data("page_id: must be non-empty".into()));
    }
    if !(page.width.is_finite() && page.height.is_finite()) || page.width <= 0.0 || page.height <= 0.0 {
        return Err(Error::Data(format!(
            "page {ctx}: width/height must be finite and positive"
        )));
    }
    let mut seen = BTreeSet::new();
    for seg in &page.segments {
        let sctx = format!("page {ctx}, segment {}", seg.id);
        if seg.id.is_empty() {
            return Err(Error::Data(format!("page {ctx}: segment id must be non-empty")));
        }
        if !seen.insert(seg.id.as_str()) {
            return Err(Error::Structure(format!(
                "page {ctx}: duplicate segment id {}",
                seg.id
            )));
        }
        seg.bbox.validate(&sctx)?;
        if seg.bbox.x1 < 0.0
            || seg.bbox.y1 < 0.0
            || seg.bbox.x2 > page.width
            || seg.bbox.y2 > page.height
        {
            return Err(Error::Data(format!(
                "{sctx}: bbox exceeds page bounds {} x {}",
                page.width, page.height
            )));
        }
        if seg.label.is_empty() {
            return Err(Error::Data(format!("{sctx}: label must be non-empty")));
        }
        if let Some(v) = &seg.semantic_vec {
            if v.len() != SEMANTIC_DIM {
                return Err(Error::Data(format!(
                    "{sctx}: semantic_vec has width {}, expected {SEMANTIC_DIM}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Data(format!("{sctx}: semantic_vec has non-finite entry")));
            }
        }
        if let Some(v) = &seg.appearance_vec {
            if v.len() != APPEARANCE_DIM {
                return Err(Error::Data(format!(
                    "{sctx}: appearance_vec has width {}, expected {APPEARANCE_DIM}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Data(format!(
                    "{sctx}: appearance_vec has non-finite entry"
                )));
            }
        }
    }
    // Parent links: must reference an existing, different segment; the link
    // set must be a forest (each union that would merge an already-connected
    // pair closes a cycle).
    let mut uf = UnionFind::new(page.segments.len());
    for (i, seg) in page.segments.iter().enumerate() {
        if let Some(pid) = &seg.parent_id {
            let j = page.segment_index(pid).ok_or_else(|| {
                Error::Structure(format!(
                    "page {ctx}, segment {}: parent_id {pid} does not exist",
                    seg.id
                ))
            })?;
            if i == j {
                return Err(Error::Structure(format!(
                    "page {ctx}, segment {}: parent_id points at itself",
                    seg.id
                )));
            }
            if !uf.union(i, j) {
                return Err(Error::Structure(format!(
                    "page {ctx}: cycle in parent links involving segment {}",
                    seg.id
                )));
            }
        }
    }
    Ok(())
}

/// Validate a whole corpus: every page, plus corpus-level page-id uniqueness.
pub fn validate_pages(pages: &[Page]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for page in pages {
        validate_page(page)?;
        if !seen.insert(page.page_id.as_str()) {
            return Err(Error::Structure(format!(
                "duplicate page_id {}",
                page.page_id
            )));
        }
    }
    Ok(())
}

/// Parse canonical JSON Lines text. Line numbers in errors are 1-based;
/// blank lines are rejected (the format has no comments or separators).
pub fn parse_canonical(text: &str) -> Result<Vec<Page>> {
    let mut pages = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            return Err(Error::Parse {
                line: lineno,
                msg: "blank line in JSON Lines input".into(),
            });
        }
        let page: Page = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        validate_page(&page).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        pages.push(page);
    }
    validate_pages(&pages)?;
    Ok(pages)
}

/// Read and validate a canonical JSONL corpus from disk.
pub fn read_canonical(path: impl AsRef<Path>) -> Result<Vec<Page>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    std::io::BufReader::new(file)
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    parse_canonical(&text)
}

/// Serialize pages to canonical JSONL text (one page per line, trailing
/// newline). Field order is fixed by the struct definitions, so equal inputs
/// produce byte-equal output.
pub fn to_canonical_string(pages: &[Page]) -> Result<String> {
    let mut out = String::new();
    for page in pages {
        let line = serde_json::to_string(page)
            .map_err(|e| Error::Data(format!("serialize page {}: {e}", page.page_id)))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Validate and write pages as canonical JSONL.
pub fn write_canonical(path: impl AsRef<Path>, pages: &[Page]) -> Result<()> {
    let path = path.as_ref();
    validate_pages(pages)?;
    let text = to_canonical_string(pages)?;
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Ordered set of class names. The order defines the class-index space used
/// by every model and probability vector; it is the sorted list of distinct
/// labels so that identical corpora always yield identical indexing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    /// Build from an explicit ordered list (names must be unique).
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::Contract(format!("duplicate label name {n}")));
            }
        }
        if names.is_empty() {
            return Err(Error::Contract("label set must be non-empty".into()));
        }
        Ok(LabelSet { names })
    }

    /// Sorted distinct labels appearing in the pages.
    pub fn from_pages(pages: &[Page]) -> Result<Self> {
        let set: BTreeSet<&str> = pages
            .iter()
            .flat_map(|p| p.segments.iter().map(|s| s.label.as_str()))
            .collect();
        LabelSet::new(set.into_iter().map(String::from).collect())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Label index of a segment, or a data error naming the unknown label.
    pub fn index_of_segment(&self, seg: &Segment) -> Result<usize> {
        self.index_of(&seg.label).ok_or_else(|| {
            Error::Data(format!(
                "segment {}: label {} not in label set [{}]",
                seg.id,
                seg.label,
                self.names.join(", ")
            ))
        })
    }
}

use std::io::Read;

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_page() -> Page {
        Page {
            page_id: "p1".into(),
            width: 100.0,
            height: 200.0,
            column_mode: ColumnMode::Auto,
            segments: vec![
                Segment {
                    id: "a".into(),
                    bbox: BBox::new(0.0, 0.0, 10.0, 10.0),
                    char_count: 12,
                    label: "title".into(),
                    parse_l1: Some("NP".into()),
                    parse_l2: Some(vec!["NP".into(), "PP".into()]),
                    parent_id: None,
                    content_key: None,
                    semantic_vec: None,
                    appearance_vec: None,
                },
                Segment {
                    id: "b".into(),
                    bbox: BBox::new(0.0, 20.0, 10.0, 40.0),
                    char_count: 240,
                    label: "paragraph".into(),
                    parse_l1: Some("S".into()),
                    parse_l2: None,
                    parent_id: Some("a".into()),
                    content_key: None,
                    semantic_vec: None,
                    appearance_vec: None,
                },
            ],
        }
    }

    #[test]
    fn roundtrip_is_lossless() {
        let pages = vec![sample_page()];
        let text = to_canonical_string(&pages).unwrap();
        let back = parse_canonical(&text).unwrap();
        assert_eq!(pages, back);
        // And byte-stable: serializing again gives the same text.
        assert_eq!(text, to_canonical_string(&back).unwrap());
    }

    #[test]
    fn parse_error_names_line() {
        let text = "not json\n";
        match parse_canonical(text) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("expected parse error on line 1, got {other:?}"),
        }
        let mut good = to_canonical_string(&[sample_page()]).unwrap();
        good.push_str("{\"page_id\": 3}\n");
        match parse_canonical(&good) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("expected parse error on line 2, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_bbox_is_rejected() {
        let mut page = sample_page();
        page.segments[0].bbox = BBox::new(10.0, 0.0, 10.0, 5.0);
        let err = validate_page(&page).unwrap_err();
        assert!(err.to_string().contains("bbox"), "{err}");
    }

    #[test]
    fn out_of_bounds_bbox_is_rejected() {
        let mut page = sample_page();
        page.segments[0].bbox = BBox::new(0.0, 0.0, 150.0, 10.0);
        assert!(validate_page(&page).is_err());
    }

    #[test]
    fn duplicate_segment_id_is_rejected() {
        let mut page = sample_page();
        page.segments[1].id = "a".into();
        page.segments[1].parent_id = None;
        match validate_page(&page) {
            Err(Error::Structure(msg)) => assert!(msg.contains("duplicate")),
            other => panic!("expected structure error, got {other:?}"),
        }
    }

    #[test]
    fn dangling_parent_is_rejected() {
        let mut page = sample_page();
        page.segments[1].parent_id = Some("zzz".into());
        match validate_page(&page) {
            Err(Error::Structure(msg)) => assert!(msg.contains("zzz")),
            other => panic!("expected structure error, got {other:?}"),
        }
    }

    #[test]
    fn self_parent_is_rejected() {
        let mut page = sample_page();
        page.segments[1].parent_id = Some("b".into());
        assert!(matches!(validate_page(&page), Err(Error::Structure(_))));
    }

    #[test]
    fn parent_cycle_is_rejected() {
        let mut page = sample_page();
        page.segments[0].parent_id = Some("b".into()); // a -> b and b -> a
        match validate_page(&page) {
            Err(Error::Structure(msg)) => assert!(msg.contains("cycle"), "{msg}"),
            other => panic!("expected cycle error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_vector_width_is_rejected() {
        let mut page = sample_page();
        page.segments[0].semantic_vec = Some(vec![0.0; 10]);
        let err = validate_page(&page).unwrap_err();
        assert!(err.to_string().contains("semantic_vec"), "{err}");
    }

    #[test]
    fn label_set_is_sorted_and_indexable() {
        let ls = LabelSet::from_pages(&[sample_page()]).unwrap();
        assert_eq!(ls.names(), ["paragraph", "title"]);
        assert_eq!(ls.index_of("title"), Some(1));
        assert_eq!(ls.index_of("nope"), None);
    }

    #[test]
    fn duplicate_page_id_is_rejected() {
        let pages = vec![sample_page(), sample_page()];
        assert!(matches!(validate_pages(&pages), Err(Error::Structure(_))));
    }

    #[test]
    fn blank_line_is_rejected() {
        let mut text = to_canonical_string(&[sample_page()]).unwrap();
        text.push('\n'); // second, blank line
        text.push_str(&to_canonical_string(&[sample_page()]).unwrap());
        assert!(matches!(
            parse_canonical(&text),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
