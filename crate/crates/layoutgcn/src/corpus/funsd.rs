//! Adapter for the FUNSD form-understanding dataset layout.
//!
//! Reads the official `annotations/*.json` files (one page per file, entities
//! under a top-level `form` array) and maps them to canonical [`Page`]s:
//!
//! * labels are lowercased and must be one of `header`, `question`, `answer`,
//!   `other`;
//! * `char_count` is the summed non-whitespace character count of the
//!   entity's `words` (e.g. words `["TO:", "ALL"]` count 6);
//! * `linking` pairs are interpreted as `[parent, child]`. Official files
//!   repeat each pair in both linked entities, so pairs are deduplicated;
//!   a pair that would give a child a second parent or close a cycle is
//!   skipped deterministically (pairs processed in sorted order, first wins),
//!   keeping the parent links a forest;
//! * annotation files carry no page dimensions, so width/height are the
//!   maxima of the entity boxes;
//! * degenerate boxes (zero width or height, present in scanned-form data)
//!   are expanded by one pixel, and negative coordinates are clamped to zero.
//!
//! The directory argument may point at the dataset root (containing
//! `training_data/` and `testing_data/`), at one split directory, or directly
//! at an `annotations/` folder.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::corpus::{validate_pages, BBox, ColumnMode, Page, Segment};
use crate::{Error, Result};

/// Which official split to ingest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunsdSplit {
    Train,
    Test,
}

impl FunsdSplit {
    fn dir_name(self) -> &'static str {
        match self {
            FunsdSplit::Train => "training_data",
            FunsdSplit::Test => "testing_data",
        }
    }
}

#[derive(Deserialize)]
struct RawFile {
    form: Vec<RawEntity>,
}

#[derive(Deserialize)]
struct RawEntity {
    id: i64,
    /// Entity-level text; becomes the content key. `char_count` uses `words`.
    #[serde(default)]
    text: Option<String>,
    #[serde(rename = "box")]
    bbox: [f64; 4],
    label: String,
    #[serde(default)]
    words: Vec<RawWord>,
    #[serde(default)]
    linking: Vec<Vec<i64>>,
}

#[derive(Deserialize)]
struct RawWord {
    text: String,
    #[serde(rename = "box", default)]
    #[allow(dead_code)]
    bbox: Option<[f64; 4]>,
}

const FUNSD_LABELS: [&str; 4] = ["answer", "header", "other", "question"];

/// Locate the annotations directory for a split under `root`.
fn annotations_dir(root: &Path, split: FunsdSplit) -> Result<PathBuf> {
    let candidates = [
        root.join(split.dir_name()).join("annotations"),
        root.join("dataset").join(split.dir_name()).join("annotations"),
        root.join("annotations"),
    ];
    for c in &candidates {
        if c.is_dir() {
            return Ok(c.clone());
        }
    }
    Err(Error::Data(format!(
        "no annotations directory for split {:?} under {}",
        split,
        root.display()
    )))
}

/// Ingest one official FUNSD split as canonical pages, sorted by file name.
pub fn ingest_funsd(root: impl AsRef<Path>, split: FunsdSplit) -> Result<Vec<Page>> {
    let dir = annotations_dir(root.as_ref(), split)?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Data(format!(
            "no annotation files in {}",
            dir.display()
        )));
    }
    let mut pages = Vec::with_capacity(files.len());
    for file in files {
        pages.push(ingest_file(&file)?);
    }
    validate_pages(&pages)?;
    Ok(pages)
}

fn ingest_file(path: &Path) -> Result<Page> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: format!("{}: {e}", path.display()),
    })?;
    let page_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("page")
        .to_string();

    let mut segments = Vec::with_capacity(raw.form.len());
    let mut id_to_index = BTreeMap::new();
    for entity in &raw.form {
        let label = entity.label.to_lowercase();
        if !FUNSD_LABELS.contains(&label.as_str()) {
            return Err(Error::Data(format!(
                "{}: entity {}: label {} not in [{}]",
                path.display(),
                entity.id,
                entity.label,
                FUNSD_LABELS.join(", ")
            )));
        }
        // Normalize the box: clamp negatives, expand degenerate extents.
        let x1 = entity.bbox[0].max(0.0);
        let y1 = entity.bbox[1].max(0.0);
        let x2 = entity.bbox[2].max(x1 + 1.0);
        let y2 = entity.bbox[3].max(y1 + 1.0);
        let char_count: u64 = entity
            .words
            .iter()
            .map(|w| w.text.chars().filter(|c| !c.is_whitespace()).count() as u64)
            .sum();
        if id_to_index
            .insert(entity.id, segments.len())
            .is_some()
        {
            return Err(Error::Structure(format!(
                "{}: duplicate entity id {}",
                path.display(),
                entity.id
            )));
        }
        segments.push(Segment {
            id: entity.id.to_string(),
            bbox: BBox::new(x1, y1, x2, y2),
            char_count,
            label,
            parse_l1: None,
            parse_l2: None,
            parent_id: None,
            // Entities with identical text (checkboxes, repeated field
            // names) share fallback features, like real text embeddings.
            content_key: entity.text.clone().filter(|t| !t.trim().is_empty()),
            semantic_vec: None,
            appearance_vec: None,
        });
    }

    // Collect linking pairs page-wide (official files repeat pairs in both
    // entities), then assign parents in sorted order: [parent, child].
    let mut pairs = BTreeSet::new();
    for entity in &raw.form {
        for link in &entity.linking {
            if link.len() != 2 {
                return Err(Error::Data(format!(
                    "{}: entity {}: linking entry must be a pair",
                    path.display(),
                    entity.id
                )));
            }
            pairs.insert((link[0], link[1]));
        }
    }
    let mut uf: Vec<usize> = (0..segments.len()).collect();
    fn find(uf: &mut Vec<usize>, mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    for (parent, child) in pairs {
        let (Some(&pi), Some(&ci)) = (id_to_index.get(&parent), id_to_index.get(&child)) else {
            return Err(Error::Structure(format!(
                "{}: linking pair ({parent}, {child}) references unknown entity",
                path.display()
            )));
        };
        if pi == ci || segments[ci].parent_id.is_some() {
            continue; // self-link or second parent: keep the first assignment
        }
        let (rp, rc) = (find(&mut uf, pi), find(&mut uf, ci));
        if rp == rc {
            continue; // would close a cycle
        }
        uf[rc] = rp;
        segments[ci].parent_id = Some(segments[pi].id.clone());
    }

    let width = segments
        .iter()
        .map(|s| s.bbox.x2)
        .fold(1.0_f64, f64::max);
    let height = segments
        .iter()
        .map(|s| s.bbox.y2)
        .fold(1.0_f64, f64::max);

    Ok(Page {
        page_id,
        width,
        height,
        column_mode: ColumnMode::Auto,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_fixture(dir: &Path, split: &str, name: &str, body: &str) {
        let d = dir.join(split).join("annotations");
        std::fs::create_dir_all(&d).unwrap();
        std::fs::write(d.join(name), body).unwrap();
    }

    const SAMPLE: &str = r#"{"form": [
        {"id": 0, "text": "TO: ALL", "box": [10, 10, 80, 30], "label": "question",
         "words": [{"text": "TO:", "box": [10, 10, 40, 30]}, {"text": "ALL", "box": [45, 10, 80, 30]}],
         "linking": [[0, 1]]},
        {"id": 1, "text": "staff", "box": [90, 10, 160, 30], "label": "answer",
         "words": [{"text": "staff", "box": [90, 10, 160, 30]}],
         "linking": [[0, 1]]},
        {"id": 2, "text": "MEMO", "box": [10, 0, 60, 8], "label": "header",
         "words": [{"text": "MEMO", "box": [10, 0, 60, 8]}], "linking": []}
    ]}"#;

    #[test]
    fn ingests_official_layout_with_char_counts_and_links() {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(tmp.path(), "training_data", "doc1.json", SAMPLE);
        let pages = ingest_funsd(tmp.path(), FunsdSplit::Train).unwrap();
        assert_eq!(pages.len(), 1);
        let page = &pages[0];
        assert_eq!(page.page_id, "doc1");
        assert_eq!(page.segments.len(), 3);
        // "TO:" + "ALL" = 6 non-whitespace chars.
        assert_eq!(page.segments[0].char_count, 6);
        assert_eq!(page.segments[0].label, "question");
        // The duplicated [0, 1] pair resolves to: answer's parent is the question.
        assert_eq!(page.segments[1].parent_id.as_deref(), Some("0"));
        assert_eq!(page.segments[0].parent_id, None);
        // Page bounds cover all boxes.
        assert!(page.width >= 160.0 && page.height >= 30.0);
    }

    #[test]
    fn second_parent_and_cycles_are_skipped() {
        let tmp = tempfile::tempdir().unwrap();
        let body = r#"{"form": [
            {"id": 0, "text": "a", "box": [0, 0, 10, 10], "label": "question",
             "words": [{"text": "a"}], "linking": [[0, 1], [1, 0]]},
            {"id": 1, "text": "b", "box": [0, 20, 10, 30], "label": "answer",
             "words": [{"text": "b"}], "linking": [[2, 1]]},
            {"id": 2, "text": "c", "box": [0, 40, 10, 50], "label": "question",
             "words": [{"text": "c"}], "linking": []}
        ]}"#;
        write_fixture(tmp.path(), "testing_data", "doc2.json", body);
        let pages = ingest_funsd(tmp.path(), FunsdSplit::Test).unwrap();
        let page = &pages[0];
        // Pairs in sorted order: (0,1) assigns parent(1)=0; (1,0) would close
        // a cycle and is skipped; (2,1) is a second parent for 1, skipped.
        assert_eq!(page.segments[1].parent_id.as_deref(), Some("0"));
        assert_eq!(page.segments[0].parent_id, None);
        assert_eq!(page.segments[2].parent_id, None);
    }

    #[test]
    fn unknown_label_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let body = r#"{"form": [{"id": 0, "text": "x", "box": [0,0,5,5],
            "label": "banner", "words": [{"text": "x"}], "linking": []}]}"#;
        write_fixture(tmp.path(), "training_data", "bad.json", body);
        match ingest_funsd(tmp.path(), FunsdSplit::Train) {
            Err(Error::Data(msg)) => assert!(msg.contains("banner"), "{msg}"),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_boxes_are_expanded() {
        let tmp = tempfile::tempdir().unwrap();
        let body = r#"{"form": [{"id": 0, "text": "x", "box": [5, 5, 5, 5],
            "label": "other", "words": [{"text": "x"}], "linking": []}]}"#;
        write_fixture(tmp.path(), "training_data", "deg.json", body);
        let pages = ingest_funsd(tmp.path(), FunsdSplit::Train).unwrap();
        let b = pages[0].segments[0].bbox;
        assert!(b.x2 > b.x1 && b.y2 > b.y1);
    }

    #[test]
    fn missing_split_directory_is_a_data_error() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(
            ingest_funsd(tmp.path(), FunsdSplit::Train),
            Err(Error::Data(_))
        ));
    }
}
