//! Synthetic corpora with known label functions, used by the learning and
//! smoke-test suites.
//!
//! `mixed_corpus` is the main one: every page has two root segments in the
//! top half and two leaf segments under each root, and a segment's label is
//! a known mixture of four factors, each carried by a different aspect:
//!
//!   - density bucket (dense/sparse): char_count / area takes one of two
//!     fixed values per (bucket, root-or-leaf) pair, all eight inside four
//!     disjoint ranges, so the ratio alone pins both the bucket and the
//!     position;
//!   - geometric position (root/leaf): also visible as relation-graph degree;
//!   - parse symbol (S/NP) in both parse levels;
//!   - hash-feature cluster: every segment carries a `content_key`, so its
//!     fallback features land in one of finitely many points. Quote and
//!     footer draw from two-key pools of their own; every other label shares
//!     a single background key, so for them the features carry no class
//!     signal. Keys and density values are kept to a handful, and the slot
//!     geometry is fixed up to horizontal translation, so a modest training
//!     split sees every combination of neighbouring feature rows a graph
//!     convolution can mix; anything rarer would be memorised rather than
//!     learned.
//!
//!   dense  + S             -> paragraph     sparse + root          -> title
//!   dense  + NP            -> list          sparse + NP + leaf     -> caption
//!   sparse + S + leaf + quote-pool key -> quote, footer-pool key -> footer
//!
//! Root bands sit strictly above leaf bands and every band is disjoint, so
//! the reading order (and hence the gold parent of each reading rank) is
//! identical on every page.

use std::path::Path;

use crate::corpus::{BBox, ColumnMode, Page, Segment};
use crate::math::{rng_for, uniform_in, uniform_usize};
use crate::{Error, Result};

fn make_segment(id: String, bbox: BBox, char_count: u64, label: &str) -> Segment {
    Segment {
        id,
        bbox,
        char_count,
        label: label.to_string(),
        parse_l1: None,
        parse_l2: None,
        parent_id: None,
        content_key: None,
        semantic_vec: None,
        appearance_vec: None,
    }
}

/// Density-ratio range for a mixed-corpus segment. All four ranges are
/// mutually disjoint.
#[cfg(test)]
fn mixed_ratio_range(dense: bool, is_root: bool) -> (f64, f64) {
    match (dense, is_root) {
        (true, true) => (0.8, 1.2),
        (true, false) => (1.6, 2.2),
        (false, true) => (0.03, 0.08),
        (false, false) => (0.15, 0.35),
    }
}

/// The two density ratios actually drawn per (bucket, position) class; both
/// sit inside the matching `mixed_ratio_range`.
fn mixed_ratio_options(dense: bool, is_root: bool) -> [f64; 2] {
    match (dense, is_root) {
        (true, true) => [0.9, 1.1],
        (true, false) => [1.7, 2.1],
        (false, true) => [0.04, 0.07],
        (false, false) => [0.2, 0.3],
    }
}

/// Content keys per class-specific cluster pool (quote, footer).
const CLUSTER_POOL: usize = 2;
/// Content keys in the shared background pool.
const BACKGROUND_POOL: usize = 1;

/// The four-factor corpus described in the module docs. The cluster factor
/// rides on content keys, so it holds under any featurizer seed.
pub fn mixed_corpus(pages: usize, seed: u64) -> Vec<Page> {
    let mut rng = rng_for(seed, "synth.mixed");
    let mut out = Vec::with_capacity(pages);
    for p in 0..pages {
        let page_id = format!("mx{p:04}");
        let mut segments = Vec::with_capacity(6);
        let mut root_ids = Vec::with_capacity(2);
        // Two roots in disjoint top bands (root 0 always above root 1).
        // Band heights and widths are fixed so the density features take
        // only the eight advertised values; jitter is horizontal only.
        for r in 0..2usize {
            let x1 = 90.0 + 480.0 * r as f64 + uniform_in(&mut rng, 0.0, 40.0);
            let y1 = 60.0 + 140.0 * r as f64;
            let bbox = BBox::new(x1, y1, x1 + 200.0, y1 + 80.0);
            let id = format!("{page_id}-s{r}");
            root_ids.push(id.clone());
            segments.push(build_mixed_segment(id, bbox, true, None, &mut rng));
        }
        // Four leaves in disjoint bottom bands; band order (l=0,r=0),
        // (l=0,r=1), (l=1,r=0), (l=1,r=1).
        for l in 0..2usize {
            for r in 0..2usize {
                let band = (2 * l + r) as f64;
                let x1 = 90.0 + 480.0 * r as f64 + 40.0 * l as f64 + uniform_in(&mut rng, 0.0, 40.0);
                let y1 = 550.0 + 95.0 * band;
                let bbox = BBox::new(x1, y1, x1 + 180.0, y1 + 60.0);
                let id = format!("{page_id}-s{}", 2 + 2 * l + r);
                segments.push(build_mixed_segment(
                    id,
                    bbox,
                    false,
                    Some(root_ids[r].clone()),
                    &mut rng,
                ));
            }
        }
        out.push(Page {
            page_id,
            width: 1000.0,
            height: 1000.0,
            column_mode: ColumnMode::Auto,
            segments,
        });
    }
    out
}

fn build_mixed_segment(
    id: String,
    bbox: BBox,
    is_root: bool,
    parent_id: Option<String>,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Segment {
    let dense = uniform_usize(rng, 2) == 0;
    let parse_s = uniform_usize(rng, 2) == 0;
    let ratio = mixed_ratio_options(dense, is_root)[uniform_usize(rng, 2)];
    let count = (ratio * bbox.area()).round().max(1.0) as u64;
    let mut seg = make_segment(id, bbox, count, "pending");
    let (label, key) = if !dense && parse_s && !is_root {
        // Cluster-dependent labels: the content key decides.
        if uniform_usize(rng, 2) == 0 {
            ("quote", format!("cl-quote-{}", uniform_usize(rng, CLUSTER_POOL)))
        } else {
            ("footer", format!("cl-footer-{}", uniform_usize(rng, CLUSTER_POOL)))
        }
    } else {
        let label = match (dense, parse_s, is_root) {
            (true, true, _) => "paragraph",
            (true, false, _) => "list",
            (false, _, true) => "title",
            (false, false, false) => "caption",
            (false, true, false) => unreachable!("handled above"),
        };
        (label, format!("cl-bg-{}", uniform_usize(rng, BACKGROUND_POOL)))
    };
    seg.label = label.to_string();
    seg.content_key = Some(key);
    if parse_s {
        seg.parse_l1 = Some("S".to_string());
        seg.parse_l2 = Some(vec!["NP".to_string(), "VP".to_string()]);
    } else {
        seg.parse_l1 = Some("NP".to_string());
        seg.parse_l2 = Some(vec!["NP".to_string(), "PP".to_string()]);
    }
    seg.parent_id = parent_id;
    seg
}

/// Vertically stacked pages with chain parent links (each segment's parent
/// is the one above) and a two-class density labeling. Small and fast:
/// suited to command-level smoke and determinism tests.
pub fn stacked_corpus(pages: usize, seed: u64) -> Vec<Page> {
    let mut rng = rng_for(seed, "synth.stacked");
    let mut out = Vec::with_capacity(pages);
    for p in 0..pages {
        let page_id = format!("st{p:04}");
        let n = 4 + uniform_usize(&mut rng, 5);
        let mut segments = Vec::with_capacity(n);
        for i in 0..n {
            let x1 = 60.0 + uniform_in(&mut rng, 0.0, 40.0);
            let y1 = 40.0 + 120.0 * i as f64 + uniform_in(&mut rng, 0.0, 30.0);
            let w = 300.0 + uniform_in(&mut rng, 0.0, 200.0);
            let h = 60.0 + uniform_in(&mut rng, 0.0, 30.0);
            let bbox = BBox::new(x1, y1, x1 + w, y1 + h);
            let dense = uniform_usize(&mut rng, 2) == 0;
            let (lo, hi) = if dense { (0.8, 1.2) } else { (0.03, 0.08) };
            let count = (uniform_in(&mut rng, lo, hi) * bbox.area()).round().max(1.0) as u64;
            let mut seg = make_segment(
                format!("{page_id}-s{i}"),
                bbox,
                count,
                if dense { "dense" } else { "sparse" },
            );
            seg.parse_l1 = Some("S".to_string());
            seg.parse_l2 = Some(vec!["NP".to_string(), "VP".to_string()]);
            if i > 0 {
                seg.parent_id = Some(format!("{page_id}-s{}", i - 1));
            }
            segments.push(seg);
        }
        out.push(Page {
            page_id,
            width: 800.0,
            height: 40.0 + 120.0 * n as f64,
            column_mode: ColumnMode::Single,
            segments,
        });
    }
    out
}

/// Pages built so every pooling mode sees identical inputs: unit-area boxes
/// make the density ratio equal the character count (den1 == den2), and a
/// single-symbol parse at both levels makes the two syntactic encodings
/// coincide (syn1 == syn2). Pooling any x with itself returns x exactly for
/// min, avg, and max alike.
pub fn pooling_tie_corpus(pages: usize, seed: u64) -> Vec<Page> {
    let mut rng = rng_for(seed, "synth.pooltie");
    let mut out = Vec::with_capacity(pages);
    for p in 0..pages {
        let page_id = format!("pt{p:04}");
        let mut segments = Vec::with_capacity(4);
        for i in 0..4usize {
            let x1 = 10.0;
            let y1 = 10.0 + 40.0 * i as f64;
            let bbox = BBox::new(x1, y1, x1 + 1.0, y1 + 1.0);
            let dense = i % 2 == 0;
            let count = if dense {
                40 + uniform_usize(&mut rng, 21) as u64
            } else {
                1 + uniform_usize(&mut rng, 3) as u64
            };
            let mut seg = make_segment(
                format!("{page_id}-s{i}"),
                bbox,
                count,
                if dense { "dense" } else { "sparse" },
            );
            seg.parse_l1 = Some("NP".to_string());
            seg.parse_l2 = Some(vec!["NP".to_string()]);
            if i > 0 {
                seg.parent_id = Some(format!("{page_id}-s{}", i - 1));
            }
            segments.push(seg);
        }
        out.push(Page {
            page_id,
            width: 200.0,
            height: 200.0,
            column_mode: ColumnMode::Single,
            segments,
        });
    }
    out
}

/// Per-label density ranges for the form fixture; disjoint so the fallback
/// pipeline has a clean signal to learn from.
fn funsd_ratio_range(label: &str) -> (f64, f64) {
    match label {
        "other" => (0.0004, 0.0012),
        "header" => (0.0015, 0.0035),
        "question" => (0.004, 0.009),
        "answer" => (0.011, 0.028),
        _ => unreachable!("fixture only writes the four form labels"),
    }
}

fn fixture_text(chars: usize, rng: &mut rand_chacha::ChaCha8Rng) -> String {
    const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    let mut words = Vec::new();
    let mut remaining = chars;
    while remaining > 0 {
        let len = remaining.min(4 + uniform_usize(rng, 4));
        let word: String = (0..len)
            .map(|_| LETTERS[uniform_usize(rng, LETTERS.len())] as char)
            .collect();
        remaining -= len;
        words.push(word);
    }
    words.join(" ")
}

fn fixture_entity(
    id: i64,
    label: &str,
    x1: i64,
    y1: i64,
    w: i64,
    h: i64,
    linking: Vec<[i64; 2]>,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> serde_json::Value {
    let (lo, hi) = funsd_ratio_range(label);
    let area = (w * h) as f64;
    let chars = ((uniform_in(rng, lo, hi) * area).round() as usize).max(1);
    let text = fixture_text(chars, rng);
    let word_list: Vec<&str> = text.split(' ').collect();
    let nw = word_list.len() as i64;
    let words: Vec<serde_json::Value> = word_list
        .iter()
        .enumerate()
        .map(|(k, wtext)| {
            let k = k as i64;
            let wx1 = x1 + k * w / nw;
            let wx2 = x1 + (k + 1) * w / nw;
            serde_json::json!({
                "text": wtext,
                "box": [wx1, y1, wx2.max(wx1 + 1), y1 + h],
            })
        })
        .collect();
    serde_json::json!({
        "id": id,
        "text": text,
        "box": [x1, y1, x1 + w, y1 + h],
        "label": label,
        "words": words,
        "linking": linking,
    })
}

/// Write a form-annotation fixture in the layout the form ingester reads:
/// `training_data/annotations/*.json` (149 files) and
/// `testing_data/annotations/*.json` (50 files). Each page holds one header,
/// five questions (three with linked answers), three answers, and one other
/// block; questions are the majority class at 50% of segments. Density
/// ranges are disjoint per label.
pub fn write_funsd_fixture(root: &Path, seed: u64) -> Result<()> {
    let mut rng = rng_for(seed, "synth.funsd");
    let mut file_no = 0usize;
    for (split, count) in [("training_data", 149usize), ("testing_data", 50usize)] {
        let dir = root.join(split).join("annotations");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for _ in 0..count {
            let jitter = |rng: &mut rand_chacha::ChaCha8Rng, max: usize| uniform_usize(rng, max + 1) as i64;
            let mut form = Vec::with_capacity(10);
            // header (id 0)
            form.push(fixture_entity(
                0,
                "header",
                200 + jitter(&mut rng, 40),
                28 + jitter(&mut rng, 12),
                240 + jitter(&mut rng, 40),
                38 + jitter(&mut rng, 8),
                vec![],
                &mut rng,
            ));
            // five question rows (ids 1..=5); the first three link answers
            // (ids 6..=8)
            for r in 0..5i64 {
                let y = 110 + 150 * r + jitter(&mut rng, 20);
                let linking = if r < 3 { vec![[1 + r, 6 + r]] } else { vec![] };
                form.push(fixture_entity(
                    1 + r,
                    "question",
                    30 + jitter(&mut rng, 20),
                    y,
                    170 + jitter(&mut rng, 40),
                    26 + jitter(&mut rng, 8),
                    linking,
                    &mut rng,
                ));
            }
            for r in 0..3i64 {
                let y = 112 + 150 * r + jitter(&mut rng, 20);
                form.push(fixture_entity(
                    6 + r,
                    "answer",
                    260 + jitter(&mut rng, 30),
                    y,
                    150 + jitter(&mut rng, 40),
                    22 + jitter(&mut rng, 8),
                    vec![[1 + r, 6 + r]],
                    &mut rng,
                ));
            }
            // other (id 9)
            form.push(fixture_entity(
                9,
                "other",
                40 + jitter(&mut rng, 30),
                880 + jitter(&mut rng, 20),
                280 + jitter(&mut rng, 60),
                46 + jitter(&mut rng, 12),
                vec![],
                &mut rng,
            ));
            let path = dir.join(format!("{file_no:08}.json"));
            let body = serde_json::json!({ "form": form });
            let text = serde_json::to_string_pretty(&body)
                .expect("fixture serialization cannot fail");
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            file_no += 1;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_funsd, to_canonical_string, validate_pages, FunsdSplit, LabelSet};
    use crate::relpred::reading_order_ranks;

    #[test]
    fn mixed_corpus_is_valid_and_deterministic() {
        let pages = mixed_corpus(20, 7);
        assert_eq!(pages.len(), 20);
        validate_pages(&pages).unwrap();
        let again = mixed_corpus(20, 7);
        assert_eq!(
            to_canonical_string(&pages).unwrap(),
            to_canonical_string(&again).unwrap()
        );
        let other_seed = mixed_corpus(20, 8);
        assert_ne!(
            to_canonical_string(&pages).unwrap(),
            to_canonical_string(&other_seed).unwrap()
        );
    }

    #[test]
    fn mixed_corpus_reading_order_is_constant() {
        for page in mixed_corpus(30, 3) {
            assert_eq!(reading_order_ranks(&page), vec![0, 1, 2, 3, 4, 5]);
            // Roots precede leaves and parents are the matching roots.
            let parents = page.parent_indices();
            assert_eq!(
                parents,
                vec![None, None, Some(0), Some(1), Some(0), Some(1)]
            );
        }
    }

    #[test]
    fn mixed_corpus_labels_follow_the_factor_rules() {
        let pages = mixed_corpus(40, 9);
        let mut seen = std::collections::BTreeSet::new();
        for page in &pages {
            for (i, seg) in page.segments.iter().enumerate() {
                let is_root = i < 2;
                let ratio = seg.char_count as f64 / seg.bbox.area();
                let dense = ratio > 0.6;
                // Ratio lands in the advertised disjoint range.
                let (lo, hi) = mixed_ratio_range(dense, is_root);
                assert!(
                    ratio >= lo - 0.01 && ratio <= hi + 0.01,
                    "ratio {ratio} outside [{lo}, {hi}] for {}",
                    seg.id
                );
                let parse_s = seg.parse_l1.as_deref() == Some("S");
                let key = seg.content_key.as_deref().expect("every segment keyed");
                let expect = match (dense, parse_s, is_root) {
                    (true, true, _) => "paragraph",
                    (true, false, _) => "list",
                    (false, _, true) => "title",
                    (false, false, false) => "caption",
                    (false, true, false) => {
                        if key.starts_with("cl-quote-") {
                            "quote"
                        } else {
                            assert!(key.starts_with("cl-footer-"), "key {key}");
                            "footer"
                        }
                    }
                };
                assert_eq!(seg.label, expect, "segment {}", seg.id);
                if expect != "quote" && expect != "footer" {
                    assert!(key.starts_with("cl-bg-"), "key {key} for {}", seg.id);
                }
                seen.insert(seg.label.clone());
            }
        }
        // All six labels occur in a 40-page sample.
        assert_eq!(seen.len(), 6, "labels seen: {seen:?}");
        let labels = LabelSet::from_pages(&pages).unwrap();
        assert_eq!(
            labels.names(),
            &["caption", "footer", "list", "paragraph", "quote", "title"]
        );
    }

    #[test]
    fn mixed_cluster_pools_are_reused_and_disjoint() {
        use crate::corpus::hash_featurize;

        let pages = mixed_corpus(60, 17);
        let mut quote_keys = std::collections::BTreeSet::new();
        let mut footer_keys = std::collections::BTreeSet::new();
        let mut bg_keys = std::collections::BTreeSet::new();
        let mut quotes = 0usize;
        let mut by_key: std::collections::BTreeMap<String, Segment> =
            std::collections::BTreeMap::new();
        for page in &pages {
            for seg in &page.segments {
                let key = seg.content_key.clone().expect("every segment keyed");
                match seg.label.as_str() {
                    "quote" => {
                        quotes += 1;
                        quote_keys.insert(key.clone());
                    }
                    "footer" => {
                        footer_keys.insert(key.clone());
                    }
                    _ => {
                        bg_keys.insert(key.clone());
                    }
                }
                // Segments sharing a key share fallback features even
                // though ids and boxes differ.
                if let Some(prev) = by_key.get(&key) {
                    assert_ne!(prev.id, seg.id);
                    assert_eq!(
                        hash_featurize(prev, 16, 5),
                        hash_featurize(seg, 16, 5),
                        "key {key}"
                    );
                } else {
                    by_key.insert(key, seg.clone());
                }
            }
        }
        // Pools stay tiny and are reused heavily...
        assert_eq!(quote_keys.len(), CLUSTER_POOL);
        assert_eq!(footer_keys.len(), CLUSTER_POOL);
        assert_eq!(bg_keys.len(), BACKGROUND_POOL);
        assert!(quotes > 2 * quote_keys.len(), "{quotes} quotes");
        // ...and the class pools never leak into each other.
        assert!(quote_keys.iter().all(|k| k.starts_with("cl-quote-")));
        assert!(footer_keys.iter().all(|k| k.starts_with("cl-footer-")));
        assert!(bg_keys.iter().all(|k| k.starts_with("cl-bg-")));
    }

    #[test]
    fn stacked_corpus_has_chain_parents() {
        let pages = stacked_corpus(10, 5);
        validate_pages(&pages).unwrap();
        for page in &pages {
            let n = page.segments.len();
            assert!((4..=8).contains(&n));
            let parents = page.parent_indices();
            assert_eq!(parents[0], None);
            for i in 1..n {
                assert_eq!(parents[i], Some(i - 1));
            }
        }
    }

    #[test]
    fn pooling_tie_corpus_collapses_aspect_pairs() {
        let pages = pooling_tie_corpus(5, 3);
        validate_pages(&pages).unwrap();
        for page in &pages {
            for seg in &page.segments {
                assert_eq!(seg.bbox.area(), 1.0);
                assert_eq!(seg.parse_l2.as_ref().unwrap().len(), 1);
                assert_eq!(
                    seg.parse_l1.as_deref().unwrap(),
                    seg.parse_l2.as_ref().unwrap()[0]
                );
            }
        }
    }

    #[test]
    fn funsd_fixture_round_trips_through_the_ingester() {
        let dir = tempfile::tempdir().unwrap();
        write_funsd_fixture(dir.path(), 29).unwrap();
        let train = ingest_funsd(dir.path(), FunsdSplit::Train).unwrap();
        let test = ingest_funsd(dir.path(), FunsdSplit::Test).unwrap();
        assert_eq!(train.len(), 149);
        assert_eq!(test.len(), 50);
        validate_pages(&train).unwrap();
        validate_pages(&test).unwrap();
        // Questions are the majority class at half the segments.
        let mut questions = 0usize;
        let mut total = 0usize;
        for page in &test {
            for seg in &page.segments {
                total += 1;
                if seg.label == "question" {
                    questions += 1;
                }
            }
        }
        assert_eq!(total, 500);
        assert_eq!(questions, 250);
        // Three linked answers per page.
        for page in &test {
            let linked = page
                .segments
                .iter()
                .filter(|s| s.parent_id.is_some())
                .count();
            assert_eq!(linked, 3, "page {}", page.page_id);
        }
        // Density ranges are honored.
        for page in train.iter().take(20) {
            for seg in &page.segments {
                let ratio = seg.char_count as f64 / seg.bbox.area();
                let (lo, hi) = funsd_ratio_range(&seg.label);
                assert!(
                    ratio >= lo * 0.5 && ratio <= hi * 1.5,
                    "ratio {ratio} for label {} outside [{lo}, {hi}]",
                    seg.label
                );
            }
        }
    }
}
