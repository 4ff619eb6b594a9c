//! Bounding-box geometry: density ratios, gap distances, and the
//! nearest-two-neighbor edge rule that builds the geometric aspect graphs.
//!
//! Gap conventions (pinned so every caller and test agrees):
//!
//! * vertical gap of b below a (b.y1 >= a.y2) is b.y1 - a.y2; above is the
//!   mirror; vertically overlapping boxes have gap 0. Horizontal gaps mirror
//!   this on x. Both are symmetric in their arguments.
//! * "horizontally aligned" means vertical-interval overlap strictly greater
//!   than zero.
//!
//! Edge rule: every node considers the vertical gap to every other box; when
//! column handling is active (`double` or `auto` mode) it also considers the
//! horizontal gap to the horizontally aligned box with the smallest vertical
//! gap (ties by lower index). The two smallest-distance distinct neighbors
//! (ties by lower index) are selected, each contributing weight 1/(1+d), and
//! the directed picks are symmetrized, keeping the larger weight if a pair
//! was picked twice with different distances.

use crate::corpus::{ColumnMode, Page, Segment};

/// One weighted undirected edge, reported in both directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEdge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// Characters per unit area: char_count / bbox area.
pub fn density_ratio(seg: &Segment) -> f64 {
    seg.char_count as f64 / seg.bbox.area()
}

/// Vertical gap between two boxes; 0 when their y-intervals overlap.
pub fn vertical_gap(a: &Segment, b: &Segment) -> f64 {
    if b.bbox.y1 >= a.bbox.y2 {
        b.bbox.y1 - a.bbox.y2
    } else if b.bbox.y2 <= a.bbox.y1 {
        a.bbox.y1 - b.bbox.y2
    } else {
        0.0
    }
}

/// Horizontal gap between two boxes; 0 when their x-intervals overlap.
pub fn horizontal_gap(a: &Segment, b: &Segment) -> f64 {
    if b.bbox.x1 >= a.bbox.x2 {
        b.bbox.x1 - a.bbox.x2
    } else if b.bbox.x2 <= a.bbox.x1 {
        a.bbox.x1 - b.bbox.x2
    } else {
        0.0
    }
}

/// Vertical-interval overlap length (> 0 means "horizontally aligned").
fn vertical_overlap(a: &Segment, b: &Segment) -> f64 {
    (a.bbox.y2.min(b.bbox.y2) - a.bbox.y1.max(b.bbox.y1)).max(0.0)
}

/// Distance-to-weight map: closer boxes get larger weights, d=0 maps to 1.
pub fn gap_weight(d: f64) -> f64 {
    1.0 / (1.0 + d)
}

/// Build the nearest-two-neighbor edge set for a page.
///
/// Deterministic ties: candidate order is (distance, neighbor index); the
/// horizontal candidate for a node is the aligned box minimizing
/// (vertical gap, index). Per node at most two distinct neighbors are
/// selected (one when N == 2, none when N == 1). The returned list contains
/// both directions of every edge, sorted by (src, dst).
pub fn nearest_two_edges(page: &Page) -> Vec<WeightedEdge> {
    let segs = &page.segments;
    let n = segs.len();
    if n < 2 {
        return Vec::new();
    }
    let column_active = matches!(page.column_mode, ColumnMode::Double | ColumnMode::Auto);

    // weight[(a, b)] with a < b: max selected weight over both directions.
    let mut picked: std::collections::BTreeMap<(usize, usize), f64> =
        std::collections::BTreeMap::new();

    for i in 0..n {
        // Candidate distances: vertical gap to every other box ...
        let mut candidates: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (vertical_gap(&segs[i], &segs[j]), j))
            .collect();
        // ... plus the horizontal gap to the aligned box with the smallest
        // vertical gap, when column handling is active.
        if column_active {
            let aligned = (0..n)
                .filter(|&j| j != i && vertical_overlap(&segs[i], &segs[j]) > 0.0)
                .min_by(|&a, &b| {
                    let da = vertical_gap(&segs[i], &segs[a]);
                    let db = vertical_gap(&segs[i], &segs[b]);
                    da.partial_cmp(&db).unwrap().then(a.cmp(&b))
                });
            if let Some(j) = aligned {
                candidates.push((horizontal_gap(&segs[i], &segs[j]), j));
            }
        }
        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        let mut chosen: Vec<usize> = Vec::with_capacity(2);
        for (d, j) in candidates {
            if chosen.len() == 2 {
                break;
            }
            if chosen.contains(&j) {
                continue;
            }
            chosen.push(j);
            let key = (i.min(j), i.max(j));
            let w = gap_weight(d);
            let entry = picked.entry(key).or_insert(w);
            if w > *entry {
                *entry = w;
            }
        }
    }

    let mut edges = Vec::with_capacity(picked.len() * 2);
    for (&(a, b), &w) in &picked {
        edges.push(WeightedEdge { src: a, dst: b, weight: w });
        edges.push(WeightedEdge { src: b, dst: a, weight: w });
    }
    edges.sort_by(|x, y| (x.src, x.dst).cmp(&(y.src, y.dst)));
    edges
}
