//! SVG rendering of labeled pages: one rectangle per segment, colored by
//! label, with parent links drawn as dashed lines between box centers.

use crate::corpus::{LabelSet, Page};

const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Render one page as a standalone SVG document.
pub fn render_page_svg(page: &Page, labels: &LabelSet) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" font-family=\"sans-serif\">\n",
        page.width, page.height
    ));
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\" stroke=\"#888\"/>\n",
        page.width, page.height
    ));
    // Parent links under the boxes.
    let parents = page.parent_indices();
    for (child, parent) in parents.iter().enumerate() {
        if let Some(p) = parent {
            let cb = &page.segments[child].bbox;
            let pb = &page.segments[*p].bbox;
            out.push_str(&format!(
                "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#555\" stroke-dasharray=\"4 3\"/>\n",
                (cb.x1 + cb.x2) / 2.0,
                (cb.y1 + cb.y2) / 2.0,
                (pb.x1 + pb.x2) / 2.0,
                (pb.y1 + pb.y2) / 2.0,
            ));
        }
    }
    for seg in &page.segments {
        let color = labels
            .index_of(&seg.label)
            .map(|i| PALETTE[i % PALETTE.len()])
            .unwrap_or("#999999");
        let b = &seg.bbox;
        out.push_str(&format!(
            "  <g><title>{}</title><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" fill-opacity=\"0.35\" stroke=\"{}\"/>\n",
            escape_xml(&seg.id),
            b.x1,
            b.y1,
            b.x2 - b.x1,
            b.y2 - b.y1,
            color,
            color,
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#222\">{}</text></g>\n",
            b.x1 + 2.0,
            b.y1 + 12.0,
            escape_xml(&seg.label),
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BBox, ColumnMode, Segment};

    #[test]
    fn svg_contains_rects_links_and_escaped_text() {
        let seg = |id: &str, label: &str, y: f64, parent: Option<&str>| Segment {
            id: id.into(),
            bbox: BBox::new(10.0, y, 110.0, y + 40.0),
            char_count: 10,
            label: label.into(),
            parse_l1: None,
            parse_l2: None,
            parent_id: parent.map(String::from),
            content_key: None,
            semantic_vec: None,
            appearance_vec: None,
        };
        let page = Page {
            page_id: "p".into(),
            width: 400.0,
            height: 300.0,
            column_mode: ColumnMode::Single,
            segments: vec![
                seg("a", "title", 10.0, None),
                seg("b", "a<b>&c", 100.0, Some("a")),
            ],
        };
        let labels = LabelSet::new(vec!["a<b>&c".into(), "title".into()]).unwrap();
        let svg = render_page_svg(&page, &labels);
        assert_eq!(svg.matches("<rect").count(), 3); // background + 2 segments
        assert_eq!(svg.matches("<line").count(), 1);
        assert!(svg.contains("a&lt;b&gt;&amp;c"));
        assert!(svg.contains("viewBox=\"0 0 400 300\""));
        assert!(!svg.contains("a<b>&c"));
    }
}
