//! Visible/hidden text partition and structural features.

use serde::{Deserialize, Serialize};

use super::visibility::{compute_visibility, HidingTechnique, VisibilityMap, VisibilityStatus};
use super::{parse_html, DomDocument, NodeId, INTERACTIVE_ELEMENTS};

/// Collapse whitespace runs to one space and trim.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenSpan {
    pub technique: HidingTechnique,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentPartition {
    pub visible_text: String,
    pub hidden_text: String,
    pub hidden_spans: Vec<HiddenSpan>,
}

impl ContentPartition {
    /// Parse `html` and partition it.
    pub fn of_html(html: &str) -> Self {
        let doc = parse_html(html);
        let vis = compute_visibility(&doc);
        extract_partition(&doc, &vis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralProfile {
    pub max_depth: usize,
    pub element_count: usize,
    pub visible_element_ratio: f64,
    pub interactive_element_count: usize,
}

impl StructuralProfile {
    pub fn of_html(html: &str) -> Self {
        let doc = parse_html(html);
        let vis = compute_visibility(&doc);
        structural_profile(&doc, &vis)
    }
}

/// The element whose hiding covers `id`: the topmost hidden node in the
/// unbroken chain of hidden ancestors.
fn hiding_root(doc: &DomDocument, vis: &VisibilityMap, id: NodeId) -> NodeId {
    let mut root = id;
    for anc in doc.ancestors(id) {
        if vis.get(anc.id).is_hidden() {
            root = anc.id;
        } else {
            break;
        }
    }
    root
}

/// Split page text into visible and hidden sides. Each text run lands on
/// exactly one side; raw text (script, style, title) on neither.
///
/// Hidden spans are maximal consecutive runs sharing one hiding root,
/// labeled with that root's technique.
pub fn extract_partition(doc: &DomDocument, vis: &VisibilityMap) -> ContentPartition {
    let mut visible: Vec<&str> = Vec::new();
    let mut hidden: Vec<&str> = Vec::new();
    // (root, technique, runs)
    let mut groups: Vec<(NodeId, HidingTechnique, Vec<&str>)> = Vec::new();
    for node in doc.nodes() {
        let Some(text) = node.text() else { continue };
        match vis.get(node.id) {
            VisibilityStatus::Visible => visible.push(text),
            VisibilityStatus::Hidden(_) => {
                hidden.push(text);
                let root = hiding_root(doc, vis, node.id);
                let technique = vis.get(root).technique().expect("root is hidden");
                match groups.last_mut() {
                    Some((r, _, runs)) if *r == root => runs.push(text),
                    _ => groups.push((root, technique, vec![text])),
                }
            }
        }
    }
    let hidden_spans = groups
        .into_iter()
        .filter_map(|(_, technique, runs)| {
            let text = normalize_whitespace(&runs.join(" "));
            (!text.is_empty()).then_some(HiddenSpan { technique, text })
        })
        .collect();
    ContentPartition {
        visible_text: normalize_whitespace(&visible.join(" ")),
        hidden_text: normalize_whitespace(&hidden.join(" ")),
        hidden_spans,
    }
}

pub fn structural_profile(doc: &DomDocument, vis: &VisibilityMap) -> StructuralProfile {
    let mut max_depth = 0;
    let mut element_count = 0;
    let mut visible = 0;
    let mut interactive = 0;
    for n in doc.elements() {
        element_count += 1;
        max_depth = max_depth.max(n.depth);
        if !vis.get(n.id).is_hidden() {
            visible += 1;
        }
        if INTERACTIVE_ELEMENTS.contains(&n.tag().unwrap_or_default()) {
            interactive += 1;
        }
    }
    StructuralProfile {
        max_depth,
        element_count,
        visible_element_ratio: if element_count == 0 { 0.0 } else { visible as f64 / element_count as f64 },
        interactive_element_count: interactive,
    }
}
