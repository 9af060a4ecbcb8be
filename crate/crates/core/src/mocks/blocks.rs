//! Visible block segmentation shared by the mock extensions.

use crate::dom::{compute_visibility, normalize_whitespace, DomDocument, NodeData, NodeId, VisibilityMap, NON_CONTENT_ELEMENTS};

const BLOCK_CONTAINERS: &[&str] = &[
    "h1", "h2", "h3", "h4", "h5", "h6", "p", "ul", "ol", "dl", "table", "blockquote", "pre", "figcaption", "address",
];

const INLINE: &[&str] = &[
    "a", "abbr", "b", "bdi", "bdo", "cite", "code", "data", "dfn", "em", "i", "kbd", "mark", "q", "s", "samp", "small",
    "span", "strong", "sub", "sup", "time", "u", "var", "label", "button", "font",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub text: String,
    pub heading: bool,
    /// Depth of the deepest element holding text in the block.
    pub depth: usize,
}

fn is_heading(tag: &str) -> bool {
    matches!(tag, "h1" | "h2" | "h3" | "h4" | "h5" | "h6")
}

/// Visible text of a subtree, hidden descendants excluded. Returns the
/// depth of the deepest text parent.
fn visible_text(doc: &DomDocument, vis: &VisibilityMap, id: NodeId, out: &mut String) -> usize {
    let node = doc.node(id);
    let mut deepest = 0;
    match &node.data {
        NodeData::Text(t) => {
            out.push_str(t);
            if !t.trim().is_empty() {
                deepest = node.depth.saturating_sub(1);
            }
        }
        NodeData::Element { tag, .. } => {
            if NON_CONTENT_ELEMENTS.contains(&tag.as_str()) || vis.get(id).is_hidden() {
                return 0;
            }
            // cells and items are separate runs of text
            let separate = !INLINE.contains(&tag.as_str());
            if separate {
                out.push(' ');
            }
            for &c in &node.children {
                deepest = deepest.max(visible_text(doc, vis, c, out));
            }
            if separate {
                out.push(' ');
            }
        }
        _ => {}
    }
    deepest
}

struct Walker<'a> {
    doc: &'a DomDocument,
    vis: &'a VisibilityMap,
    blocks: Vec<Block>,
    /// Owner of the loose-text block being accumulated.
    open: Option<NodeId>,
}

impl Walker<'_> {
    fn push(&mut self, text: String, heading: bool, depth: usize) {
        let text = normalize_whitespace(&text);
        if !text.is_empty() {
            self.blocks.push(Block { text, heading, depth });
        }
    }

    fn owner(&self, id: NodeId) -> NodeId {
        let mut cur = self.doc.node(id).parent;
        while let Some(p) = cur {
            let n = self.doc.node(p);
            if n.tag().is_some_and(|t| !INLINE.contains(&t)) {
                return p;
            }
            cur = n.parent;
        }
        self.doc.body()
    }

    fn walk(&mut self, id: NodeId) {
        let node = self.doc.node(id);
        match &node.data {
            NodeData::Text(t) => {
                if t.trim().is_empty() {
                    return;
                }
                let owner = self.owner(id);
                match (self.open, self.blocks.last_mut()) {
                    (Some(o), Some(last)) if o == owner => {
                        last.text = normalize_whitespace(&format!("{} {t}", last.text));
                    }
                    _ => {
                        let depth = self.doc.node(owner).depth;
                        let before = self.blocks.len();
                        self.push(t.clone(), false, depth);
                        if self.blocks.len() > before {
                            self.open = Some(owner);
                        }
                    }
                }
            }
            NodeData::Element { tag, .. } => {
                if NON_CONTENT_ELEMENTS.contains(&tag.as_str()) || tag == "head" || self.vis.get(id).is_hidden() {
                    return;
                }
                if BLOCK_CONTAINERS.contains(&tag.as_str()) {
                    let mut text = String::new();
                    let depth = visible_text(self.doc, self.vis, id, &mut text);
                    self.open = None;
                    self.push(text, is_heading(tag), depth);
                    return;
                }
                if !INLINE.contains(&tag.as_str()) {
                    self.open = None;
                }
                for &c in &node.children {
                    self.walk(c);
                }
                if !INLINE.contains(&tag.as_str()) {
                    self.open = None;
                }
            }
            _ => {}
        }
    }
}

/// Visible blocks in document order.
pub fn visible_blocks(doc: &DomDocument) -> Vec<Block> {
    let vis = compute_visibility(doc);
    let mut w = Walker {
        doc,
        vis: &vis,
        blocks: Vec::new(),
        open: None,
    };
    w.walk(doc.body());
    w.blocks
}
