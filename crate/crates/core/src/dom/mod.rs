//! HTML parsing, visibility resolution and visible/hidden text partitioning.
//!
//! Documents are stored as an arena of nodes whose ids follow pre-order.
//! The root is always an `html` element (id 0) with a `body` child; a `head`
//! element exists only when the source had head content.
//!
//! Depth is counted from the root: `html` is depth 0 and `body` depth 1.

mod builder;
mod content;
mod style;
mod tokenizer;
mod visibility;

use std::collections::BTreeMap;

pub use content::{extract_partition, normalize_whitespace, structural_profile, ContentPartition, HiddenSpan, StructuralProfile};
pub use style::{declared_style, parse_declarations, StyleSheet};
pub use visibility::{compute_visibility, HidingTechnique, VisibilityMap, VisibilityStatus};

pub type NodeId = usize;

/// Elements that never have children or an end tag.
pub const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

/// Elements whose content is raw text that is never page text.
pub const NON_CONTENT_ELEMENTS: &[&str] = &["script", "style", "title"];

pub const INTERACTIVE_ELEMENTS: &[&str] = &["a", "button", "input", "select", "textarea"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeData {
    Element {
        tag: String,
        attributes: Vec<(String, String)>,
    },
    /// Character data that is page content.
    Text(String),
    /// Contents of script/style/title elements.
    RawText(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub depth: usize,
    pub data: NodeData,
}

impl DomNode {
    pub fn tag(&self) -> Option<&str> {
        match &self.data {
            NodeData::Element { tag, .. } => Some(tag),
            _ => None,
        }
    }

    pub fn is_element(&self) -> bool {
        matches!(self.data, NodeData::Element { .. })
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        match &self.data {
            NodeData::Element { attributes, .. } => attributes
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| v.as_str()),
            _ => None,
        }
    }

    pub fn attributes(&self) -> &[(String, String)] {
        match &self.data {
            NodeData::Element { attributes, .. } => attributes,
            _ => &[],
        }
    }

    /// Page text carried by this node, if it is a text node.
    pub fn text(&self) -> Option<&str> {
        match &self.data {
            NodeData::Text(t) => Some(t),
            _ => None,
        }
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.attr("class")
            .map(|c| c.split_ascii_whitespace().any(|c| c == class))
            .unwrap_or(false)
    }
}

/// A parsed, error-recovered HTML document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomDocument {
    nodes: Vec<DomNode>,
    body: NodeId,
    head: Option<NodeId>,
}

/// Parse HTML text. Never fails: malformed markup is recovered.
pub fn parse_html(html: &str) -> DomDocument {
    builder::TreeBuilder::new().run(html)
}

/// Parse raw bytes, replacing invalid UTF-8 sequences with U+FFFD.
pub fn parse_html_bytes(bytes: &[u8]) -> DomDocument {
    parse_html(&String::from_utf8_lossy(bytes))
}

impl DomDocument {
    pub(crate) fn from_parts(nodes: Vec<DomNode>, body: NodeId, head: Option<NodeId>) -> Self {
        Self { nodes, body, head }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn body(&self) -> NodeId {
        self.body
    }

    pub fn head(&self) -> Option<NodeId> {
        self.head
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &DomNode {
        &self.nodes[id]
    }

    /// Nodes in pre-order.
    pub fn nodes(&self) -> impl Iterator<Item = &DomNode> {
        self.nodes.iter()
    }

    pub fn elements(&self) -> impl Iterator<Item = &DomNode> {
        self.nodes.iter().filter(|n| n.is_element())
    }

    /// Elements carrying `name="value"`.
    pub fn elements_with_attr<'a>(&'a self, name: &'a str, value: &'a str) -> impl Iterator<Item = &'a DomNode> + 'a {
        self.elements().filter(move |n| n.attr(name) == Some(value))
    }

    /// Ancestors of `id`, nearest first, excluding `id` itself.
    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = &DomNode> {
        let mut cur = self.nodes[id].parent;
        std::iter::from_fn(move || {
            let n = cur?;
            cur = self.nodes[n].parent;
            Some(&self.nodes[n])
        })
    }

    /// Subtree of `id` in pre-order, including `id`.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    /// Whitespace-normalized page text of a subtree, ignoring visibility.
    pub fn text_content(&self, id: NodeId) -> String {
        let runs: Vec<&str> = self
            .descendants(id)
            .into_iter()
            .filter_map(|n| self.nodes[n].text())
            .collect();
        normalize_whitespace(&runs.join(" "))
    }

    /// Serialize back to HTML. Re-parsing the output yields the same tree.
    pub fn to_html(&self) -> String {
        let mut out = String::from("<!DOCTYPE html>");
        // (node, closing?) work list
        let mut stack: Vec<(NodeId, bool)> = vec![(self.root(), false)];
        while let Some((id, closing)) = stack.pop() {
            let node = &self.nodes[id];
            match &node.data {
                NodeData::Element { tag, attributes } => {
                    if closing {
                        out.push_str("</");
                        out.push_str(tag);
                        out.push('>');
                        continue;
                    }
                    out.push('<');
                    out.push_str(tag);
                    for (k, v) in attributes {
                        out.push(' ');
                        out.push_str(k);
                        out.push_str("=\"");
                        out.push_str(&html_escape::encode_double_quoted_attribute(v));
                        out.push('"');
                    }
                    out.push('>');
                    if VOID_ELEMENTS.contains(&tag.as_str()) {
                        continue;
                    }
                    stack.push((id, true));
                    for &c in node.children.iter().rev() {
                        stack.push((c, false));
                    }
                }
                NodeData::Text(t) => out.push_str(&html_escape::encode_text(t)),
                NodeData::RawText(t) => out.push_str(t),
            }
        }
        out
    }

    // Editing. Edits append nodes out of pre-order, so edited documents must
    // be serialized and re-parsed before ids or depths are relied on.

    pub(crate) fn create_element(&mut self, tag: &str, attributes: Vec<(String, String)>) -> NodeId {
        self.push_detached(NodeData::Element {
            tag: tag.to_string(),
            attributes,
        })
    }

    pub(crate) fn create_text(&mut self, text: &str) -> NodeId {
        self.push_detached(NodeData::Text(text.to_string()))
    }

    fn push_detached(&mut self, data: NodeData) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(DomNode {
            id,
            parent: None,
            children: Vec::new(),
            depth: 0,
            data,
        });
        id
    }

    pub(crate) fn append_child(&mut self, parent: NodeId, child: NodeId) {
        self.nodes[child].parent = Some(parent);
        self.nodes[parent].children.push(child);
    }

    /// Insert `new` right after `sibling` under the same parent.
    pub(crate) fn insert_after(&mut self, sibling: NodeId, new: NodeId) {
        let parent = self.nodes[sibling].parent.expect("sibling has a parent");
        let pos = self.nodes[parent]
            .children
            .iter()
            .position(|&c| c == sibling)
            .expect("child listed under parent");
        self.nodes[new].parent = Some(parent);
        self.nodes[parent].children.insert(pos + 1, new);
    }

    /// Replace `old` with `new` in its parent's child list.
    pub(crate) fn replace_node(&mut self, old: NodeId, new: NodeId) {
        let parent = self.nodes[old].parent.expect("replaced node has a parent");
        let pos = self.nodes[parent]
            .children
            .iter()
            .position(|&c| c == old)
            .expect("child listed under parent");
        self.nodes[parent].children[pos] = new;
        self.nodes[new].parent = Some(parent);
        self.nodes[old].parent = None;
    }

    /// Move all children of `parent` into a chain of `levels` new `tag`
    /// elements.
    pub(crate) fn wrap_children(&mut self, parent: NodeId, tag: &str, levels: usize, attributes: Vec<(String, String)>) {
        if levels == 0 {
            return;
        }
        let kids = std::mem::take(&mut self.nodes[parent].children);
        let mut outer = parent;
        for _ in 0..levels {
            let w = self.create_element(tag, attributes.clone());
            self.append_child(outer, w);
            outer = w;
        }
        for k in kids {
            self.append_child(outer, k);
        }
    }

    pub(crate) fn rename(&mut self, id: NodeId, new_tag: &str) {
        if let NodeData::Element { tag, .. } = &mut self.nodes[id].data {
            *tag = new_tag.to_string();
        }
    }
}

/// Count of elements per tag name, for quick structural assertions.
pub fn tag_histogram(doc: &DomDocument) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for n in doc.elements() {
        *h.entry(n.tag().unwrap_or_default().to_string()).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags_under(doc: &DomDocument, id: NodeId) -> Vec<String> {
        doc.node(id)
            .children
            .iter()
            .filter_map(|&c| doc.node(c).tag().map(str::to_string))
            .collect()
    }

    #[test]
    fn minimal_paragraph() {
        let doc = parse_html("<p>hello</p>");
        let body = doc.body();
        assert_eq!(tags_under(&doc, body), vec!["p"]);
        let p = doc.node(body).children[0];
        assert_eq!(doc.text_content(p), "hello");
    }

    #[test]
    fn empty_input_has_root_and_body() {
        let doc = parse_html("");
        assert_eq!(doc.elements().count(), 2);
        assert_eq!(doc.node(doc.root()).tag(), Some("html"));
        assert_eq!(doc.node(doc.body()).tag(), Some("body"));
        assert!(doc.head().is_none());
    }

    #[test]
    fn unclosed_tags_recovered() {
        let doc = parse_html("<div><p>a<div>b");
        // <div> closes the open <p>: body > div > (p > "a", div > "b")
        let outer = doc.node(doc.body()).children[0];
        assert_eq!(tags_under(&doc, outer), vec!["p", "div"]);
        assert_eq!(doc.text_content(doc.body()), "a b");
        let max_depth = doc.elements().map(|n| n.depth).max().unwrap();
        assert_eq!(max_depth, 3);
    }

    #[test]
    fn ids_are_preorder() {
        let doc = parse_html("<ul><li>a<li>b</ul><table><tr><td>x<td>y</table><p>z");
        for (i, n) in doc.nodes().enumerate() {
            assert_eq!(n.id, i);
            if let Some(p) = n.parent {
                assert!(p < n.id);
                assert!(doc.node(p).children.contains(&n.id));
            }
        }
        let desc = doc.descendants(doc.root());
        assert_eq!(desc, (0..doc.len()).collect::<Vec<_>>());
    }

    #[test]
    fn script_and_style_are_raw() {
        let doc = parse_html("<p>a</p><script>if (a < b) { x = '<p>'; }</script><style>p{color:red}</style>");
        assert_eq!(doc.text_content(doc.root()), "a");
        let raw: Vec<_> = doc
            .nodes()
            .filter_map(|n| match &n.data {
                NodeData::RawText(t) => Some(t.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(raw[0], "if (a < b) { x = '<p>'; }");
    }

    #[test]
    fn unknown_tags_kept() {
        let doc = parse_html("<custom-thing foo=bar>x</custom-thing>");
        let el = doc.node(doc.body()).children[0];
        assert_eq!(doc.node(el).tag(), Some("custom-thing"));
        assert_eq!(doc.node(el).attr("foo"), Some("bar"));
    }

    #[test]
    fn entities_decoded_and_reencoded() {
        let doc = parse_html("<p title=\"a&amp;b\">x &lt; y &amp; z&nbsp;w</p>");
        let p = doc.node(doc.body()).children[0];
        assert_eq!(doc.node(p).attr("title"), Some("a&b"));
        assert_eq!(doc.text_content(p), "x < y & z w");
        let again = parse_html(&doc.to_html());
        assert_eq!(again.text_content(again.body()), "x < y & z w");
    }

    #[test]
    fn invalid_utf8_replaced() {
        let doc = parse_html_bytes(b"<p>ok\xff\xfe</p>");
        assert_eq!(doc.text_content(doc.body()), "ok\u{fffd}\u{fffd}");
    }

    #[test]
    fn serialization_roundtrip_is_stable() {
        let html = "<!DOCTYPE html><html><head><title>T</title><style>.h{display:none}</style></head><body><h1>A</h1><p class=h>b<br>c</p><table><tr><td>1</td></tr></table></body></html>";
        let doc = parse_html(html);
        let once = doc.to_html();
        let twice = parse_html(&once).to_html();
        assert_eq!(once, twice);
    }

    #[test]
    fn wrap_children_nests() {
        let mut doc = parse_html("<p>x</p>");
        let body = doc.body();
        doc.wrap_children(body, "div", 3, vec![]);
        let re = parse_html(&doc.to_html());
        let p = re.elements().find(|n| n.tag() == Some("p")).unwrap();
        assert_eq!(p.depth, 5);
    }
}
