//! Simplified HTML5 tree construction.
//!
//! Covers the recovery rules that matter for ordinary content pages: implied
//! `p`/`li`/`dt`/`dd`/`option` closes, heading nesting, implied `tbody`/`tr`
//! inside tables, void elements, stray end tags and lazily synthesized
//! `head`/`body`. Foster parenting and the adoption agency algorithm are not
//! implemented; misnested formatting elements are closed at the nearest match.

use super::tokenizer::{Token, Tokenizer};
use super::{DomDocument, DomNode, NodeData, NodeId, VOID_ELEMENTS};

const HEAD_ELEMENTS: &[&str] = &["base", "link", "meta", "script", "style", "title"];

const HEADINGS: &[&str] = &["h1", "h2", "h3", "h4", "h5", "h6"];

/// Start tags that close an open `p` in button scope.
const P_CLOSERS: &[&str] = &[
    "address", "article", "aside", "blockquote", "center", "details", "dialog", "dir", "div", "dl",
    "fieldset", "figcaption", "figure", "footer", "form", "header", "hgroup", "hr", "listing", "main",
    "menu", "nav", "ol", "p", "pre", "section", "summary", "table", "ul", "xmp", "h1", "h2", "h3",
    "h4", "h5", "h6",
];

const SPECIAL: &[&str] = &[
    "address", "applet", "area", "article", "aside", "base", "blockquote", "body", "br", "button",
    "caption", "center", "col", "colgroup", "dd", "details", "dir", "div", "dl", "dt", "embed",
    "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "head",
    "header", "hgroup", "hr", "html", "iframe", "img", "input", "li", "link", "listing", "main",
    "marquee", "menu", "meta", "nav", "noembed", "noscript", "object", "ol", "p", "param", "pre",
    "script", "section", "select", "source", "style", "summary", "table", "tbody", "td", "template",
    "textarea", "tfoot", "th", "thead", "title", "tr", "track", "ul", "wbr",
];

const FORMATTING: &[&str] = &[
    "a", "b", "big", "code", "em", "font", "i", "nobr", "s", "small", "strike", "strong", "tt", "u",
];

const DEFAULT_SCOPE: &[&str] = &["applet", "caption", "html", "table", "td", "th", "marquee", "object", "template"];
const TABLE_SCOPE: &[&str] = &["html", "table", "template"];
const TABLE_SECTIONS: &[&str] = &["tbody", "thead", "tfoot"];

pub(crate) struct TreeBuilder {
    nodes: Vec<DomNode>,
    stack: Vec<NodeId>,
    head: Option<NodeId>,
    body: Option<NodeId>,
}

impl TreeBuilder {
    pub(crate) fn new() -> Self {
        let root = DomNode {
            id: 0,
            parent: None,
            children: Vec::new(),
            depth: 0,
            data: NodeData::Element {
                tag: "html".to_string(),
                attributes: Vec::new(),
            },
        };
        Self {
            nodes: vec![root],
            stack: vec![0],
            head: None,
            body: None,
        }
    }

    pub(crate) fn run(mut self, html: &str) -> DomDocument {
        for token in Tokenizer::new(html) {
            match token {
                Token::StartTag { name, attributes } => self.start_tag(&name, attributes),
                Token::EndTag { name } => self.end_tag(&name),
                Token::Text(t) => self.text(t),
                Token::RawText(t) => {
                    let cur = self.current();
                    self.insert(cur, NodeData::RawText(t));
                }
            }
        }
        let body = self.ensure_body(Vec::new());
        DomDocument::from_parts(self.nodes, body, self.head)
    }

    fn current(&self) -> NodeId {
        *self.stack.last().expect("root never popped")
    }

    fn tag_of(&self, id: NodeId) -> &str {
        self.nodes[id].tag().unwrap_or("")
    }

    fn current_tag(&self) -> &str {
        self.tag_of(self.current())
    }

    fn insert(&mut self, parent: NodeId, data: NodeData) -> NodeId {
        let id = self.nodes.len();
        let depth = self.nodes[parent].depth + 1;
        self.nodes.push(DomNode {
            id,
            parent: Some(parent),
            children: Vec::new(),
            depth,
            data,
        });
        self.nodes[parent].children.push(id);
        id
    }

    fn insert_element(&mut self, name: &str, attributes: Vec<(String, String)>) -> NodeId {
        let cur = self.current();
        let id = self.insert(
            cur,
            NodeData::Element {
                tag: name.to_string(),
                attributes,
            },
        );
        if !VOID_ELEMENTS.contains(&name) {
            self.stack.push(id);
        }
        id
    }

    fn merge_attributes(&mut self, id: NodeId, extra: Vec<(String, String)>) {
        if let NodeData::Element { attributes, .. } = &mut self.nodes[id].data {
            for (k, v) in extra {
                if !attributes.iter().any(|(e, _)| *e == k) {
                    attributes.push((k, v));
                }
            }
        }
    }

    fn ensure_head(&mut self) -> NodeId {
        if let Some(h) = self.head {
            if !self.stack.contains(&h) {
                self.stack.truncate(1);
                self.stack.push(h);
            }
            return h;
        }
        self.stack.truncate(1);
        let h = self.insert_element("head", Vec::new());
        self.head = Some(h);
        h
    }

    fn ensure_body(&mut self, attributes: Vec<(String, String)>) -> NodeId {
        if let Some(b) = self.body {
            self.merge_attributes(b, attributes);
            return b;
        }
        self.stack.truncate(1);
        let b = self.insert_element("body", attributes);
        self.body = Some(b);
        b
    }

    fn in_scope(&self, targets: &[&str], boundaries: &[&str]) -> bool {
        for &id in self.stack.iter().rev() {
            let tag = self.tag_of(id);
            if targets.contains(&tag) {
                return true;
            }
            if boundaries.contains(&tag) {
                return false;
            }
        }
        false
    }

    fn in_button_scope(&self, target: &str) -> bool {
        for &id in self.stack.iter().rev() {
            let tag = self.tag_of(id);
            if tag == target {
                return true;
            }
            if tag == "button" || DEFAULT_SCOPE.contains(&tag) {
                return false;
            }
        }
        false
    }

    /// Pop until an element with one of `targets` has been popped.
    fn pop_until(&mut self, targets: &[&str]) {
        while self.stack.len() > 1 {
            let id = self.stack.pop().expect("len checked");
            if targets.contains(&self.tag_of(id)) {
                return;
            }
        }
    }

    fn close_p_if_open(&mut self) {
        if self.in_button_scope("p") {
            self.pop_until(&["p"]);
        }
    }

    fn close_list_item(&mut self, kinds: &[&str]) {
        for i in (1..self.stack.len()).rev() {
            let tag = self.tag_of(self.stack[i]).to_string();
            if kinds.contains(&tag.as_str()) {
                self.stack.truncate(i);
                return;
            }
            if SPECIAL.contains(&tag.as_str()) && !matches!(tag.as_str(), "address" | "div" | "p") {
                return;
            }
        }
    }

    fn start_tag(&mut self, name: &str, attributes: Vec<(String, String)>) {
        if name == "html" {
            self.merge_attributes(0, attributes);
            return;
        }
        if self.body.is_none() {
            if name == "head" {
                let h = self.ensure_head();
                self.merge_attributes(h, attributes);
                return;
            }
            if HEAD_ELEMENTS.contains(&name) {
                self.ensure_head();
                self.insert_element(name, attributes);
                return;
            }
            if name == "body" {
                self.ensure_body(attributes);
                return;
            }
            self.ensure_body(Vec::new());
        }
        match name {
            "body" => {
                let b = self.body.expect("body exists");
                self.merge_attributes(b, attributes);
                return;
            }
            "head" => return,
            _ => {}
        }

        match name {
            "li" => {
                self.close_list_item(&["li"]);
                self.close_p_if_open();
            }
            "dd" | "dt" => {
                self.close_list_item(&["dd", "dt"]);
                self.close_p_if_open();
            }
            _ if P_CLOSERS.contains(&name) => {
                self.close_p_if_open();
                if HEADINGS.contains(&name) && HEADINGS.contains(&self.current_tag()) {
                    self.stack.pop();
                }
            }
            "option" => {
                if self.current_tag() == "option" {
                    self.stack.pop();
                }
            }
            "a" => {
                if self.in_scope(&["a"], DEFAULT_SCOPE) {
                    self.pop_until(&["a"]);
                }
            }
            "button" => {
                if self.in_scope(&["button"], DEFAULT_SCOPE) {
                    self.pop_until(&["button"]);
                }
            }
            "tr" => {
                if self.in_scope(&["tr"], TABLE_SCOPE) {
                    self.pop_until(&["tr"]);
                }
                if self.current_tag() == "table" {
                    self.insert_element("tbody", Vec::new());
                }
            }
            "td" | "th" => {
                if self.in_scope(&["td", "th"], TABLE_SCOPE) {
                    self.pop_until(&["td", "th"]);
                }
                if self.current_tag() == "table" {
                    self.insert_element("tbody", Vec::new());
                }
                if TABLE_SECTIONS.contains(&self.current_tag()) {
                    self.insert_element("tr", Vec::new());
                }
            }
            "tbody" | "thead" | "tfoot"
                if self.in_scope(&["table"], TABLE_SCOPE) => {
                    while !matches!(self.current_tag(), "table" | "html") {
                        self.stack.pop();
                    }
                }
            _ => {}
        }
        self.insert_element(name, attributes);
    }

    fn end_tag(&mut self, name: &str) {
        if self.body.is_none() && !matches!(name, "br" | "head") && !self.in_scope(&[name], &[]) {
            return;
        }
        match name {
            "html" | "body" => {}
            "head" => {
                if self.current_tag() == "head" {
                    self.stack.pop();
                }
            }
            "br" => {
                self.ensure_body(Vec::new());
                self.insert_element("br", Vec::new());
            }
            "p" => {
                self.ensure_body(Vec::new());
                if self.in_button_scope("p") {
                    self.pop_until(&["p"]);
                } else {
                    self.insert_element("p", Vec::new());
                    self.stack.pop();
                }
            }
            _ if HEADINGS.contains(&name) => {
                if self.in_scope(HEADINGS, DEFAULT_SCOPE) {
                    self.pop_until(HEADINGS);
                }
            }
            "li" => {
                let mut bounds = DEFAULT_SCOPE.to_vec();
                bounds.extend(["ol", "ul"]);
                if self.in_scope(&["li"], &bounds) {
                    self.pop_until(&["li"]);
                }
            }
            "table" | "tbody" | "thead" | "tfoot" | "tr" | "td" | "th" | "caption" => {
                if self.in_scope(&[name], TABLE_SCOPE) {
                    self.pop_until(&[name]);
                }
            }
            _ if FORMATTING.contains(&name) => {
                if self.in_scope(&[name], DEFAULT_SCOPE) {
                    self.pop_until(&[name]);
                }
            }
            _ if SPECIAL.contains(&name) => {
                if self.in_scope(&[name], DEFAULT_SCOPE) {
                    self.pop_until(&[name]);
                }
            }
            _ => {
                for i in (1..self.stack.len()).rev() {
                    let tag = self.tag_of(self.stack[i]);
                    if tag == name {
                        self.stack.truncate(i);
                        return;
                    }
                    if SPECIAL.contains(&tag) {
                        return;
                    }
                }
            }
        }
    }

    fn text(&mut self, text: String) {
        if text.is_empty() {
            return;
        }
        let blank = text.chars().all(|c| c.is_ascii_whitespace());
        if self.body.is_none() {
            if blank {
                return;
            }
            self.ensure_body(Vec::new());
        }
        let cur = self.current();
        if blank && matches!(self.current_tag(), "table" | "tbody" | "thead" | "tfoot" | "tr") {
            return;
        }
        if let Some(&last) = self.nodes[cur].children.last() {
            if let NodeData::Text(prev) = &mut self.nodes[last].data {
                prev.push_str(&text);
                return;
            }
        }
        self.insert(cur, NodeData::Text(text));
    }
}

#[cfg(test)]
mod tests {
    use crate::dom::{parse_html, DomDocument, NodeId};

    /// Compact tree rendering: tags and quoted text.
    fn shape(doc: &DomDocument, id: NodeId) -> String {
        let n = doc.node(id);
        match n.tag() {
            Some(t) => {
                let kids: Vec<String> = n.children.iter().map(|&c| shape(doc, c)).collect();
                if kids.is_empty() {
                    t.to_string()
                } else {
                    format!("{t}({})", kids.join(","))
                }
            }
            None => format!("{:?}", n.text().unwrap_or("")),
        }
    }

    fn body_shape(html: &str) -> String {
        let doc = parse_html(html);
        shape(&doc, doc.body())
    }

    #[test]
    fn implied_list_item_close() {
        assert_eq!(body_shape("<ul><li>a<li>b</ul>"), r#"body(ul(li("a"),li("b")))"#);
    }

    #[test]
    fn implied_table_sections() {
        assert_eq!(
            body_shape("<table><tr><td>1<td>2<tr><td>3</table>"),
            r#"body(table(tbody(tr(td("1"),td("2")),tr(td("3")))))"#
        );
    }

    #[test]
    fn heading_closes_heading() {
        assert_eq!(body_shape("<h1>a<h2>b"), r#"body(h1("a"),h2("b"))"#);
    }

    #[test]
    fn stray_end_p_inserts_empty_p() {
        assert_eq!(body_shape("a</p>b"), r#"body("a",p,"b")"#);
        assert_eq!(body_shape("</p>"), "body");
    }

    #[test]
    fn stray_end_tag_ignored_at_special_boundary() {
        assert_eq!(body_shape("<span><div>x</span>y"), r#"body(span(div("xy")))"#);
    }

    #[test]
    fn head_content_goes_to_head() {
        let doc = parse_html("<title>T</title><meta charset=utf-8><p>x");
        let head = doc.head().expect("head synthesized");
        // raw text renders as ""
        assert_eq!(shape(&doc, head), r#"head(title(""),meta)"#);
        assert_eq!(shape(&doc, doc.body()), r#"body(p("x"))"#);
    }

    #[test]
    fn body_attributes_merge() {
        let doc = parse_html("<body class=a><p>x</p><body id=b>");
        let body = doc.node(doc.body());
        assert_eq!(body.attr("class"), Some("a"));
        assert_eq!(body.attr("id"), Some("b"));
    }

    #[test]
    fn depths_follow_parents() {
        let doc = parse_html("<div><section><p><span>x</span></p></section></div>");
        for n in doc.nodes() {
            match n.parent {
                Some(p) => assert_eq!(n.depth, doc.node(p).depth + 1),
                None => assert_eq!(n.depth, 0),
            }
        }
    }
}
