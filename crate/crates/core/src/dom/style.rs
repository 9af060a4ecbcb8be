//! Declared-style resolution over inline styles and single-selector rules.

use std::collections::BTreeMap;

use super::{DomDocument, NodeData, NodeId};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Selector {
    Tag(String),
    Class(String),
    Id(String),
}

impl Selector {
    fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let valid = |name: &str| {
            !name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '-' || c == '_')
        };
        if let Some(rest) = s.strip_prefix('.') {
            valid(rest).then(|| Selector::Class(rest.to_string()))
        } else if let Some(rest) = s.strip_prefix('#') {
            valid(rest).then(|| Selector::Id(rest.to_string()))
        } else {
            valid(s).then(|| Selector::Tag(s.to_ascii_lowercase()))
        }
    }
}

#[derive(Debug, Clone)]
struct Rule {
    selector: Selector,
    declarations: Vec<(String, String)>,
}

/// Rules collected from every `<style>` element, in document order.
#[derive(Debug, Clone, Default)]
pub struct StyleSheet {
    rules: Vec<Rule>,
}

impl StyleSheet {
    pub fn from_document(doc: &DomDocument) -> Self {
        let mut sheet = StyleSheet::default();
        for n in doc.elements().filter(|n| n.tag() == Some("style")) {
            for &c in &n.children {
                if let NodeData::RawText(css) = &doc.node(c).data {
                    sheet.add_css(css);
                }
            }
        }
        sheet
    }

    pub fn parse(css: &str) -> Self {
        let mut sheet = StyleSheet::default();
        sheet.add_css(css);
        sheet
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    fn add_css(&mut self, css: &str) {
        let css = strip_comments(css);
        let mut rest = css.as_str();
        while let Some(open) = rest.find('{') {
            let prelude = rest[..open].trim();
            if prelude.starts_with('@') {
                // skip the whole at-block, nested braces included
                let mut depth = 0usize;
                let mut end = rest.len();
                for (i, ch) in rest[open..].char_indices() {
                    match ch {
                        '{' => depth += 1,
                        '}' => {
                            depth -= 1;
                            if depth == 0 {
                                end = open + i + 1;
                                break;
                            }
                        }
                        _ => {}
                    }
                }
                rest = &rest[end..];
                continue;
            }
            let Some(close) = rest[open..].find('}') else {
                break;
            };
            let body = &rest[open + 1..open + close];
            let declarations = parse_declarations(body);
            for sel in prelude.split(',') {
                if let Some(selector) = Selector::parse(sel) {
                    self.rules.push(Rule {
                        selector,
                        declarations: declarations.clone(),
                    });
                }
            }
            rest = &rest[open + close + 1..];
        }
    }
}

fn strip_comments(css: &str) -> String {
    let mut out = String::with_capacity(css.len());
    let mut rest = css;
    while let Some(i) = rest.find("/*") {
        out.push_str(&rest[..i]);
        match rest[i + 2..].find("*/") {
            Some(j) => rest = &rest[i + 2 + j + 2..],
            None => return out,
        }
    }
    out.push_str(rest);
    out
}

/// Split a declaration block into lowercase `(property, value)` pairs.
/// Malformed declarations are skipped.
pub fn parse_declarations(block: &str) -> Vec<(String, String)> {
    block
        .split(';')
        .filter_map(|decl| {
            let (prop, value) = decl.split_once(':')?;
            let prop = prop.trim().to_ascii_lowercase();
            let mut value = value.trim().to_ascii_lowercase();
            if let Some(v) = value.strip_suffix("!important") {
                value = v.trim_end().to_string();
            }
            if prop.is_empty() || value.is_empty() || prop.contains(char::is_whitespace) {
                return None;
            }
            Some((prop, value))
        })
        .collect()
}

/// Declared properties of an element. Precedence is inline > id > class >
/// tag; within one level the later rule wins.
pub fn declared_style(doc: &DomDocument, sheet: &StyleSheet, id: NodeId) -> BTreeMap<String, String> {
    let node = doc.node(id);
    let mut out = BTreeMap::new();
    let Some(tag) = node.tag() else {
        return out;
    };
    let el_id = node.attr("id");
    let levels: [&dyn Fn(&Selector) -> bool; 3] = [
        &|s| matches!(s, Selector::Tag(t) if t == tag),
        &|s| matches!(s, Selector::Class(c) if node.has_class(c)),
        &|s| matches!(s, Selector::Id(i) if Some(i.as_str()) == el_id),
    ];
    for matches in levels {
        for rule in sheet.rules.iter().filter(|r| matches(&r.selector)) {
            for (k, v) in &rule.declarations {
                out.insert(k.clone(), v.clone());
            }
        }
    }
    if let Some(inline) = node.attr("style") {
        for (k, v) in parse_declarations(inline) {
            out.insert(k, v);
        }
    }
    out
}

/// Parse a length in px (a bare `0` is accepted). Other units yield `None`.
pub(crate) fn parse_px(value: &str) -> Option<f64> {
    let v = value.trim();
    if let Some(num) = v.strip_suffix("px") {
        return num.trim().parse::<f64>().ok().filter(|x| x.is_finite());
    }
    v.parse::<f64>().ok().filter(|x| *x == 0.0)
}
