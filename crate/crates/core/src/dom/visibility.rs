//! Per-node visibility from declared styles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::style::{declared_style, parse_px, StyleSheet};
use super::{DomDocument, NodeId};

/// Offsets at or beyond this many pixels off the top/left edge count as
/// off-screen.
pub const OFFSCREEN_PX: f64 = -9999.0;

/// CSS hiding techniques, declared in precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HidingTechnique {
    DisplayNone,
    VisibilityHidden,
    ZeroOpacity,
    OffScreen,
}

impl HidingTechnique {
    pub const ALL: [HidingTechnique; 4] = [
        HidingTechnique::DisplayNone,
        HidingTechnique::VisibilityHidden,
        HidingTechnique::ZeroOpacity,
        HidingTechnique::OffScreen,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HidingTechnique::DisplayNone => "display_none",
            HidingTechnique::VisibilityHidden => "visibility_hidden",
            HidingTechnique::ZeroOpacity => "zero_opacity",
            HidingTechnique::OffScreen => "off_screen",
        }
    }

    /// Inline style that hides an element with this technique.
    pub fn inline_style(self) -> &'static str {
        match self {
            HidingTechnique::DisplayNone => "display:none",
            HidingTechnique::VisibilityHidden => "visibility:hidden",
            HidingTechnique::ZeroOpacity => "opacity:0",
            HidingTechnique::OffScreen => "position:absolute;left:-9999px",
        }
    }
}

impl fmt::Display for HidingTechnique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HidingTechnique {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HidingTechnique::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown hiding technique `{s}`"))
    }
}

/// Visible, or hidden by a specific technique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", content = "technique", rename_all = "snake_case")]
pub enum VisibilityStatus {
    Visible,
    Hidden(HidingTechnique),
}

impl VisibilityStatus {
    pub fn is_hidden(self) -> bool {
        matches!(self, VisibilityStatus::Hidden(_))
    }

    pub fn technique(self) -> Option<HidingTechnique> {
        match self {
            VisibilityStatus::Visible => None,
            VisibilityStatus::Hidden(t) => Some(t),
        }
    }
}

/// Status of every node, indexed by node id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityMap {
    statuses: Vec<VisibilityStatus>,
}

impl VisibilityMap {
    pub fn get(&self, id: NodeId) -> VisibilityStatus {
        self.statuses[id]
    }

    pub fn len(&self) -> usize {
        self.statuses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statuses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, VisibilityStatus)> + '_ {
        self.statuses.iter().copied().enumerate()
    }
}

#[derive(Clone, Copy, Default)]
struct Inherited {
    /// Best technique that hides the whole subtree.
    subtree: Option<HidingTechnique>,
    /// Computed `visibility` is hidden.
    visibility_hidden: bool,
}

/// Resolve visibility for every node in one pre-order pass.
pub fn compute_visibility(doc: &DomDocument) -> VisibilityMap {
    let sheet = StyleSheet::from_document(doc);
    let mut state: Vec<Inherited> = Vec::with_capacity(doc.len());
    let mut statuses = Vec::with_capacity(doc.len());
    for node in doc.nodes() {
        let parent = node.parent.map(|p| state[p]).unwrap_or_default();
        if !node.is_element() {
            state.push(parent);
            statuses.push(statuses.get(node.parent.unwrap_or(0)).copied().unwrap_or(VisibilityStatus::Visible));
            continue;
        }
        let style = declared_style(doc, &sheet, node.id);
        let get = |k: &str| style.get(k).map(String::as_str);

        let mut subtree = parent.subtree;
        let mut add = |t: HidingTechnique| {
            subtree = Some(subtree.map_or(t, |s| s.min(t)));
        };
        if get("display") == Some("none") {
            add(HidingTechnique::DisplayNone);
        }
        if let Some(op) = get("opacity").and_then(|v| v.parse::<f64>().ok()) {
            if op <= 0.0 {
                add(HidingTechnique::ZeroOpacity);
            }
        }
        if is_offscreen(&get) {
            add(HidingTechnique::OffScreen);
        }
        let visibility_hidden = match get("visibility") {
            Some("hidden") | Some("collapse") => true,
            Some("visible") => false,
            _ => parent.visibility_hidden,
        };

        let mut best = subtree;
        if visibility_hidden {
            best = Some(best.map_or(HidingTechnique::VisibilityHidden, |b| b.min(HidingTechnique::VisibilityHidden)));
        }
        statuses.push(best.map_or(VisibilityStatus::Visible, VisibilityStatus::Hidden));
        state.push(Inherited {
            subtree,
            visibility_hidden,
        });
    }
    VisibilityMap { statuses }
}

fn is_offscreen<'a>(get: &impl Fn(&str) -> Option<&'a str>) -> bool {
    let far = |k: &str| get(k).and_then(parse_px).is_some_and(|v| v <= OFFSCREEN_PX);
    let positioned = matches!(get("position"), Some("absolute") | Some("fixed"));
    (positioned && (far("left") || far("top"))) || far("text-indent")
}
