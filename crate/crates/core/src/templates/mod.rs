//! Page templates and deterministic seed-page instantiation.
//!
//! A template is an HTML skeleton with `{{slot}}` placeholders plus a JSON
//! manifest describing each slot:
//!
//! ```json
//! {"task_category": "summarization",
//!  "slots": [{"name": "para:1", "kind": "paragraph", "min_sentences": 1, "max_sentences": 80}]}
//! ```
//!
//! Slot kinds are `title`, `paragraph`, `list` and `table`. Paragraph slots
//! render as `<p data-slot="NAME">`, lists as `<ul data-slot="NAME">` with one
//! `li` per sentence, tables as `<table data-slot="NAME">` with one row per
//! sentence.

pub mod bank;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dom::{compute_visibility, extract_partition, parse_html, structural_profile, ContentPartition, StructuralProfile};
use crate::rng::DetRng;
use crate::TaskCategory;

/// Smallest accepted target length in characters.
pub const MIN_TARGET_LENGTH: usize = 200;

/// Accepted relative deviation of `char_length` from the target.
pub const LENGTH_TOLERANCE: f64 = 0.10;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: field `{field}`: {message}")]
    Manifest { file: String, field: String, message: String },
    #[error("{file}: slot `{slot}` is used in the skeleton but missing from the manifest")]
    UndeclaredSlot { file: String, slot: String },
    #[error("{file}: slot `{slot}` is declared in the manifest but missing from the skeleton")]
    MissingSlot { file: String, slot: String },
    #[error("{file}: slot `{slot}` appears more than once")]
    DuplicateSlot { file: String, slot: String },
    #[error("{file}: unterminated placeholder")]
    UnterminatedPlaceholder { file: String },
    #[error("template `{0}` contains hidden content")]
    HiddenContent(String),
    #[error("target length {target} too small: mandatory slots already need {required} characters (minimum target {MIN_TARGET_LENGTH})")]
    TargetTooSmall { target: usize, required: usize },
    #[error("template `{template}` reached {actual} characters for target {target}")]
    LengthMiss { template: String, target: usize, actual: usize },
    #[error("invalid corpus request: {0}")]
    InvalidCorpus(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    Title,
    Paragraph,
    List,
    Table,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotSpec {
    pub name: String,
    pub kind: SlotKind,
    pub min_sentences: usize,
    pub max_sentences: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    task_category: TaskCategory,
    slots: Vec<SlotSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageTemplate {
    pub template_id: String,
    pub task_category: TaskCategory,
    pub skeleton: String,
    pub slot_spec: Vec<SlotSpec>,
}

/// An instantiated, hidden-content-free page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedPage {
    pub page_id: String,
    pub template_id: String,
    pub task_category: TaskCategory,
    pub seed: u64,
    pub target_length: usize,
    pub char_length: usize,
    pub html: String,
    pub ground_truth: ContentPartition,
    pub profile: StructuralProfile,
    /// Sentences placed in each slot, in order.
    pub fills: BTreeMap<String, Vec<String>>,
}

/// Analyze a page: partition, profile and visible character count.
pub fn analyze(html: &str) -> (ContentPartition, StructuralProfile, usize) {
    let doc = parse_html(html);
    let vis = compute_visibility(&doc);
    let part = extract_partition(&doc, &vis);
    let prof = structural_profile(&doc, &vis);
    let len = part.visible_text.chars().count();
    (part, prof, len)
}

/// Placeholder names in order of appearance.
fn placeholders(skeleton: &str, file: &str) -> Result<Vec<String>, TemplateError> {
    let mut out = Vec::new();
    let mut rest = skeleton;
    while let Some(i) = rest.find("{{") {
        let after = &rest[i + 2..];
        let j = after.find("}}").ok_or_else(|| TemplateError::UnterminatedPlaceholder { file: file.to_string() })?;
        out.push(after[..j].trim().to_string());
        rest = &after[j + 2..];
    }
    Ok(out)
}

/// Validate and assemble a template from its two file contents.
pub fn parse_template(template_id: &str, skeleton: &str, manifest_json: &str) -> Result<PageTemplate, TemplateError> {
    let file = format!("{template_id}.slots.json");
    let de = &mut serde_json::Deserializer::from_str(manifest_json);
    let manifest: Manifest = serde_path_to_error::deserialize(de).map_err(|e| TemplateError::Manifest {
        file: file.clone(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    for (i, slot) in manifest.slots.iter().enumerate() {
        let bad = |field: &str, message: &str| TemplateError::Manifest {
            file: file.clone(),
            field: format!("slots[{i}].{field}"),
            message: message.to_string(),
        };
        if slot.name.is_empty() {
            return Err(bad("name", "empty slot name"));
        }
        if slot.min_sentences > slot.max_sentences {
            return Err(bad("min_sentences", "exceeds max_sentences"));
        }
        if slot.kind == SlotKind::Title && (slot.min_sentences, slot.max_sentences) != (1, 1) {
            return Err(bad("max_sentences", "title slots hold exactly one line"));
        }
        if slot.kind != SlotKind::Title && slot.max_sentences == 0 {
            return Err(bad("max_sentences", "must be at least 1"));
        }
        if manifest.slots[..i].iter().any(|s| s.name == slot.name) {
            return Err(TemplateError::DuplicateSlot { file: file.clone(), slot: slot.name.clone() });
        }
    }
    let html_file = format!("{template_id}.html");
    let used = placeholders(skeleton, &html_file)?;
    for (i, name) in used.iter().enumerate() {
        if used[..i].contains(name) {
            return Err(TemplateError::DuplicateSlot { file: html_file, slot: name.clone() });
        }
        if !manifest.slots.iter().any(|s| &s.name == name) {
            return Err(TemplateError::UndeclaredSlot { file: html_file, slot: name.clone() });
        }
    }
    if let Some(missing) = manifest.slots.iter().find(|s| !used.contains(&s.name)) {
        return Err(TemplateError::MissingSlot { file, slot: missing.name.clone() });
    }
    let doc = parse_html(skeleton);
    if compute_visibility(&doc).iter().any(|(_, s)| s.is_hidden()) {
        return Err(TemplateError::HiddenContent(template_id.to_string()));
    }
    Ok(PageTemplate {
        template_id: template_id.to_string(),
        task_category: manifest.task_category,
        skeleton: skeleton.to_string(),
        slot_spec: manifest.slots,
    })
}

/// Load every `<id>.html` + `<id>.slots.json` pair in `dir`, sorted by id.
pub fn load_templates(dir: &Path) -> Result<Vec<PageTemplate>, TemplateError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| TemplateError::Io { path, source }
    };
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).map_err(io(dir))? {
        let path = entry.map_err(io(dir))?.path();
        if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            if let Some(id) = name.strip_suffix(".slots.json") {
                ids.push(id.to_string());
            }
        }
    }
    ids.sort();
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let html_path = dir.join(format!("{id}.html"));
        let manifest_path = dir.join(format!("{id}.slots.json"));
        let skeleton = fs::read_to_string(&html_path).map_err(io(&html_path))?;
        let manifest = fs::read_to_string(&manifest_path).map_err(io(&manifest_path))?;
        out.push(parse_template(&id, &skeleton, &manifest)?);
    }
    Ok(out)
}

macro_rules! builtin {
    ($($id:literal),* $(,)?) => {
        &[$(($id, include_str!(concat!("../../templates/", $id, ".html")), include_str!(concat!("../../templates/", $id, ".slots.json")))),*]
    };
}

const BUILTIN: &[(&str, &str, &str)] = builtin!(
    "sum-blog-post",
    "sum-encyclopedia",
    "sum-news-article",
    "sum-report",
    "tr-letter",
    "tr-recipe",
    "tr-travel-guide",
    "wa-cover-letter",
    "wa-essay-draft",
    "wa-product-description",
);

/// The template library compiled into the crate, sorted by id.
pub fn builtin_templates() -> Vec<PageTemplate> {
    BUILTIN
        .iter()
        .map(|(id, html, manifest)| parse_template(id, html, manifest).expect("built-in templates are valid"))
        .collect()
}

/// Sentence source that reshuffles whenever it runs dry.
struct SentenceDeck<'a> {
    source: &'a [&'static str],
    order: Vec<usize>,
    next: usize,
}

impl<'a> SentenceDeck<'a> {
    fn new(source: &'a [&'static str], rng: &mut DetRng) -> Self {
        let mut order: Vec<usize> = (0..source.len()).collect();
        rng.shuffle(&mut order);
        Self { source, order, next: 0 }
    }

    fn draw(&mut self, rng: &mut DetRng) -> &'static str {
        if self.next == self.order.len() {
            rng.shuffle(&mut self.order);
            self.next = 0;
        }
        let s = self.source[self.order[self.next]];
        self.next += 1;
        s
    }
}

fn escape(s: &str) -> String {
    html_escape::encode_text(s).into_owned()
}

/// Substitute filled slots into the skeleton.
fn render(template: &PageTemplate, fills: &[Vec<&str>]) -> String {
    let mut html = template.skeleton.clone();
    for (spec, sentences) in template.slot_spec.iter().zip(fills) {
        let body = match spec.kind {
            SlotKind::Title => escape(sentences.first().copied().unwrap_or_default()),
            SlotKind::Paragraph => {
                let text: Vec<String> = sentences.iter().map(|s| escape(s)).collect();
                format!("<p data-slot=\"{}\">{}</p>", spec.name, text.join(" "))
            }
            SlotKind::List => {
                let items: String = sentences.iter().map(|s| format!("<li>{}</li>", escape(s))).collect();
                format!("<ul data-slot=\"{}\">{items}</ul>", spec.name)
            }
            SlotKind::Table => {
                let rows: String = sentences.iter().map(|s| format!("<tr><td>{}</td></tr>", escape(s))).collect();
                format!("<table data-slot=\"{}\"><tbody>{rows}</tbody></table>", spec.name)
            }
        };
        html = html.replacen(&format!("{{{{{}}}}}", spec.name), &body, 1);
    }
    html
}

fn sources(category: TaskCategory) -> (Vec<&'static str>, Vec<&'static str>) {
    match category {
        TaskCategory::Translation => (
            bank::PARALLEL_SENTENCES.iter().map(|(de, _)| *de).collect(),
            bank::GERMAN_TITLES.to_vec(),
        ),
        _ => (bank::ENGLISH_SENTENCES.to_vec(), bank::ENGLISH_TITLES.to_vec()),
    }
}

/// Fill a template to roughly `target_length` visible characters.
///
/// Mandatory minimums are placed first; further sentences go round-robin to
/// slots with spare capacity until the target is reached, never overshooting
/// it by more than 5% when a shorter sentence is available.
pub fn instantiate(template: &PageTemplate, target_length: usize, rng_seed: u64) -> Result<SeedPage, TemplateError> {
    if target_length < MIN_TARGET_LENGTH {
        return Err(TemplateError::TargetTooSmall {
            target: target_length,
            required: MIN_TARGET_LENGTH,
        });
    }
    let mut rng = DetRng::derive(rng_seed, &template.template_id);
    let (sentences, titles) = sources(template.task_category);
    let mut deck = SentenceDeck::new(&sentences, &mut rng);
    let title = *rng.pick(&titles);

    let mut fills: Vec<Vec<&str>> = template
        .slot_spec
        .iter()
        .map(|s| match s.kind {
            SlotKind::Title => vec![title],
            _ => (0..s.min_sentences).map(|_| deck.draw(&mut rng)).collect(),
        })
        .collect();

    let (_, _, base_len) = analyze(&render(template, &fills));
    if base_len as f64 > target_length as f64 * (1.0 + LENGTH_TOLERANCE) {
        return Err(TemplateError::TargetTooSmall {
            target: target_length,
            required: base_len,
        });
    }

    let growable: Vec<usize> = (0..template.slot_spec.len())
        .filter(|&i| template.slot_spec[i].kind != SlotKind::Title)
        .collect();
    let upper = (target_length as f64 * 1.05) as usize;
    let mut estimate = base_len;
    let mut cursor = 0usize;
    'fill: while estimate < target_length {
        let open: Vec<usize> = growable
            .iter()
            .copied()
            .filter(|&i| fills[i].len() < template.slot_spec[i].max_sentences)
            .collect();
        if open.is_empty() {
            break;
        }
        let slot = open[cursor % open.len()];
        cursor += 1;
        let mut attempts = 0;
        loop {
            let s = deck.draw(&mut rng);
            let cost = s.chars().count() + 1;
            if estimate + cost <= upper || attempts == 8 {
                if estimate + cost > upper {
                    // nothing short enough turned up; stop below the target
                    break 'fill;
                }
                fills[slot].push(s);
                estimate += cost;
                break;
            }
            attempts += 1;
        }
    }

    let html = render(template, &fills);
    let (ground_truth, profile, char_length) = analyze(&html);
    let deviation = (char_length as f64 - target_length as f64).abs() / target_length as f64;
    if deviation > LENGTH_TOLERANCE {
        return Err(TemplateError::LengthMiss {
            template: template.template_id.clone(),
            target: target_length,
            actual: char_length,
        });
    }
    let fills = template
        .slot_spec
        .iter()
        .zip(fills)
        .map(|(spec, f)| (spec.name.clone(), f.into_iter().map(str::to_string).collect()))
        .collect();
    Ok(SeedPage {
        page_id: format!("{}-l{}-s{}", template.template_id, target_length, rng_seed),
        template_id: template.template_id.clone(),
        task_category: template.task_category,
        seed: rng_seed,
        target_length,
        char_length,
        html,
        ground_truth,
        profile,
        fills,
    })
}

/// `count` pages, cycling through templates and the length schedule.
pub fn generate_corpus(
    templates: &[PageTemplate],
    count: usize,
    length_schedule: &[usize],
    rng_seed: u64,
) -> Result<Vec<SeedPage>, TemplateError> {
    if count == 0 {
        return Err(TemplateError::InvalidCorpus("count must be at least 1".into()));
    }
    if templates.is_empty() {
        return Err(TemplateError::InvalidCorpus("no templates".into()));
    }
    if length_schedule.is_empty() {
        return Err(TemplateError::InvalidCorpus("empty length schedule".into()));
    }
    (0..count)
        .map(|i| {
            let template = &templates[i % templates.len()];
            let length = length_schedule[i % length_schedule.len()];
            let seed = DetRng::derive(rng_seed, &format!("page/{i}")).next_u64();
            let mut page = instantiate(template, length, seed)?;
            page.page_id = format!("p{i:03}-{}", template.template_id);
            Ok(page)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_library_covers_all_categories() {
        let ts = builtin_templates();
        assert!(ts.len() >= 10);
        for cat in TaskCategory::ALL {
            assert!(ts.iter().any(|t| t.task_category == cat), "{cat}");
        }
        let ids: Vec<_> = ts.iter().map(|t| t.template_id.clone()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn placeholder_mismatches_are_named() {
        let manifest = r#"{"task_category":"summarization","slots":[
            {"name":"title","kind":"title","min_sentences":1,"max_sentences":1},
            {"name":"para:1","kind":"paragraph","min_sentences":1,"max_sentences":3}]}"#;
        let err = parse_template("t", "<h1>{{title}}</h1>", manifest).unwrap_err();
        assert!(matches!(&err, TemplateError::MissingSlot { slot, .. } if slot == "para:1"), "{err}");
        let err = parse_template("t", "<h1>{{title}}</h1>{{para:1}}{{list}}", manifest).unwrap_err();
        assert!(matches!(&err, TemplateError::UndeclaredSlot { slot, .. } if slot == "list"), "{err}");
        let err = parse_template("t", "{{title}}{{para:1}}{{para:1}}", manifest).unwrap_err();
        assert!(matches!(err, TemplateError::DuplicateSlot { .. }));
    }

    #[test]
    fn manifest_errors_name_the_field() {
        let bad = r#"{"task_category":"summarization","slots":[{"name":"t","kind":"poem","min_sentences":1,"max_sentences":1}]}"#;
        match parse_template("x", "{{t}}", bad).unwrap_err() {
            TemplateError::Manifest { file, field, .. } => {
                assert_eq!(file, "x.slots.json");
                assert_eq!(field, "slots[0].kind");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn hidden_skeleton_rejected() {
        let manifest = r#"{"task_category":"summarization","slots":[]}"#;
        let err = parse_template("h", "<p style=\"display:none\">x</p>", manifest).unwrap_err();
        assert!(matches!(err, TemplateError::HiddenContent(_)));
    }

    #[test]
    fn instantiate_is_deterministic_and_on_target() {
        for t in builtin_templates() {
            let a = instantiate(&t, 2000, 7).unwrap();
            let b = instantiate(&t, 2000, 7).unwrap();
            assert_eq!(a.html, b.html);
            assert!(a.char_length.abs_diff(2000) <= 200, "{} -> {}", t.template_id, a.char_length);
            let c = instantiate(&t, 2000, 8).unwrap();
            assert_ne!(a.html, c.html);
            assert!(a.ground_truth.hidden_text.is_empty());
        }
    }

    #[test]
    fn too_small_target_rejected() {
        let t = &builtin_templates()[0];
        assert!(matches!(instantiate(t, 100, 1), Err(TemplateError::TargetTooSmall { .. })));
    }

    #[test]
    fn corpus_round_robin() {
        let ts = builtin_templates();
        let pages = generate_corpus(&ts, 23, &[2000, 4000, 8000], 3).unwrap();
        assert_eq!(pages.len(), 23);
        for (i, p) in pages.iter().enumerate() {
            assert_eq!(p.template_id, ts[i % ts.len()].template_id);
            assert_eq!(p.target_length, [2000, 4000, 8000][i % 3]);
        }
    }
}
