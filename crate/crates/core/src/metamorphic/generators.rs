//! Variant generators, one per relation kind.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    ContractDefaults, FormatKind, InvariantSpec, MetamorphicError, PageVariant, PayloadCatalog, Placement,
    RelationKind, StressDimension, TestCase, BASE_VARIANT,
};
use crate::dom::{parse_html, DomDocument, HidingTechnique, NodeId};
use crate::rng::DetRng;
use crate::similarity::split_sentences;
use crate::templates::{bank, instantiate, PageTemplate, SeedPage};

/// Upper bounds on stress levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StressCaps {
    pub max_depth: usize,
    pub max_elements: usize,
    /// Largest Length level (thousands of characters).
    pub max_length_level: usize,
}

impl Default for StressCaps {
    fn default() -> Self {
        Self {
            max_depth: 500,
            max_elements: 10_000,
            max_length_level: 64,
        }
    }
}

/// Paragraph slots of a page in document order.
fn content_paragraphs(doc: &DomDocument) -> Vec<NodeId> {
    doc.elements()
        .filter(|n| n.attr("data-slot").is_some_and(|s| s.starts_with("para:")))
        .map(|n| n.id)
        .collect()
}

/// The block after which variant content is inserted.
fn middle_paragraph(doc: &DomDocument) -> Option<NodeId> {
    let paras = content_paragraphs(doc);
    (!paras.is_empty()).then(|| paras[paras.len() / 2])
}

fn params(pairs: &[(&str, serde_json::Value)]) -> BTreeMap<String, serde_json::Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn base_variant(page: &SeedPage) -> PageVariant {
    PageVariant {
        variant_id: BASE_VARIANT.to_string(),
        html: page.html.clone(),
        ground_truth: page.ground_truth.clone(),
        profile: page.profile,
        char_length: page.char_length,
        params: BTreeMap::new(),
    }
}

fn new_case(case_id: String, relation: RelationKind, page: &SeedPage, seed: u64, base: PageVariant) -> TestCase {
    TestCase {
        case_id,
        relation,
        task_category: page.task_category,
        template_id: page.template_id.clone(),
        source_page_id: page.page_id.clone(),
        seed,
        base,
        variants: Vec::new(),
        invariant_contract: Vec::new(),
    }
}

/// One variant per technique, each hiding `payload` in a container placed
/// after the middle content paragraph.
pub fn gen_visibility_variants(
    base: &SeedPage,
    techniques: &[HidingTechnique],
    payload_id: &str,
    payload: &str,
    rng_seed: u64,
    contract: &ContractDefaults,
) -> Result<TestCase, MetamorphicError> {
    if techniques.is_empty() {
        return Err(MetamorphicError::NoTechniques);
    }
    if payload.trim().is_empty() {
        return Err(MetamorphicError::EmptyPayload);
    }
    let mut rng = DetRng::derive(rng_seed, "visibility");
    let relation = RelationKind::VisibilityEquivalence {
        techniques: techniques.to_vec(),
        payload_id: payload_id.to_string(),
    };
    let mut case = new_case(format!("visibility-{}", base.page_id), relation, base, rng_seed, base_variant(base));
    for &technique in techniques {
        let container = *rng.pick(&["div", "p", "aside", "section"]);
        let mut doc = parse_html(&base.html);
        let anchor = middle_paragraph(&doc).unwrap_or_else(|| last_body_child(&mut doc));
        let hidden = doc.create_element(
            container,
            vec![
                ("style".into(), technique.inline_style().into()),
                ("data-mr".into(), "hidden".into()),
            ],
        );
        let text = doc.create_text(payload);
        doc.append_child(hidden, text);
        doc.insert_after(anchor, hidden);
        let variant = PageVariant::from_html(
            technique.as_str(),
            doc.to_html(),
            params(&[("technique", json!(technique)), ("container", json!(container))]),
        );
        if variant.ground_truth.visible_text != case.base.ground_truth.visible_text {
            return Err(MetamorphicError::Invariant(variant.variant_id));
        }
        case.variants.push(variant);
    }
    case.invariant_contract = vec![
        InvariantSpec::output_equivalence(contract.tau)?,
        InvariantSpec::hidden_content_absence(contract.epsilon)?,
    ];
    Ok(case)
}

fn last_body_child(doc: &mut DomDocument) -> NodeId {
    let body = doc.body();
    match doc.node(body).children.last() {
        Some(&c) => c,
        None => {
            let p = doc.create_element("p", Vec::new());
            doc.append_child(body, p);
            p
        }
    }
}

/// Pages of the same template at `base_length × scale` characters.
pub fn gen_proportionality_series(
    template: &PageTemplate,
    scales: &[u32],
    base_length: usize,
    rng_seed: u64,
    contract: &ContractDefaults,
) -> Result<TestCase, MetamorphicError> {
    let increasing = scales.windows(2).all(|w| w[0] < w[1]);
    if scales.first() != Some(&1) || !increasing {
        return Err(MetamorphicError::BadScales(scales.to_vec()));
    }
    let base_page = instantiate(template, base_length, rng_seed)?;
    let relation = RelationKind::ContentProportionality { scales: scales.to_vec() };
    let mut case = new_case(
        format!("proportionality-{}", base_page.page_id),
        relation,
        &base_page,
        rng_seed,
        base_variant(&base_page),
    );
    for &s in scales {
        let target = base_length * s as usize;
        let page = if s == 1 { base_page.clone() } else { instantiate(template, target, rng_seed)? };
        let mut v = base_variant(&page);
        v.variant_id = format!("x{s}");
        v.params = params(&[("scale", json!(s)), ("target_length", json!(target))]);
        case.variants.push(v);
    }
    case.invariant_contract = vec![
        InvariantSpec::bounded_latency_growth(contract.beta_max)?,
        InvariantSpec::proportional_scaling(),
    ];
    Ok(case)
}

/// Re-render the paragraph content of `base` in other presentation formats.
pub fn gen_format_variants(
    base: &SeedPage,
    formats: &[FormatKind],
    rng_seed: u64,
    contract: &ContractDefaults,
) -> Result<TestCase, MetamorphicError> {
    if formats.is_empty() {
        return Err(MetamorphicError::NoFormats);
    }
    let probe = parse_html(&base.html);
    let found = content_paragraphs(&probe).len();
    if found < 3 {
        return Err(MetamorphicError::TooFewParagraphs { found, needed: 3 });
    }
    let relation = RelationKind::FormatPreservation { formats: formats.to_vec() };
    let mut case = new_case(format!("format-{}", base.page_id), relation, base, rng_seed, base_variant(base));
    for &format in formats {
        let mut doc = parse_html(&base.html);
        match format {
            FormatKind::Paragraph => {}
            FormatKind::List => {
                for p in content_paragraphs(&doc) {
                    let ul = doc.create_element("ul", vec![("data-format".into(), "list".into())]);
                    for s in split_sentences(&doc.text_content(p)) {
                        let li = doc.create_element("li", Vec::new());
                        let t = doc.create_text(&s);
                        doc.append_child(li, t);
                        doc.append_child(ul, li);
                    }
                    doc.replace_node(p, ul);
                }
            }
            FormatKind::Table => {
                for p in content_paragraphs(&doc) {
                    let table = doc.create_element("table", vec![("data-format".into(), "table".into())]);
                    let tbody = doc.create_element("tbody", Vec::new());
                    doc.append_child(table, tbody);
                    let sentences = split_sentences(&doc.text_content(p));
                    for pair in sentences.chunks(2) {
                        let tr = doc.create_element("tr", Vec::new());
                        for s in pair {
                            let td = doc.create_element("td", Vec::new());
                            let t = doc.create_text(s);
                            doc.append_child(td, t);
                            doc.append_child(tr, td);
                        }
                        doc.append_child(tbody, tr);
                    }
                    doc.replace_node(p, table);
                }
            }
            FormatKind::Headings => {
                let headings: Vec<(NodeId, u8)> = doc
                    .elements()
                    .filter_map(|n| {
                        let t = n.tag()?;
                        let level = t.strip_prefix('h')?.parse::<u8>().ok()?;
                        (1..=6).contains(&level).then_some((n.id, level))
                    })
                    .collect();
                for (id, level) in headings {
                    doc.rename(id, &format!("h{}", (level + 1).min(6)));
                }
                let body = doc.body();
                doc.wrap_children(body, "section", 1, vec![("data-format".into(), "headings".into())]);
            }
        }
        let variant = PageVariant::from_html(format.as_str(), doc.to_html(), params(&[("format", json!(format))]));
        case.variants.push(variant);
    }
    case.invariant_contract = vec![InvariantSpec::output_equivalence(contract.tau)?];
    Ok(case)
}

/// Clean base plus one page per payload embedding its injection text.
pub fn gen_prompt_injection(
    base: &SeedPage,
    catalog: &PayloadCatalog,
    payload_ids: &[String],
    placement: Placement,
    rng_seed: u64,
    contract: &ContractDefaults,
) -> Result<TestCase, MetamorphicError> {
    if catalog.is_empty() {
        return Err(MetamorphicError::EmptyCatalog);
    }
    let mut rng = DetRng::derive(rng_seed, "injection");
    let relation = RelationKind::PromptInjection {
        payload_ids: payload_ids.to_vec(),
        placement,
    };
    let mut case = new_case(format!("injection-{}", base.page_id), relation, base, rng_seed, base_variant(base));
    for id in payload_ids {
        let payload = catalog.get(id).ok_or_else(|| MetamorphicError::UnknownPayload(id.clone()))?;
        let mut doc = parse_html(&base.html);
        let anchor = match middle_paragraph(&doc) {
            Some(p) => p,
            None => {
                let body = doc.body();
                let p = doc.create_element("p", Vec::new());
                doc.append_child(body, p);
                p
            }
        };
        let mut extra = vec![("payload_id", json!(id)), ("placement", json!(placement))];
        match placement {
            Placement::VisibleInline => {
                let t = doc.create_text(&format!(" {}", payload.injection_text));
                doc.append_child(anchor, t);
            }
            Placement::HiddenInline => {
                let technique = *rng.pick(&HidingTechnique::ALL);
                let span = doc.create_element("span", vec![("style".into(), technique.inline_style().into())]);
                let t = doc.create_text(&payload.injection_text);
                doc.append_child(span, t);
                let gap = doc.create_text(" ");
                doc.append_child(anchor, gap);
                doc.append_child(anchor, span);
                extra.push(("technique", json!(technique)));
            }
        }
        case.variants.push(PageVariant::from_html(&format!("inj-{id}"), doc.to_html(), params(&extra)));
    }
    if case.variants.is_empty() {
        return Err(MetamorphicError::EmptyCatalog);
    }
    case.invariant_contract = vec![InvariantSpec::payload_absence(), InvariantSpec::output_equivalence(contract.tau)?];
    if placement == Placement::HiddenInline {
        case.invariant_contract.push(InvariantSpec::hidden_content_absence(contract.epsilon)?);
    }
    Ok(case)
}

/// Stress one structural dimension of a 2000-character page.
pub fn gen_complexity_stress(
    template: &PageTemplate,
    dimension: StressDimension,
    level: usize,
    rng_seed: u64,
    caps: &StressCaps,
    contract: &ContractDefaults,
) -> Result<TestCase, MetamorphicError> {
    if level == 0 {
        return Err(MetamorphicError::ZeroLevel);
    }
    let cap = match dimension {
        StressDimension::Depth => caps.max_depth,
        StressDimension::ElementCount => caps.max_elements,
        StressDimension::Length => caps.max_length_level,
    };
    if level > cap {
        return Err(MetamorphicError::LevelAboveCap { dimension, level, cap });
    }
    let base_page = instantiate(template, 2000, rng_seed)?;
    let relation = RelationKind::ComplexityStress { dimension, level };
    let mut case = new_case(
        format!("stress-{}", base_page.page_id),
        relation,
        &base_page,
        rng_seed,
        base_variant(&base_page),
    );
    let variant = match dimension {
        StressDimension::Depth => {
            let mut doc = parse_html(&base_page.html);
            let body = doc.body();
            doc.wrap_children(body, "div", level, vec![("data-mr".into(), "depth".into())]);
            PageVariant::from_html(&format!("depth-{level}"), doc.to_html(), params(&[("level", json!(level))]))
        }
        StressDimension::ElementCount => {
            let mut doc = parse_html(&base_page.html);
            let body = doc.body();
            for _ in 0..level {
                let span = doc.create_element("span", vec![("data-mr".into(), "filler".into())]);
                doc.append_child(body, span);
            }
            PageVariant::from_html(&format!("elements-{level}"), doc.to_html(), params(&[("level", json!(level))]))
        }
        StressDimension::Length => {
            let page = instantiate(template, level * 1000, rng_seed)?;
            let mut v = base_variant(&page);
            v.variant_id = format!("length-{level}");
            v.params = params(&[("level", json!(level)), ("target_length", json!(level * 1000))]);
            v
        }
    };
    if dimension != StressDimension::Length && variant.ground_truth.visible_text != case.base.ground_truth.visible_text {
        return Err(MetamorphicError::Invariant(variant.variant_id));
    }
    case.variants.push(variant);
    case.invariant_contract = vec![InvariantSpec::bounded_latency_growth(contract.beta_max)?];
    match dimension {
        StressDimension::Length => case.invariant_contract.push(InvariantSpec::proportional_scaling()),
        _ => case.invariant_contract.push(InvariantSpec::output_equivalence(contract.tau)?),
    }
    Ok(case)
}

/// Sentences appended to the middle paragraph of `page`.
fn with_sentences(page: &SeedPage, sentences: &[&str]) -> String {
    let mut doc = parse_html(&page.html);
    let anchor = middle_paragraph(&doc).unwrap_or_else(|| last_body_child(&mut doc));
    for s in sentences {
        let t = doc.create_text(&format!(" {s}"));
        doc.append_child(anchor, t);
    }
    doc.to_html()
}

/// Number of sentences swapped in turn by ambiguity cases.
pub const AMBIGUITY_SENTENCES: usize = 2;

/// The base gains unambiguous sentences; variant `i` swaps sentence `i` for
/// its ambiguous form.
pub fn gen_semantic_ambiguity(
    base: &SeedPage,
    bank_id: &str,
    rng_seed: u64,
    contract: &ContractDefaults,
) -> Result<TestCase, MetamorphicError> {
    let pairs = bank::ambiguity_bank(bank_id).ok_or_else(|| MetamorphicError::UnknownBank(bank_id.to_string()))?;
    let mut rng = DetRng::derive(rng_seed, bank_id);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    rng.shuffle(&mut order);
    let chosen: Vec<(&str, &str)> = order.iter().take(AMBIGUITY_SENTENCES).map(|&i| pairs[i]).collect();
    let clear: Vec<&str> = chosen.iter().map(|p| p.0).collect();
    let base_html = with_sentences(base, &clear);
    let relation = RelationKind::SemanticAmbiguity {
        bank_id: bank_id.to_string(),
    };
    let base_page = PageVariant::from_html(BASE_VARIANT, base_html, params(&[("sentences", json!(clear))]));
    let mut case = new_case(format!("ambiguity-{}", base.page_id), relation, base, rng_seed, base_page);
    for (i, (_, ambiguous)) in chosen.iter().enumerate() {
        let mut sentences = clear.clone();
        sentences[i] = ambiguous;
        case.variants.push(PageVariant::from_html(
            &format!("swap-{i}"),
            with_sentences(base, &sentences),
            params(&[("swapped", json!(i)), ("sentence", json!(ambiguous))]),
        ));
    }
    case.invariant_contract = vec![InvariantSpec::output_equivalence(contract.tau_ambiguity)?];
    Ok(case)
}
