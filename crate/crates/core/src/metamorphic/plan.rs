//! Suite planning: allocate a case budget over the six relation subtypes.

use serde::{Deserialize, Serialize};

use super::generators::{
    gen_complexity_stress, gen_format_variants, gen_prompt_injection, gen_proportionality_series,
    gen_semantic_ambiguity, gen_visibility_variants, StressCaps,
};
use super::{ContractDefaults, FormatKind, MetamorphicError, PayloadCatalog, Placement, StressDimension, TestCase};
use crate::dom::HidingTechnique;
use crate::rng::DetRng;
use crate::templates::{bank, PageTemplate, SeedPage};

/// Number of cases per relation category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteMix {
    pub semantic_equivalence: usize,
    pub security_boundary: usize,
}

impl SuiteMix {
    pub fn total(&self) -> usize {
        self.semantic_equivalence + self.security_boundary
    }
}

impl Default for SuiteMix {
    fn default() -> Self {
        Self {
            semantic_equivalence: 80,
            security_boundary: 20,
        }
    }
}

/// Per-dimension stress levels used by planned cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StressLevels {
    pub depth: usize,
    pub element_count: usize,
    /// Thousands of visible characters.
    pub length: usize,
}

impl Default for StressLevels {
    fn default() -> Self {
        Self {
            depth: 40,
            element_count: 1000,
            length: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteOptions {
    pub scales: Vec<u32>,
    pub base_length: usize,
    pub stress_levels: StressLevels,
    pub stress_caps: StressCaps,
    pub contract: ContractDefaults,
    pub payloads_per_case: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            scales: vec![1, 2, 4],
            base_length: 2000,
            stress_levels: StressLevels::default(),
            stress_caps: StressCaps::default(),
            contract: ContractDefaults::default(),
            payloads_per_case: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Subtype {
    Visibility,
    Proportionality,
    Format,
    Injection,
    Stress,
    Ambiguity,
}

impl Subtype {
    fn slug(self) -> &'static str {
        match self {
            Subtype::Visibility => "visibility",
            Subtype::Proportionality => "proportionality",
            Subtype::Format => "format",
            Subtype::Injection => "injection",
            Subtype::Stress => "stress",
            Subtype::Ambiguity => "ambiguity",
        }
    }
}

/// Split `n` into `k` near-equal parts, remainder to the first parts.
fn split(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
}

/// Subtype of each case in planned order: one round of all six subtypes at a
/// time while their budgets last.
fn schedule(mix: &SuiteMix) -> Vec<(Subtype, usize)> {
    let se = split(mix.semantic_equivalence, 3);
    let sb = split(mix.security_boundary, 3);
    let budget = [
        (Subtype::Visibility, se[0]),
        (Subtype::Proportionality, se[1]),
        (Subtype::Format, se[2]),
        (Subtype::Injection, sb[0]),
        (Subtype::Stress, sb[1]),
        (Subtype::Ambiguity, sb[2]),
    ];
    let rounds = budget.iter().map(|b| b.1).max().unwrap_or(0);
    let mut out = Vec::with_capacity(mix.total());
    for r in 0..rounds {
        for &(sub, n) in &budget {
            if r < n {
                out.push((sub, r));
            }
        }
    }
    out
}

fn template_for<'a>(templates: &'a [PageTemplate], page: &SeedPage) -> Result<&'a PageTemplate, MetamorphicError> {
    templates
        .iter()
        .find(|t| t.template_id == page.template_id)
        .ok_or_else(|| MetamorphicError::UnknownTemplate(page.template_id.clone()))
}

/// Plan `mix.total()` cases over `corpus`. Case `i` draws its page from
/// `corpus[i % len]` and its seed from the suite seed and `i`.
pub fn plan_suite(
    templates: &[PageTemplate],
    corpus: &[SeedPage],
    catalog: &PayloadCatalog,
    mix: &SuiteMix,
    options: &SuiteOptions,
    rng_seed: u64,
) -> Result<Vec<TestCase>, MetamorphicError> {
    if mix.total() == 0 {
        return Ok(Vec::new());
    }
    if corpus.is_empty() {
        return Err(MetamorphicError::EmptyCorpus);
    }
    if catalog.is_empty() {
        return Err(MetamorphicError::EmptyCatalog);
    }
    let c = &options.contract;
    let mut cases = Vec::with_capacity(mix.total());
    for (idx, (sub, j)) in schedule(mix).into_iter().enumerate() {
        let page = &corpus[idx % corpus.len()];
        let seed = DetRng::derive(rng_seed, &format!("case/{idx}")).next_u64();
        let mut case = match sub {
            Subtype::Visibility => {
                let statement = bank::HIDDEN_STATEMENTS[j % bank::HIDDEN_STATEMENTS.len()];
                gen_visibility_variants(page, &HidingTechnique::ALL, &format!("hidden-{}", j % bank::HIDDEN_STATEMENTS.len()), statement, seed, c)?
            }
            Subtype::Proportionality => {
                gen_proportionality_series(template_for(templates, page)?, &options.scales, options.base_length, seed, c)?
            }
            Subtype::Format => gen_format_variants(page, &FormatKind::ALL, seed, c)?,
            Subtype::Injection => {
                let n = catalog.len();
                let ids: Vec<String> = (0..options.payloads_per_case.max(1))
                    .map(|k| catalog.entries()[(options.payloads_per_case.max(1) * j + k) % n].payload_id.clone())
                    .collect();
                let placement = if j % 2 == 0 { Placement::VisibleInline } else { Placement::HiddenInline };
                gen_prompt_injection(page, catalog, &ids, placement, seed, c)?
            }
            Subtype::Stress => {
                let template = template_for(templates, page)?;
                let levels = &options.stress_levels;
                let (dimension, level) = match j % 3 {
                    0 => (StressDimension::Depth, levels.depth),
                    1 => (StressDimension::ElementCount, levels.element_count),
                    _ => (StressDimension::Length, levels.length),
                };
                gen_complexity_stress(template, dimension, level, seed, &options.stress_caps, c)?
            }
            Subtype::Ambiguity => {
                let bank_id = bank::AMBIGUITY_BANK_IDS[j % bank::AMBIGUITY_BANK_IDS.len()];
                gen_semantic_ambiguity(page, bank_id, seed, c)?
            }
        };
        case.case_id = format!("{idx:04}-{}", sub.slug());
        cases.push(case);
    }
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_gives_remainder_to_earlier_parts() {
        assert_eq!(split(800, 3), vec![267, 267, 266]);
        assert_eq!(split(200, 3), vec![67, 67, 66]);
        assert_eq!(split(1, 3), vec![1, 0, 0]);
        assert_eq!(split(0, 3), vec![0, 0, 0]);
    }

    #[test]
    fn schedule_counts_are_exact() {
        let mix = SuiteMix {
            semantic_equivalence: 800,
            security_boundary: 200,
        };
        let s = schedule(&mix);
        assert_eq!(s.len(), 1000);
        let se = s
            .iter()
            .filter(|(t, _)| matches!(t, Subtype::Visibility | Subtype::Proportionality | Subtype::Format))
            .count();
        assert_eq!(se, 800);
        assert_eq!(s.iter().filter(|(t, _)| *t == Subtype::Ambiguity).count(), 66);
    }
}
