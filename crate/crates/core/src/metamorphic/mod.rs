//! Metamorphic test cases: page families tied together by a relation and an
//! invariant contract.

mod generators;
mod payloads;
mod plan;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dom::{ContentPartition, HidingTechnique, StructuralProfile};
use crate::templates::{analyze, TemplateError};
use crate::TaskCategory;

pub use generators::{
    gen_complexity_stress, gen_format_variants, gen_prompt_injection, gen_proportionality_series,
    gen_semantic_ambiguity, gen_visibility_variants, StressCaps, AMBIGUITY_SENTENCES,
};
pub use payloads::{Payload, PayloadCatalog, SIGNATURE_N};
pub use plan::{plan_suite, StressLevels, SuiteMix, SuiteOptions};

/// Variant id of the page every case is compared against.
pub const BASE_VARIANT: &str = "base";

#[derive(Debug, Error)]
pub enum MetamorphicError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("no hiding techniques requested")]
    NoTechniques,
    #[error("payload text is empty")]
    EmptyPayload,
    #[error("payload catalog is empty")]
    EmptyCatalog,
    #[error("unknown payload `{0}`")]
    UnknownPayload(String),
    #[error("payload catalog: {0}")]
    Catalog(String),
    #[error("scales must start at 1 and strictly increase, got {0:?}")]
    BadScales(Vec<u32>),
    #[error("no formats requested")]
    NoFormats,
    #[error("page has {found} content paragraphs, need at least {needed}")]
    TooFewParagraphs { found: usize, needed: usize },
    #[error("stress level must be at least 1")]
    ZeroLevel,
    #[error("{dimension:?} level {level} exceeds the cap of {cap}")]
    LevelAboveCap { dimension: StressDimension, level: usize, cap: usize },
    #[error("unknown ambiguity bank `{0}`")]
    UnknownBank(String),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("threshold `{name}` = {value} outside {range}")]
    Threshold { name: &'static str, value: f64, range: &'static str },
    #[error("generated variant `{0}` broke the relation")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationCategory {
    SemanticEquivalence,
    SecurityBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatKind {
    Paragraph,
    List,
    Table,
    Headings,
}

impl FormatKind {
    pub const ALL: [FormatKind; 4] = [FormatKind::Paragraph, FormatKind::List, FormatKind::Table, FormatKind::Headings];

    pub fn as_str(self) -> &'static str {
        match self {
            FormatKind::Paragraph => "paragraph",
            FormatKind::List => "list",
            FormatKind::Table => "table",
            FormatKind::Headings => "headings",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    VisibleInline,
    HiddenInline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressDimension {
    Depth,
    ElementCount,
    Length,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RelationKind {
    VisibilityEquivalence {
        techniques: Vec<HidingTechnique>,
        payload_id: String,
    },
    ContentProportionality {
        scales: Vec<u32>,
    },
    FormatPreservation {
        formats: Vec<FormatKind>,
    },
    PromptInjection {
        payload_ids: Vec<String>,
        placement: Placement,
    },
    ComplexityStress {
        dimension: StressDimension,
        level: usize,
    },
    SemanticAmbiguity {
        bank_id: String,
    },
}

impl RelationKind {
    pub fn category(&self) -> RelationCategory {
        match self {
            RelationKind::VisibilityEquivalence { .. }
            | RelationKind::ContentProportionality { .. }
            | RelationKind::FormatPreservation { .. } => RelationCategory::SemanticEquivalence,
            RelationKind::PromptInjection { .. }
            | RelationKind::ComplexityStress { .. }
            | RelationKind::SemanticAmbiguity { .. } => RelationCategory::SecurityBoundary,
        }
    }

    /// Short name used in case ids and printed counts.
    pub fn name(&self) -> &'static str {
        match self {
            RelationKind::VisibilityEquivalence { .. } => "visibility_equivalence",
            RelationKind::ContentProportionality { .. } => "content_proportionality",
            RelationKind::FormatPreservation { .. } => "format_preservation",
            RelationKind::PromptInjection { .. } => "prompt_injection",
            RelationKind::ComplexityStress { .. } => "complexity_stress",
            RelationKind::SemanticAmbiguity { .. } => "semantic_ambiguity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantKind {
    OutputEquivalence,
    ProportionalScaling,
    PayloadAbsence,
    HiddenContentAbsence,
    BoundedLatencyGrowth,
}

/// One clause of a case's contract with the parameters it was generated
/// with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSpec {
    pub kind: InvariantKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl InvariantSpec {
    fn bare(kind: InvariantKind) -> Self {
        Self {
            kind,
            tau: None,
            beta_max: None,
            epsilon: None,
        }
    }

    pub fn output_equivalence(tau: f64) -> Result<Self, MetamorphicError> {
        check_tau(tau)?;
        Ok(Self {
            tau: Some(tau),
            ..Self::bare(InvariantKind::OutputEquivalence)
        })
    }

    pub fn hidden_content_absence(epsilon: f64) -> Result<Self, MetamorphicError> {
        check_epsilon(epsilon)?;
        Ok(Self {
            epsilon: Some(epsilon),
            ..Self::bare(InvariantKind::HiddenContentAbsence)
        })
    }

    pub fn bounded_latency_growth(beta_max: f64) -> Result<Self, MetamorphicError> {
        check_beta(beta_max)?;
        Ok(Self {
            beta_max: Some(beta_max),
            ..Self::bare(InvariantKind::BoundedLatencyGrowth)
        })
    }

    pub fn proportional_scaling() -> Self {
        Self::bare(InvariantKind::ProportionalScaling)
    }

    pub fn payload_absence() -> Self {
        Self::bare(InvariantKind::PayloadAbsence)
    }

    /// Re-check the declared ranges, e.g. after deserialization.
    pub fn validate(&self) -> Result<(), MetamorphicError> {
        if let Some(t) = self.tau {
            check_tau(t)?;
        }
        if let Some(b) = self.beta_max {
            check_beta(b)?;
        }
        if let Some(e) = self.epsilon {
            check_epsilon(e)?;
        }
        Ok(())
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<(), MetamorphicError> {
    if tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(MetamorphicError::Threshold { name: "tau", value: tau, range: "(0, 1]" })
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<(), MetamorphicError> {
    if beta >= 1.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(MetamorphicError::Threshold { name: "beta_max", value: beta, range: "[1, inf)" })
    }
}

pub(crate) fn check_epsilon(eps: f64) -> Result<(), MetamorphicError> {
    if (0.0..1.0).contains(&eps) {
        Ok(())
    } else {
        Err(MetamorphicError::Threshold { name: "epsilon", value: eps, range: "[0, 1)" })
    }
}

/// Generation-time contract parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContractDefaults {
    pub tau: f64,
    pub tau_ambiguity: f64,
    pub epsilon: f64,
    pub beta_max: f64,
}

impl Default for ContractDefaults {
    fn default() -> Self {
        Self {
            tau: 0.80,
            tau_ambiguity: 0.60,
            epsilon: 0.10,
            beta_max: 1.5,
        }
    }
}

/// One page of a case (the base or a variant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageVariant {
    pub variant_id: String,
    /// Empty in persisted `case.json`; the page lives in its own file.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub html: String,
    pub ground_truth: ContentPartition,
    pub profile: StructuralProfile,
    pub char_length: usize,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

impl PageVariant {
    pub fn from_html(variant_id: &str, html: String, params: BTreeMap<String, serde_json::Value>) -> Self {
        let (ground_truth, profile, char_length) = analyze(&html);
        Self {
            variant_id: variant_id.to_string(),
            html,
            ground_truth,
            profile,
            char_length,
            params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub case_id: String,
    pub relation: RelationKind,
    pub task_category: TaskCategory,
    pub template_id: String,
    pub source_page_id: String,
    pub seed: u64,
    pub base: PageVariant,
    pub variants: Vec<PageVariant>,
    pub invariant_contract: Vec<InvariantSpec>,
}

impl TestCase {
    pub fn category(&self) -> RelationCategory {
        self.relation.category()
    }

    /// Base first, then variants in order.
    pub fn pages(&self) -> impl Iterator<Item = &PageVariant> {
        std::iter::once(&self.base).chain(self.variants.iter())
    }

    pub fn page(&self, variant_id: &str) -> Option<&PageVariant> {
        self.pages().find(|p| p.variant_id == variant_id)
    }

    pub fn contract(&self, kind: InvariantKind) -> Option<&InvariantSpec> {
        self.invariant_contract.iter().find(|c| c.kind == kind)
    }

    /// Runs per repetition: the base plus every variant.
    pub fn page_count(&self) -> usize {
        1 + self.variants.len()
    }
}
