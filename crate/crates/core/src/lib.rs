//! Metamorphic testing for AI-powered web-content processors.
//!
//! The crate is organised as a pipeline:
//!
//! * [`dom`] parses HTML, resolves the CSS hiding techniques and splits a page
//!   into visible and hidden text.
//! * [`templates`] instantiates deterministic seed pages from a template
//!   library and an embedded text bank.
//! * [`metamorphic`] turns seed pages into test cases: families of variants
//!   tied together by a relation and an invariant contract.
//! * [`harness`] executes cases against an extension-under-test through
//!   subprocess, HTTP or in-process adapters.
//! * [`mocks`] provides deterministic reference extensions with injectable
//!   faults.
//! * [`similarity`], [`validators`] and [`report`] turn captured behavior into
//!   categorized issues and summary tables.

pub mod dom;
pub mod harness;
pub mod metamorphic;
pub mod mocks;
pub mod protocol;
pub mod report;
pub mod rng;
pub mod similarity;
pub mod store;
pub mod templates;
pub mod validators;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use metamorphic::{InvariantKind, InvariantSpec, PayloadCatalog, RelationCategory, RelationKind, TestCase};
pub use harness::{AdapterDescriptor, AdapterKind, RunRecord, RunSet, RunStatus};
pub use mocks::FaultProfile;
pub use similarity::{SimilarityMetric, TextMetric};
pub use templates::{PageTemplate, SeedPage};
pub use validators::{Issue, IssueCategory, Severity, Thresholds, ValidationReport};

pub use dom::{parse_html, ContentPartition, DomDocument, HidingTechnique, StructuralProfile, VisibilityStatus};

/// The kind of work an extension-under-test performs on a page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskCategory {
    Summarization,
    Translation,
    WritingAssistance,
}

impl TaskCategory {
    pub const ALL: [TaskCategory; 3] = [
        TaskCategory::Summarization,
        TaskCategory::Translation,
        TaskCategory::WritingAssistance,
    ];

    /// Task verb used on the adapter wire protocol.
    pub fn wire_name(self) -> &'static str {
        match self {
            TaskCategory::Summarization => "summarize",
            TaskCategory::Translation => "translate",
            TaskCategory::WritingAssistance => "assist",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskCategory::Summarization => "summarization",
            TaskCategory::Translation => "translation",
            TaskCategory::WritingAssistance => "writing_assistance",
        }
    }
}

impl fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "summarize" | "summarization" => Ok(TaskCategory::Summarization),
            "translate" | "translation" => Ok(TaskCategory::Translation),
            "assist" | "writing_assistance" | "writing-assistance" => Ok(TaskCategory::WritingAssistance),
            other => Err(format!("unknown task `{other}` (expected summarize, translate or assist)")),
        }
    }
}
