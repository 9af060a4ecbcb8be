//! Summary tables, timing breakdowns and report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::PhaseTimings;
use crate::validators::{CountsMatrix, Severity, ValidationReport, Validator};

/// Issues listed in the markdown rendering.
pub const TOP_ISSUES: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("reports mix schema versions {0} and {1}")]
    SchemaMismatch(u32, u32),
    #[error("all phase timings are zero")]
    ZeroTimings,
    #[error("unknown report format `{0}` (expected json or markdown)")]
    UnknownFormat(String),
    #[error("report JSON: {0}")]
    Parse(String),
}

/// Issue counts per validator (rows) and target (columns); `None` renders
/// as n/a.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub columns: Vec<String>,
    pub cells: CountsMatrix,
}

fn add_cell(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (None, None) => None,
        (a, b) => Some(a.unwrap_or(0) + b.unwrap_or(0)),
    }
}

impl SummaryTable {
    pub fn cell(&self, v: Validator, target: &str) -> Option<usize> {
        self.cells.get(&v).and_then(|row| row.get(target)).copied().flatten()
    }

    pub fn total(&self) -> usize {
        self.cells.values().flat_map(|r| r.values()).flatten().sum()
    }

    /// Cellwise sum; columns keep first-seen order.
    pub fn merge(&mut self, other: &SummaryTable) {
        for c in &other.columns {
            if !self.columns.contains(c) {
                self.columns.push(c.clone());
            }
        }
        for (v, row) in &other.cells {
            let mine = self.cells.entry(*v).or_default();
            for (target, n) in row {
                let cur = mine.get(target).copied().flatten();
                mine.insert(target.clone(), add_cell(cur, *n));
            }
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| Validation Component |");
        for c in &self.columns {
            let _ = write!(s, " {c} |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---:|".repeat(self.columns.len()));
        s.push('\n');
        for v in Validator::ALL {
            let _ = write!(s, "| {} |", v.title());
            for c in &self.columns {
                match self.cell(v, c) {
                    Some(n) => {
                        let _ = write!(s, " {n} |");
                    }
                    None => s.push_str(" n/a |"),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// One column per target; reports for the same target add up.
pub fn aggregate(reports: &[ValidationReport]) -> Result<SummaryTable, ReportError> {
    if let Some(first) = reports.first() {
        if let Some(r) = reports.iter().find(|r| r.schema_version != first.schema_version) {
            return Err(ReportError::SchemaMismatch(first.schema_version, r.schema_version));
        }
    }
    let mut table = SummaryTable::default();
    for r in reports {
        table.merge(&SummaryTable {
            columns: vec![r.target.clone()],
            cells: r.counts.clone(),
        });
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingBreakdown {
    pub generation_pct: f64,
    pub execution_pct: f64,
    pub validation_pct: f64,
}

/// Share of total time spent in each phase, summed over all run sets.
pub fn timing_breakdown(timings: &[PhaseTimings]) -> Result<TimingBreakdown, ReportError> {
    let g: f64 = timings.iter().map(|t| t.generation_ms).sum();
    let e: f64 = timings.iter().map(|t| t.execution_ms).sum();
    let v: f64 = timings.iter().map(|t| t.validation_ms).sum();
    let total = g + e + v;
    if !(total > 0.0) {
        return Err(ReportError::ZeroTimings);
    }
    Ok(TimingBreakdown {
        generation_pct: 100.0 * g / total,
        execution_pct: 100.0 * e / total,
        validation_pct: 100.0 * v / total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

/// Pretty JSON with object keys sorted at every level.
pub fn canonical_json<T: Serialize>(value: &T) -> Vec<u8> {
    // serde_json::Map is a BTreeMap here, so going through Value sorts keys.
    let value = serde_json::to_value(value).expect("report serializes");
    let mut out = serde_json::to_vec_pretty(&value).expect("value serializes");
    out.push(b'\n');
    out
}

pub fn parse_report(bytes: &[u8]) -> Result<ValidationReport, ReportError> {
    serde_json::from_slice(bytes).map_err(|e| ReportError::Parse(e.to_string()))
}

pub fn emit(report: &ValidationReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => canonical_json(report),
        Format::Markdown => render_markdown(report, TOP_ISSUES).into_bytes(),
    }
}

fn severity_label(s: Severity) -> &'static str {
    match s {
        Severity::Low => "Low",
        Severity::Medium => "Medium",
        Severity::High => "High",
    }
}

pub fn render_markdown(report: &ValidationReport, top_n: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Validation report\n");
    let _ = writeln!(s, "- suite: `{}`", report.suite);
    let _ = writeln!(s, "- target: `{}` ({})", report.target, report.adapter.task_category);
    let _ = writeln!(s, "- metric: `{}`", report.metric);
    let _ = writeln!(s, "- issues: {}\n", report.issues.len());
    let table = SummaryTable {
        columns: vec![report.target.clone()],
        cells: report.counts.clone(),
    };
    s.push_str("## Issue counts\n\n");
    s.push_str(&table.to_markdown());

    let mut by_severity: BTreeMap<std::cmp::Reverse<Severity>, Vec<_>> = BTreeMap::new();
    for i in &report.issues {
        by_severity.entry(std::cmp::Reverse(i.severity)).or_default().push(i);
    }
    let top: Vec<_> = by_severity.into_values().flatten().take(top_n).collect();
    if !top.is_empty() {
        let _ = writeln!(s, "\n## Top issues\n");
        for i in top {
            let _ = writeln!(
                s,
                "### [{}] {} in `{}` ({})\n",
                severity_label(i.severity),
                i.category,
                i.case_id,
                i.variant_ids.join(", ")
            );
            let _ = writeln!(
                s,
                "`{}` = {:.4}, required {} {:.4}\n",
                i.metric_name,
                i.measured_value,
                i.bound.operator(),
                i.threshold
            );
            for e in &i.evidence {
                let _ = writeln!(s, "> {}\n", e.replace('\n', " "));
            }
        }
    }
    if !report.diagnostics.is_empty() {
        let _ = writeln!(s, "\n## Diagnostics\n");
        for d in &report.diagnostics {
            let _ = writeln!(s, "- {d}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_add_with_na() {
        assert_eq!(add_cell(None, None), None);
        assert_eq!(add_cell(Some(2), None), Some(2));
        assert_eq!(add_cell(Some(2), Some(3)), Some(5));
    }

    #[test]
    fn format_names() {
        assert_eq!("json".parse::<Format>(), Ok(Format::Json));
        assert_eq!("md".parse::<Format>(), Ok(Format::Markdown));
        assert!("html".parse::<Format>().is_err());
    }
}
