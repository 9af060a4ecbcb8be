//! Execution of test cases against an extension-under-test.

mod adapters;
mod server;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adapters::{
    Adapter, AdapterDescriptor, AdapterKind, CallFailure, Capabilities, HttpAdapter, MockAdapter, SubprocessAdapter,
    WORKDIR_ENV,
};
pub use server::{serve_pages, PageServer};

use crate::metamorphic::TestCase;
use crate::mocks::MockError;
use crate::protocol::Request;
use crate::validators::{IssueCategory, ValidationReport};
use crate::TaskCategory;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("adapter spec `{spec}`: {reason}")]
    BadSpec { spec: String, reason: String },
    #[error("adapter unreachable: {0}")]
    Unreachable(String),
    #[error(transparent)]
    Profile(#[from] MockError),
    #[error("bind failed: {0}")]
    Bind(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid execution config: {0}")]
    Config(String),
    #[error("suite is empty")]
    EmptySuite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Timeout,
    AdapterError,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionRequest {
    pub case_id: String,
    pub variant_id: String,
    pub repetition_index: u32,
    pub page_html: String,
    pub task_category: TaskCategory,
    pub timeout_ms: u64,
}

impl ExecutionRequest {
    /// Wire id: `case/variant/repetition`.
    pub fn wire_id(&self) -> String {
        format!("{}/{}/{}", self.case_id, self.variant_id, self.repetition_index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub case_id: String,
    pub variant_id: String,
    pub repetition_index: u32,
    pub output_text: String,
    pub latency_ms: u64,
    /// Same measurement at microsecond resolution.
    pub latency_us: u64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_detail: Option<String>,
    /// Completion time relative to the start of the suite.
    pub finished_us: u64,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }

    /// Latency in milliseconds with microsecond precision.
    pub fn latency(&self) -> f64 {
        self.latency_us as f64 / 1000.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub generation_ms: f64,
    pub execution_ms: f64,
    pub validation_ms: f64,
}

impl PhaseTimings {
    pub fn total_ms(&self) -> f64 {
        self.generation_ms + self.execution_ms + self.validation_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSet {
    /// Digest of the suite the records belong to.
    pub suite_id: String,
    pub adapter: AdapterDescriptor,
    pub repetitions: u32,
    pub timeout_ms: u64,
    pub parallelism: usize,
    pub records: Vec<RunRecord>,
    pub phase_timings: PhaseTimings,
}

impl RunSet {
    /// Records of one case/variant in repetition order.
    pub fn runs<'a>(&'a self, case_id: &'a str, variant_id: &'a str) -> impl Iterator<Item = &'a RunRecord> + 'a {
        self.records
            .iter()
            .filter(move |r| r.case_id == case_id && r.variant_id == variant_id)
    }

    pub fn by_case(&self) -> BTreeMap<&str, Vec<&RunRecord>> {
        let mut m: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
        for r in &self.records {
            m.entry(r.case_id.as_str()).or_default().push(r);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExecutionConfig {
    pub repetitions: u32,
    pub timeout_ms: u64,
    pub parallelism: usize,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        Self {
            repetitions: 3,
            timeout_ms: 30_000,
            parallelism: 4,
        }
    }
}

impl ExecutionConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.repetitions == 0 {
            return Err(HarnessError::Config("repetitions must be at least 1".into()));
        }
        if self.timeout_ms == 0 {
            return Err(HarnessError::Config("timeout_ms must be positive".into()));
        }
        if self.parallelism == 0 {
            return Err(HarnessError::Config("parallelism must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Progress {
    CaseCompleted {
        case_id: String,
        completed: usize,
        total: usize,
        running: usize,
    },
}

fn run_one(adapter: &mut dyn Adapter, req: &ExecutionRequest, suite_start: Instant) -> RunRecord {
    let wire = Request::new(req.wire_id(), req.task_category, req.page_html.clone());
    let timeout = Duration::from_millis(req.timeout_ms);
    let start = Instant::now();
    let result = adapter.call(&wire, timeout);
    let elapsed = start.elapsed();
    let (output_text, status, error_detail) = match result {
        Ok(resp) => (resp.output, RunStatus::Ok, None),
        Err(CallFailure::Timeout) => (
            String::new(),
            RunStatus::Timeout,
            Some(format!("no response within {} ms", req.timeout_ms)),
        ),
        Err(CallFailure::Error(e)) => (String::new(), RunStatus::AdapterError, Some(e)),
    };
    RunRecord {
        case_id: req.case_id.clone(),
        variant_id: req.variant_id.clone(),
        repetition_index: req.repetition_index,
        output_text,
        latency_ms: elapsed.as_millis() as u64,
        latency_us: elapsed.as_micros() as u64,
        status,
        error_detail,
        finished_us: suite_start.elapsed().as_micros() as u64,
    }
}

fn requests(case: &TestCase, task: TaskCategory, repetitions: u32, timeout_ms: u64) -> Vec<ExecutionRequest> {
    case.pages()
        .flat_map(|page| {
            (0..repetitions).map(move |rep| ExecutionRequest {
                case_id: case.case_id.clone(),
                variant_id: page.variant_id.clone(),
                repetition_index: rep,
                page_html: page.html.clone(),
                task_category: task,
                timeout_ms,
            })
        })
        .collect()
}

/// Run every page of `case` `repetitions` times; records come back in
/// variant order, then repetition order.
pub fn execute_case(
    adapter: &mut dyn Adapter,
    case: &TestCase,
    task: TaskCategory,
    repetitions: u32,
    timeout_ms: u64,
) -> Vec<RunRecord> {
    let start = Instant::now();
    requests(case, task, repetitions, timeout_ms)
        .iter()
        .map(|r| run_one(adapter, r, start))
        .collect()
}

fn failed_case(case: &TestCase, task: TaskCategory, config: &ExecutionConfig, why: &str, start: Instant) -> Vec<RunRecord> {
    requests(case, task, config.repetitions, config.timeout_ms)
        .into_iter()
        .map(|r| RunRecord {
            case_id: r.case_id,
            variant_id: r.variant_id,
            repetition_index: r.repetition_index,
            output_text: String::new(),
            latency_ms: 0,
            latency_us: 0,
            status: RunStatus::AdapterError,
            error_detail: Some(why.to_string()),
            finished_us: start.elapsed().as_micros() as u64,
        })
        .collect()
}

/// Execute all cases with up to `parallelism` workers, each owning its own
/// adapter instance. Per-run failures become records; nothing aborts.
pub fn run_suite(
    adapter: &AdapterDescriptor,
    suite_id: &str,
    cases: &[TestCase],
    config: &ExecutionConfig,
    progress: Option<mpsc::Sender<Progress>>,
) -> Result<RunSet, HarnessError> {
    config.validate()?;
    if cases.is_empty() {
        return Err(HarnessError::EmptySuite);
    }
    let start = Instant::now();
    let next = AtomicUsize::new(0);
    let running = AtomicUsize::new(0);
    let workers = config.parallelism.min(cases.len());
    let task = adapter.task_category;
    let mut slots: Vec<Option<Vec<RunRecord>>> = vec![None; cases.len()];

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(usize, Vec<RunRecord>)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, running) = (&next, &running);
            scope.spawn(move || {
                let mut instance = adapter.connect();
                loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= cases.len() {
                        break;
                    }
                    running.fetch_add(1, Ordering::SeqCst);
                    let records = match &mut instance {
                        Ok(a) => {
                            let reqs = requests(&cases[i], task, config.repetitions, config.timeout_ms);
                            reqs.iter().map(|r| run_one(a.as_mut(), r, start)).collect()
                        }
                        Err(e) => failed_case(&cases[i], task, config, &e.to_string(), start),
                    };
                    running.fetch_sub(1, Ordering::SeqCst);
                    if tx.send((i, records)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        let mut completed = 0;
        for (i, records) in rx {
            completed += 1;
            if let Some(p) = &progress {
                let _ = p.send(Progress::CaseCompleted {
                    case_id: cases[i].case_id.clone(),
                    completed,
                    total: cases.len(),
                    running: running.load(Ordering::SeqCst),
                });
            }
            slots[i] = Some(records);
        }
    });

    let records = slots.into_iter().flatten().flatten().collect();
    Ok(RunSet {
        suite_id: suite_id.to_string(),
        adapter: adapter.clone(),
        repetitions: config.repetitions,
        timeout_ms: config.timeout_ms,
        parallelism: config.parallelism,
        records,
        phase_timings: PhaseTimings {
            execution_ms: start.elapsed().as_secs_f64() * 1000.0,
            ..PhaseTimings::default()
        },
    })
}

/// When an issue category first became detectable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstIssue {
    /// Cases finished (in completion order) up to and including the first
    /// case with an issue in the category.
    pub cases_executed: usize,
    pub elapsed_ms: f64,
}

/// For each issue category, the earliest point in the execution at which
/// a case carrying such an issue had completed.
pub fn time_to_first_issue(run_set: &RunSet, report: &ValidationReport) -> BTreeMap<IssueCategory, FirstIssue> {
    let mut done: Vec<(u64, &str)> = run_set
        .by_case()
        .into_iter()
        .map(|(case, recs)| (recs.iter().map(|r| r.finished_us).max().unwrap_or(0), case))
        .collect();
    done.sort();
    let rank: BTreeMap<&str, (usize, u64)> = done.iter().enumerate().map(|(i, (t, c))| (*c, (i + 1, *t))).collect();
    let mut out: BTreeMap<IssueCategory, FirstIssue> = BTreeMap::new();
    for issue in &report.issues {
        let Some(&(n, t)) = rank.get(issue.case_id.as_str()) else {
            continue;
        };
        let candidate = FirstIssue {
            cases_executed: n,
            elapsed_ms: t as f64 / 1000.0,
        };
        out.entry(issue.category)
            .and_modify(|f| {
                if n < f.cases_executed {
                    *f = candidate;
                }
            })
            .or_insert(candidate);
    }
    out
}
