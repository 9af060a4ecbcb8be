//! Command implementations behind the `mettlext` binary.

pub mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mettlext_core::harness::{
    run_suite, serve_pages, time_to_first_issue, FirstIssue, HarnessError, PhaseTimings, Progress,
};
use mettlext_core::metamorphic::plan_suite;
use mettlext_core::mocks::{request_seed, run_mock};
use mettlext_core::protocol::{serve_lines, Response};
use mettlext_core::report::{aggregate, emit, parse_report, timing_breakdown, Format, TimingBreakdown};
use mettlext_core::templates::{builtin_templates, generate_corpus, load_templates};
use mettlext_core::validators::run_pipeline;
use mettlext_core::{
    store, AdapterDescriptor, FaultProfile, IssueCategory, PayloadCatalog, RunSet, SimilarityMetric, TaskCategory,
    TestCase, ValidationReport,
};

pub use config::{Config, ConfigError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_HIGH_ISSUES: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNREACHABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mettlext", version, about = "Metamorphic testing for AI web-content processors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a corpus and a test suite.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Execute a suite against an adapter and write a run set.
    Run {
        #[arg(long)]
        suite: PathBuf,
        #[command(flatten)]
        exec: ExecFlags,
        /// Run set path; defaults to `<suite>/runs/<suite_id>.runset.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a run set and write report.json and report.md.
    Validate {
        #[arg(long)]
        runset: PathBuf,
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        metric: Option<SimilarityMetric>,
    },
    /// Generate, run and validate in one go.
    Test {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        exec: ExecFlags,
        #[arg(long)]
        metric: Option<SimilarityMetric>,
    },
    /// Serve a mock extension over the line protocol on stdin/stdout.
    Mock {
        #[arg(long)]
        task: TaskCategory,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Serve a directory of pages over HTTP on 127.0.0.1.
    Serve {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        port: u16,
    },
    /// Print the summary table over one or more report.json files.
    Aggregate {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ExecFlags {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `mock:TASK[:PROFILE.json]`, `exec:CMD` or `http://HOST:PORT`.
    #[arg(long)]
    pub adapter: String,
    /// Task of an exec or http adapter.
    #[arg(long)]
    pub task: Option<TaskCategory>,
    #[arg(long)]
    pub reps: Option<u32>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub timeout_ms: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ExecFlags {
    fn config(&self) -> Result<Config> {
        let mut c = Config::load(self.config.as_deref())?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(r) = self.reps {
            c.execution.repetitions = r;
        }
        if let Some(p) = self.parallelism {
            c.execution.parallelism = p;
        }
        if let Some(t) = self.timeout_ms {
            c.execution.timeout_ms = t;
        }
        c.validate("command line")?;
        Ok(c)
    }

    fn adapter(&self, seed: u64) -> Result<AdapterDescriptor> {
        let mut a = AdapterDescriptor::parse(&self.adapter, self.task)?;
        a.seed = seed;
        a.probe()?;
        Ok(a)
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> i32 {
    match e.downcast_ref::<HarnessError>() {
        Some(HarnessError::Unreachable(_)) => EXIT_UNREACHABLE,
        _ => EXIT_USAGE,
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Generate { config, out, seed } => {
            let mut c = Config::load(config.as_deref())?;
            if let Some(s) = seed {
                c.seed = s;
            }
            let (_, cases, _) = cmd_generate(&c, &out)?;
            print_counts(&cases);
            Ok(EXIT_OK)
        }
        Command::Run { suite, exec, out } => {
            let c = exec.config()?;
            let adapter = exec.adapter(c.seed)?;
            let (manifest, cases) = store::read_suite(&suite)?;
            let mut run_set = execute(&adapter, &manifest.suite_id, &cases, &c)?;
            run_set.phase_timings.generation_ms = store::read_generation_ms(&suite);
            let path = out.unwrap_or_else(|| store::runset_path(&suite.join("runs"), &manifest.suite_id));
            store::write_runset(&path, &run_set)?;
            print_throughput(&run_set, cases.len());
            eprintln!("run set written to {}", path.display());
            Ok(EXIT_OK)
        }
        Command::Validate {
            runset,
            suite,
            config,
            out,
            metric,
        } => {
            let c = Config::load(config.as_deref())?;
            let run_set = store::read_runset(&runset)?;
            let (manifest, cases) = store::read_suite(&suite)?;
            if manifest.suite_id != run_set.suite_id {
                bail!(
                    "run set {} belongs to suite {}, but {} holds suite {}",
                    runset.display(),
                    run_set.suite_id,
                    suite.display(),
                    manifest.suite_id
                );
            }
            let (report, _) = cmd_validate(&run_set, &cases, &c, metric.unwrap_or(c.metric), &out)?;
            Ok(gate(&report))
        }
        Command::Test {
            out,
            exec,
            metric,
        } => {
            let c = exec.config()?;
            let adapter = exec.adapter(c.seed)?;
            let report = cmd_test(&c, &adapter, metric.unwrap_or(c.metric), &out)?;
            Ok(gate(&report))
        }
        Command::Mock { task, profile, seed } => {
            let profile = match profile {
                Some(p) => FaultProfile::load(&p)?,
                None => FaultProfile::clean(),
            };
            cmd_mock(task, &profile, seed, std::io::stdin().lock(), std::io::stdout().lock())?;
            Ok(EXIT_OK)
        }
        Command::Serve { dir, port } => {
            let server = serve_pages(&dir, port)?;
            println!("serving {} at {}", dir.display(), server.url(""));
            loop {
                std::thread::park();
            }
        }
        Command::Aggregate { reports } => {
            let loaded = reports
                .iter()
                .map(|p| {
                    let bytes = std::fs::read(p).with_context(|| p.display().to_string())?;
                    parse_report(&bytes).with_context(|| p.display().to_string())
                })
                .collect::<Result<Vec<_>>>()?;
            print!("{}", aggregate(&loaded)?.to_markdown());
            Ok(EXIT_OK)
        }
    }
}

fn gate(report: &ValidationReport) -> i32 {
    if report.has_high() {
        EXIT_HIGH_ISSUES
    } else {
        EXIT_OK
    }
}

/// Build the corpus and suite described by `c` and write them under `out`.
pub fn cmd_generate(c: &Config, out: &Path) -> Result<(String, Vec<TestCase>, f64)> {
    let start = Instant::now();
    let templates = match &c.templates_dir {
        Some(dir) => load_templates(dir)?,
        None => builtin_templates(),
    };
    let corpus = generate_corpus(&templates, c.corpus_size, &c.lengths, c.seed)?;
    let catalog = PayloadCatalog::builtin();
    let cases = plan_suite(&templates, &corpus, &catalog, &c.mix, &c.suite, c.seed)?;
    let generation_ms = start.elapsed().as_secs_f64() * 1000.0;
    let suite_id = store::write_generated(out, &corpus, &cases, generation_ms)?;
    Ok((suite_id, cases, generation_ms))
}

fn print_counts(cases: &[TestCase]) {
    let mut by_kind: BTreeMap<&str, usize> = BTreeMap::new();
    let mut by_category: BTreeMap<String, usize> = BTreeMap::new();
    for case in cases {
        *by_kind.entry(case.relation.name()).or_default() += 1;
        let cat = serde_json::to_value(case.category()).ok().and_then(|v| v.as_str().map(str::to_string));
        *by_category.entry(cat.unwrap_or_default()).or_default() += 1;
    }
    println!("generated {} cases", cases.len());
    for (cat, n) in &by_category {
        println!("  {cat}: {n}");
    }
    for (kind, n) in &by_kind {
        println!("    {kind}: {n}");
    }
}

/// Run the suite with progress lines on stderr.
fn execute(adapter: &AdapterDescriptor, suite_id: &str, cases: &[TestCase], c: &Config) -> Result<RunSet> {
    let (tx, rx) = mpsc::channel();
    let printer = std::thread::spawn(move || {
        for Progress::CaseCompleted {
            case_id,
            completed,
            total,
            running,
        } in rx
        {
            eprintln!("[{completed}/{total}] {case_id} done ({running} running)");
        }
    });
    let result = run_suite(adapter, suite_id, cases, &c.execution, Some(tx));
    let _ = printer.join();
    Ok(result?)
}

fn cases_per_minute(cases: usize, ms: f64) -> f64 {
    if ms > 0.0 {
        cases as f64 * 60_000.0 / ms
    } else {
        0.0
    }
}

fn print_throughput(run_set: &RunSet, cases: usize) {
    let ms = run_set.phase_timings.execution_ms;
    println!(
        "executed {cases} cases ({} runs) in {:.1} s: {:.1} cases/min",
        run_set.records.len(),
        ms / 1000.0,
        cases_per_minute(cases, ms)
    );
}

#[derive(Debug, Serialize)]
struct TimingsFile {
    phase_timings: PhaseTimings,
    breakdown: Option<TimingBreakdown>,
    cases: usize,
    runs: usize,
    throughput_cases_per_min: f64,
    time_to_first_issue: BTreeMap<IssueCategory, FirstIssue>,
}

/// Validate and write `report.json`, `report.md` and `timings.json` into `out`.
pub fn cmd_validate(
    run_set: &RunSet,
    cases: &[TestCase],
    c: &Config,
    metric: SimilarityMetric,
    out: &Path,
) -> Result<(ValidationReport, TimingsSummary)> {
    let start = Instant::now();
    let catalog = PayloadCatalog::builtin();
    let report = run_pipeline(run_set, cases, &catalog, &c.thresholds, metric)?;
    let mut timings = run_set.phase_timings;
    timings.validation_ms = start.elapsed().as_secs_f64() * 1000.0;
    let first = time_to_first_issue(run_set, &report);
    let summary = TimingsSummary {
        timings,
        first_issue: first.clone(),
    };
    let file = TimingsFile {
        phase_timings: timings,
        breakdown: timing_breakdown(&[timings]).ok(),
        cases: cases.len(),
        runs: run_set.records.len(),
        throughput_cases_per_min: cases_per_minute(cases.len(), timings.execution_ms),
        time_to_first_issue: first,
    };
    std::fs::create_dir_all(out).with_context(|| out.display().to_string())?;
    store::write_atomic(&out.join("report.json"), &emit(&report, Format::Json))?;
    store::write_atomic(&out.join("report.md"), &emit(&report, Format::Markdown))?;
    store::write_atomic(&out.join("timings.json"), &store::to_json_bytes(&file))?;
    let high = report.issues.iter().filter(|i| i.severity == mettlext_core::Severity::High).count();
    println!(
        "{} issues ({high} high) written to {}",
        report.issues.len(),
        out.join("report.json").display()
    );
    for cat in IssueCategory::ALL {
        println!("  {cat}: {}", report.count(cat));
    }
    Ok((report, summary))
}

#[derive(Debug, Clone)]
pub struct TimingsSummary {
    pub timings: PhaseTimings,
    pub first_issue: BTreeMap<IssueCategory, FirstIssue>,
}

/// Generate, execute and validate; everything lands under `out`.
pub fn cmd_test(c: &Config, adapter: &AdapterDescriptor, metric: SimilarityMetric, out: &Path) -> Result<ValidationReport> {
    let (suite_id, cases, generation_ms) = cmd_generate(c, out)?;
    print_counts(&cases);
    let mut run_set = execute(adapter, &suite_id, &cases, c)?;
    run_set.phase_timings.generation_ms = generation_ms;
    store::write_runset(&store::runset_path(&out.join("runs"), &suite_id), &run_set)?;
    print_throughput(&run_set, cases.len());
    let (report, summary) = cmd_validate(&run_set, &cases, c, metric, out)?;
    println!("time to first issue:");
    if summary.first_issue.is_empty() {
        println!("  none");
    }
    for (cat, f) in &summary.first_issue {
        println!("  {cat}: after {} cases, {:.1} ms", f.cases_executed, f.elapsed_ms);
    }
    if let Ok(b) = timing_breakdown(&[summary.timings]) {
        println!(
            "phases: generation {:.1}%, execution {:.1}%, validation {:.1}%",
            b.generation_pct, b.execution_pct, b.validation_pct
        );
    }
    Ok(report)
}

/// Answer line-protocol requests with the mock extension until EOF.
pub fn cmd_mock<R: std::io::Read, W: Write>(
    task: TaskCategory,
    profile: &FaultProfile,
    seed: u64,
    input: R,
    output: W,
) -> Result<usize> {
    profile.validate()?;
    let served = serve_lines(BufReader::new(input), output, |req| match req.task_category() {
        Ok(t) if t == task => {
            let out = run_mock(task, &req.html, profile, request_seed(seed, &req.id));
            Response::ok(req.id.clone(), out.text, out.meta)
        }
        Ok(t) => Response::failure(req.id.clone(), format!("this mock serves `{}`, not `{}`", task.wire_name(), t.wire_name())),
        Err(e) => Response::failure(req.id.clone(), e),
    })?;
    Ok(served)
}
