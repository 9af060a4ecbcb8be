use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_mettlext");

fn mettlext(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(path: &Path, text: &str) -> PathBuf {
    std::fs::write(path, text).unwrap();
    path.to_path_buf()
}

/// A small suite so each test stays quick.
fn small_config(dir: &Path) -> PathBuf {
    write(
        &dir.join("config.json"),
        r#"{"seed": 3, "corpus_size": 4, "lengths": [800, 1200],
            "mix": {"semantic_equivalence": 6, "security_boundary": 4},
            "execution": {"repetitions": 2, "timeout_ms": 20000, "parallelism": 2}}"#,
    )
}

fn profile(dir: &Path, name: &str, json: &str) -> PathBuf {
    write(&dir.join(name), json)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_prints_requested_mix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir.path().join("c.json"),
        r#"{"mix": {"semantic_equivalence": 80, "security_boundary": 20}}"#,
    );
    let out = dir.path().join("gen");
    let o = mettlext(&["generate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("generated 100 cases"), "{text}");
    assert!(text.contains("semantic_equivalence: 80"), "{text}");
    assert!(text.contains("security_boundary: 20"), "{text}");
    assert!(out.join("suite").join("manifest.json").is_file() || out.join("suite").is_dir());
}

#[test]
fn corrupt_config_is_a_usage_error_with_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir.path().join("c.json"), r#"{"thresholds": {"tau_mr": "high"}}"#);
    let out = dir.path().join("gen");
    let o = mettlext(&["generate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("thresholds.tau_mr"));
    assert!(!out.exists());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(mettlext(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn run_then_validate_with_repetitions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let gen = dir.path().join("gen");
    assert_eq!(mettlext(&["generate", "--config", s(&cfg), "--out", s(&gen)]).status.code(), Some(0));
    let runset = dir.path().join("rs.json");
    let o = mettlext(&[
        "run", "--suite", s(&gen), "--config", s(&cfg), "--adapter", "mock:translate", "--reps", "5", "--out", s(&runset),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("cases/min"));
    let rs: serde_json::Value = serde_json::from_slice(&std::fs::read(&runset).unwrap()).unwrap();
    let suite = mettlext_core::store::read_suite(&gen).unwrap().1;
    let pages: usize = suite.iter().map(|c| c.page_count()).sum();
    assert_eq!(rs["records"].as_array().unwrap().len(), pages * 5);

    let report = dir.path().join("report");
    let o = mettlext(&["validate", "--runset", s(&runset), "--suite", s(&gen), "--out", s(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for f in ["report.json", "report.md", "timings.json"] {
        assert!(report.join(f).is_file(), "{f}");
    }
    let o = mettlext(&["aggregate", s(&report.join("report.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("| Security | n/a |"), "{}", stdout(&o));
}

#[test]
fn validate_refuses_a_foreign_run_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(mettlext(&["generate", "--config", s(&cfg), "--out", s(&a)]).status.code(), Some(0));
    assert_eq!(mettlext(&["generate", "--config", s(&cfg), "--out", s(&b), "--seed", "99"]).status.code(), Some(0));
    let runset = dir.path().join("rs.json");
    let run = mettlext(&["run", "--suite", s(&a), "--config", s(&cfg), "--adapter", "mock:summarize", "--out", s(&runset)]);
    assert_eq!(run.status.code(), Some(0));
    let out = dir.path().join("report");
    let o = mettlext(&["validate", "--runset", s(&runset), "--suite", s(&b), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("report.json").exists());
}

#[test]
fn missing_extension_binary_is_unreachable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let o = mettlext(&[
        "test",
        "--out",
        s(&dir.path().join("o")),
        "--config",
        s(&cfg),
        "--adapter",
        "exec:/nonexistent/extension-binary",
        "--task",
        "summarize",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_code_follows_high_severity_issues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let clean = profile(dir.path(), "clean.json", r#"{"latency_ms_per_kchar": 0.0}"#);
    let hoax = profile(dir.path(), "hoax.json", r#"{"follow_injections": true, "latency_ms_per_kchar": 0.0}"#);

    let clean_cmd = format!("{BIN} mock --task summarize --profile {}", s(&clean));
    let o = mettlext(&[
        "test", "--out", s(&dir.path().join("clean")), "--config", s(&cfg),
        "--adapter", &format!("exec:{clean_cmd}"), "--task", "summarize",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));

    let hoax_cmd = format!("{BIN} mock --task summarize --profile {}", s(&hoax));
    let out = dir.path().join("hoax");
    let o = mettlext(&[
        "test", "--out", s(&out), "--config", s(&cfg),
        "--adapter", &format!("exec:{hoax_cmd}"), "--task", "summarize",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    let md = std::fs::read_to_string(out.join("report.md")).unwrap();
    assert!(md.contains("[High]"));
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    // simulated latency keeps the performance medians well above scheduler noise
    let p = profile(dir.path(), "p.json", r#"{"nondeterminism": 0.3}"#);
    let adapter = format!("mock:summarize:{}", s(&p));
    let mut reports = Vec::new();
    for name in ["one", "two"] {
        let out = dir.path().join(name);
        let o = mettlext(&["test", "--out", s(&out), "--config", s(&cfg), "--adapter", &adapter, "--seed", "7", "--reps", "3"]);
        assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
        reports.push(std::fs::read_to_string(out.join("report.json")).unwrap());
    }
    let first_diff = reports[0].lines().zip(reports[1].lines()).find(|(a, b)| a != b);
    assert_eq!(first_diff, None);
    assert_eq!(reports[0], reports[1]);
    assert!(!reports[0].is_empty());
}

fn mock_session(input: &str) -> (Option<i32>, String) {
    let mut child = Command::new(BIN)
        .args(["mock", "--task", "summarize"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    (out.status.code(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn mock_exits_quietly_on_eof() {
    assert_eq!(mock_session(""), (Some(0), String::new()));
}

#[test]
fn mock_survives_malformed_lines() {
    let input = concat!(
        "{not json\n",
        r#"{"id": "a", "task": "summarize", "html": "<p>Plain words here.</p>"}"#,
        "\n",
        r#"{"id": "b", "task": "translate", "html": "<p>x</p>"}"#,
        "\n",
    );
    let (code, out) = mock_session(input);
    assert_eq!(code, Some(0));
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0]["error"].as_str().unwrap().contains("malformed"));
    assert_eq!(lines[1]["id"], "a");
    assert!(lines[1].get("error").is_none());
    assert!(lines[1]["output"].as_str().unwrap().contains("Plain words"));
    assert_eq!(lines[2]["id"], "b");
    assert!(lines[2]["error"].is_string());
}
