//! Adapter implementations: subprocess, HTTP and in-process mock.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::mocks::{request_seed, run_mock, FaultProfile};
use crate::protocol::{Request, Response};
use crate::TaskCategory;

/// Env var overriding the root directory of per-run workspaces.
pub const WORKDIR_ENV: &str = "METTLEXT_WORKDIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterKind {
    Subprocess,
    Http,
    InProcessMock,
}

/// Which validators apply to an adapter's outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub alignment: bool,
    pub security: bool,
}

impl Capabilities {
    /// Alignment and security checks are meaningless for translators.
    pub fn for_task(task: TaskCategory) -> Self {
        let applicable = task != TaskCategory::Translation;
        Self {
            alignment: applicable,
            security: applicable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterDescriptor {
    pub kind: AdapterKind,
    /// Command line, URL or mock task name.
    pub endpoint: String,
    pub task_category: TaskCategory,
    pub capabilities: Capabilities,
    /// Fault profile of an in-process mock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<FaultProfile>,
    /// Base seed mixed into mock request seeds.
    #[serde(default)]
    pub seed: u64,
}

impl AdapterDescriptor {
    pub fn mock(task: TaskCategory, profile: FaultProfile) -> Self {
        Self {
            kind: AdapterKind::InProcessMock,
            endpoint: task.wire_name().to_string(),
            task_category: task,
            capabilities: Capabilities::for_task(task),
            profile: Some(profile),
            seed: 0,
        }
    }

    pub fn subprocess(command: &str, task: TaskCategory) -> Self {
        Self {
            kind: AdapterKind::Subprocess,
            endpoint: command.to_string(),
            task_category: task,
            capabilities: Capabilities::for_task(task),
            profile: None,
            seed: 0,
        }
    }

    pub fn http(url: &str, task: TaskCategory) -> Self {
        Self {
            kind: AdapterKind::Http,
            endpoint: url.to_string(),
            task_category: task,
            capabilities: Capabilities::for_task(task),
            profile: None,
            seed: 0,
        }
    }

    /// Parse `mock:TASK[:PROFILE.json]`, `exec:CMD` or `http:URL`. `task` is
    /// required for the latter two.
    pub fn parse(spec: &str, task: Option<TaskCategory>) -> Result<Self, HarnessError> {
        let bad = |why: &str| HarnessError::BadSpec {
            spec: spec.to_string(),
            reason: why.to_string(),
        };
        let (scheme, rest) = spec.split_once(':').ok_or_else(|| bad("expected mock:, exec: or http:"))?;
        match scheme {
            "mock" => {
                let (task_name, profile_path) = match rest.split_once(':') {
                    Some((t, p)) => (t, Some(p)),
                    None => (rest, None),
                };
                let mock_task: TaskCategory = task_name.parse().map_err(|e: String| bad(&e))?;
                let profile = match profile_path {
                    Some(p) if !p.is_empty() => FaultProfile::load(Path::new(p))?,
                    _ => FaultProfile::clean(),
                };
                Ok(Self::mock(mock_task, profile))
            }
            "exec" => {
                if shlex::split(rest).is_none_or(|argv| argv.is_empty()) {
                    return Err(bad("empty or unbalanced command"));
                }
                Ok(Self::subprocess(rest, task.ok_or_else(|| bad("exec adapters need a task"))?))
            }
            "http" | "https" => Ok(Self::http(spec, task.ok_or_else(|| bad("http adapters need a task"))?)),
            _ => Err(bad("expected mock:, exec: or http:")),
        }
    }

    /// Check that the adapter can be reached before running a suite.
    pub fn probe(&self) -> Result<(), HarnessError> {
        match self.kind {
            AdapterKind::InProcessMock => Ok(()),
            AdapterKind::Subprocess => {
                let argv = shlex::split(&self.endpoint).unwrap_or_default();
                let program = argv.first().ok_or_else(|| HarnessError::Unreachable("empty command".into()))?;
                resolve_program(program)
                    .map(|_| ())
                    .ok_or_else(|| HarnessError::Unreachable(format!("`{program}` not found")))
            }
            AdapterKind::Http => {
                let uri: ureq::http::Uri = self
                    .endpoint
                    .parse()
                    .map_err(|e| HarnessError::Unreachable(format!("{}: {e}", self.endpoint)))?;
                let host = uri.host().ok_or_else(|| HarnessError::Unreachable(format!("{}: no host", self.endpoint)))?;
                let port = uri.port_u16().unwrap_or(if uri.scheme_str() == Some("https") { 443 } else { 80 });
                let addrs = (host, port)
                    .to_socket_addrs()
                    .map_err(|e| HarnessError::Unreachable(format!("{host}:{port}: {e}")))?;
                for a in addrs {
                    if TcpStream::connect_timeout(&a, Duration::from_secs(2)).is_ok() {
                        return Ok(());
                    }
                }
                Err(HarnessError::Unreachable(format!("{host}:{port}: connection refused")))
            }
        }
    }

    /// A fresh adapter instance; one per worker.
    pub fn connect(&self) -> Result<Box<dyn Adapter>, HarnessError> {
        Ok(match self.kind {
            AdapterKind::InProcessMock => Box::new(MockAdapter {
                task: self.task_category,
                profile: self.profile.clone().unwrap_or_default(),
                seed: self.seed,
            }),
            AdapterKind::Subprocess => Box::new(SubprocessAdapter::new(&self.endpoint)?),
            AdapterKind::Http => Box::new(HttpAdapter::new(&self.endpoint)),
        })
    }
}

fn resolve_program(program: &str) -> Option<PathBuf> {
    let p = Path::new(program);
    if p.components().count() > 1 {
        return p.is_file().then(|| p.to_path_buf());
    }
    std::env::split_paths(&std::env::var_os("PATH")?)
        .map(|dir| dir.join(program))
        .find(|c| c.is_file())
}

/// Why a single call produced no output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallFailure {
    Timeout,
    Error(String),
}

/// One in-flight request at a time; not shared between threads.
pub trait Adapter: Send {
    fn call(&mut self, request: &Request, timeout: Duration) -> Result<Response, CallFailure>;
}

pub struct MockAdapter {
    task: TaskCategory,
    profile: FaultProfile,
    seed: u64,
}

impl Adapter for MockAdapter {
    fn call(&mut self, request: &Request, timeout: Duration) -> Result<Response, CallFailure> {
        let start = Instant::now();
        let out = run_mock(self.task, &request.html, &self.profile, request_seed(self.seed, &request.id));
        if start.elapsed() > timeout {
            return Err(CallFailure::Timeout);
        }
        Ok(Response::ok(request.id.clone(), out.text, out.meta))
    }
}

/// Spawns the command once per call inside a fresh workspace with a minimal
/// environment.
pub struct SubprocessAdapter {
    program: PathBuf,
    args: Vec<String>,
    workdir_root: Option<PathBuf>,
}

impl SubprocessAdapter {
    pub fn new(command: &str) -> Result<Self, HarnessError> {
        let argv = shlex::split(command).filter(|a| !a.is_empty()).ok_or_else(|| HarnessError::BadSpec {
            spec: command.to_string(),
            reason: "empty or unbalanced command".into(),
        })?;
        let program =
            resolve_program(&argv[0]).ok_or_else(|| HarnessError::Unreachable(format!("`{}` not found", argv[0])))?;
        Ok(Self {
            program,
            args: argv[1..].to_vec(),
            workdir_root: std::env::var_os(WORKDIR_ENV).map(PathBuf::from),
        })
    }

    fn workspace(&self) -> std::io::Result<tempfile::TempDir> {
        let root = self.workdir_root.clone().unwrap_or_else(std::env::temp_dir);
        tempfile::Builder::new().prefix("mettlext-run-").tempdir_in(root)
    }

    fn spawn(&self, dir: &Path) -> std::io::Result<Child> {
        let mut cmd = Command::new(&self.program);
        cmd.args(&self.args)
            .current_dir(dir)
            .env_clear()
            .env("HOME", dir)
            .env("TMPDIR", dir)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null());
        if let Some(path) = std::env::var_os("PATH") {
            cmd.env("PATH", path);
        }
        cmd.spawn()
    }
}

impl Adapter for SubprocessAdapter {
    fn call(&mut self, request: &Request, timeout: Duration) -> Result<Response, CallFailure> {
        let dir = self.workspace().map_err(|e| CallFailure::Error(format!("workspace: {e}")))?;
        let mut child = self.spawn(dir.path()).map_err(|e| CallFailure::Error(format!("spawn: {e}")))?;
        let mut line = serde_json::to_string(request).map_err(|e| CallFailure::Error(e.to_string()))?;
        line.push('\n');
        let mut stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            // a child that exits early closes the pipe; the read reports it
            let _ = stdin.write_all(line.as_bytes());
            drop(stdin);
            let mut reply = String::new();
            let r = BufReader::new(stdout).read_line(&mut reply).map(|_| reply);
            let _ = tx.send(r);
        });
        let result = match rx.recv_timeout(timeout) {
            Ok(Ok(reply)) if reply.trim().is_empty() => Err(CallFailure::Error("adapter closed stdout without a response".into())),
            Ok(Ok(reply)) => parse_reply(&reply, &request.id),
            Ok(Err(e)) => Err(CallFailure::Error(format!("read: {e}"))),
            Err(_) => Err(CallFailure::Timeout),
        };
        let _ = child.kill();
        let _ = child.wait();
        result
    }
}

fn parse_reply(body: &str, id: &str) -> Result<Response, CallFailure> {
    let resp: Response =
        serde_json::from_str(body.trim()).map_err(|e| CallFailure::Error(format!("malformed response: {e}")))?;
    if resp.id != id {
        return Err(CallFailure::Error(format!("response id `{}` does not match `{id}`", resp.id)));
    }
    if let Some(err) = &resp.error {
        return Err(CallFailure::Error(format!("adapter error: {err}")));
    }
    Ok(resp)
}

pub struct HttpAdapter {
    url: String,
}

impl HttpAdapter {
    pub fn new(endpoint: &str) -> Self {
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/process") {
            base.to_string()
        } else {
            format!("{base}/process")
        };
        Self { url }
    }
}

impl Adapter for HttpAdapter {
    fn call(&mut self, request: &Request, timeout: Duration) -> Result<Response, CallFailure> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        match agent.post(&self.url).send_json(request) {
            Ok(mut resp) => {
                let body = resp
                    .body_mut()
                    .read_to_string()
                    .map_err(|e| CallFailure::Error(format!("read body: {e}")))?;
                parse_reply(&body, &request.id)
            }
            Err(ureq::Error::Timeout(_)) => Err(CallFailure::Timeout),
            Err(ureq::Error::StatusCode(code)) => Err(CallFailure::Error(format!("HTTP status {code}"))),
            Err(e) => Err(CallFailure::Error(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_specs() {
        let m = AdapterDescriptor::parse("mock:summarize", None).unwrap();
        assert_eq!(m.kind, AdapterKind::InProcessMock);
        assert_eq!(m.task_category, TaskCategory::Summarization);
        assert!(m.capabilities.security);
        let t = AdapterDescriptor::parse("mock:translate", None).unwrap();
        assert!(!t.capabilities.alignment && !t.capabilities.security);
        let e = AdapterDescriptor::parse("exec:python3 adapter.py --fast", Some(TaskCategory::WritingAssistance)).unwrap();
        assert_eq!(e.endpoint, "python3 adapter.py --fast");
        let h = AdapterDescriptor::parse("http://127.0.0.1:9/x", Some(TaskCategory::Translation)).unwrap();
        assert_eq!(h.kind, AdapterKind::Http);
        assert!(AdapterDescriptor::parse("exec:foo", None).is_err());
        assert!(AdapterDescriptor::parse("ftp:x", None).is_err());
        assert!(AdapterDescriptor::parse("mock:dance", None).is_err());
        assert!(AdapterDescriptor::parse("exec:", Some(TaskCategory::Translation)).is_err());
    }

    #[test]
    fn missing_binary_is_unreachable() {
        let d = AdapterDescriptor::subprocess("/nonexistent/adapter-bin", TaskCategory::Summarization);
        assert!(matches!(d.probe(), Err(HarnessError::Unreachable(_))));
        let d = AdapterDescriptor::subprocess("definitely-not-a-real-program-xyz", TaskCategory::Summarization);
        assert!(matches!(d.probe(), Err(HarnessError::Unreachable(_))));
    }

    #[test]
    fn http_url_gets_process_path() {
        assert_eq!(HttpAdapter::new("http://h:1").url, "http://h:1/process");
        assert_eq!(HttpAdapter::new("http://h:1/process").url, "http://h:1/process");
    }
}
