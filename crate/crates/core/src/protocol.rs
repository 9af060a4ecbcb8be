//! Line-delimited JSON adapter protocol.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::TaskCategory;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: String,
    /// Wire task name: `summarize`, `translate` or `assist`.
    pub task: String,
    pub html: String,
}

impl Request {
    pub fn new(id: impl Into<String>, task: TaskCategory, html: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            task: task.wire_name().to_string(),
            html: html.into(),
        }
    }

    pub fn task_category(&self) -> Result<TaskCategory, String> {
        self.task.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: String,
    #[serde(default)]
    pub output: String,
    #[serde(default)]
    pub meta: Map<String, Value>,
    /// Set when the adapter could not handle the request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Response {
    pub fn ok(id: impl Into<String>, output: String, meta: Map<String, Value>) -> Self {
        Self {
            id: id.into(),
            output,
            meta,
            error: None,
        }
    }

    pub fn failure(id: impl Into<String>, error: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            output: String::new(),
            meta: Map::new(),
            error: Some(error.into()),
        }
    }
}

/// Best-effort id of a line that failed to parse as a request.
fn salvage_id(line: &str) -> String {
    serde_json::from_str::<Value>(line)
        .ok()
        .and_then(|v| v.get("id").and_then(Value::as_str).map(str::to_string))
        .unwrap_or_default()
}

/// Answer requests from `input` until EOF, one response line per non-empty
/// request line. Malformed lines get an error response and the loop goes on.
pub fn serve_lines<R, W, F>(input: R, mut output: W, mut handler: F) -> std::io::Result<usize>
where
    R: BufRead,
    W: Write,
    F: FnMut(&Request) -> Response,
{
    let mut served = 0;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<Request>(&line) {
            Ok(req) => match req.task_category() {
                Ok(_) => handler(&req),
                Err(e) => Response::failure(req.id.clone(), e),
            },
            Err(e) => Response::failure(salvage_id(&line), format!("malformed request: {e}")),
        };
        serde_json::to_writer(&mut output, &response)?;
        output.write_all(b"\n")?;
        output.flush()?;
        served += 1;
    }
    Ok(served)
}
