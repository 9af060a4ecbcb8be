//! Read-only static file server for pages.

use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;
use std::thread::JoinHandle;

use tiny_http::{Header, Response, Server, StatusCode};

use super::HarnessError;

pub struct PageServer {
    server: Arc<Server>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl PageServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}/{}", self.addr, path.trim_start_matches('/'))
    }

    /// Stop accepting requests and join the serving thread.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for PageServer {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Map a URL path onto `root`, refusing anything that escapes it.
fn resolve(root: &Path, url: &str) -> Option<PathBuf> {
    let path = url.split(['?', '#']).next().unwrap_or("");
    let mut out = root.to_path_buf();
    for c in Path::new(path.trim_start_matches('/')).components() {
        match c {
            Component::Normal(p) => out.push(p),
            Component::CurDir => {}
            _ => return None,
        }
    }
    Some(out)
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") | Some("htm") => "text/html; charset=utf-8",
        Some("json") => "application/json",
        Some("css") => "text/css",
        Some("js") => "text/javascript",
        _ => "application/octet-stream",
    }
}

/// Serve `dir` on 127.0.0.1:`port` (0 picks a free port).
pub fn serve_pages(dir: &Path, port: u16) -> Result<PageServer, HarnessError> {
    if !dir.is_dir() {
        return Err(HarnessError::Io {
            path: dir.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        });
    }
    let server = Server::http(("127.0.0.1", port)).map_err(|e| HarnessError::Bind(format!("127.0.0.1:{port}: {e}")))?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| HarnessError::Bind("not an IP listener".into()))?;
    let server = Arc::new(server);
    let root = dir.to_path_buf();
    let s = Arc::clone(&server);
    let worker = std::thread::spawn(move || {
        for req in s.incoming_requests() {
            let resp = if *req.method() != tiny_http::Method::Get && *req.method() != tiny_http::Method::Head {
                Response::from_string("method not allowed").with_status_code(StatusCode(405))
            } else {
                match resolve(&root, req.url()).filter(|p| p.is_file()).and_then(|p| Some((std::fs::read(&p).ok()?, p))) {
                    Some((bytes, p)) => {
                        let header = Header::from_bytes("Content-Type", content_type(&p)).expect("static header");
                        Response::from_data(bytes).with_header(header)
                    }
                    None => Response::from_string("not found").with_status_code(StatusCode(404)),
                }
            };
            let _ = req.respond(resp);
        }
    });
    Ok(PageServer {
        server,
        addr,
        worker: Some(worker),
    })
}
