//! On-disk layout of corpora, suites, run sets and reports.
//!
//! ```text
//! <out>/pages/<page_id>.html
//! <out>/pages/<page_id>.meta.json
//! <out>/suite/manifest.json
//! <out>/suite/generation.json
//! <out>/suite/<case_id>/case.json
//! <out>/suite/<case_id>/<variant_id>.html
//! <out>/runs/<suite_id>.runset.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::harness::{PhaseTimings, RunSet};
use crate::metamorphic::TestCase;
use crate::templates::SeedPage;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: {reason}")]
    Layout { path: String, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Content digest of a suite, used as its id.
pub fn suite_digest(cases: &[TestCase]) -> String {
    let bytes = serde_json::to_vec(cases).expect("test cases serialize");
    let hash = Sha256::digest(&bytes);
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub suite_id: String,
    pub case_ids: Vec<String>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("value serializes");
    out.push(b'\n');
    out
}

/// Write via a sibling temp file and rename, so readers never see a torn file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    std::io::Write::write_all(&mut tmp, bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| StoreError::Io {
        path: path.display().to_string(),
        source: e.error,
    })?;
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| StoreError::Json {
        path: path.display().to_string(),
        source,
    })
}

fn layout(path: &Path, reason: impl Into<String>) -> StoreError {
    StoreError::Layout {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Ids become file names; refuse anything that could leave the directory.
fn safe_name(dir: &Path, id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(layout(dir, format!("id `{id}` is not a safe file name")))
    }
}

fn write_corpus_into(dir: &Path, corpus: &[SeedPage]) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for page in corpus {
        safe_name(dir, &page.page_id)?;
        write_file(&dir.join(format!("{}.html", page.page_id)), page.html.as_bytes())?;
        let mut meta = serde_json::to_value(page).expect("page serializes");
        meta.as_object_mut().expect("page is an object").remove("html");
        write_file(&dir.join(format!("{}.meta.json", page.page_id)), &to_json_bytes(&meta))?;
    }
    Ok(())
}

fn write_suite_into(dir: &Path, cases: &[TestCase]) -> Result<(), StoreError> {
    for case in cases {
        safe_name(dir, &case.case_id)?;
        let case_dir = dir.join(&case.case_id);
        let mut stripped = case.clone();
        for page in std::iter::once(&mut stripped.base).chain(stripped.variants.iter_mut()) {
            safe_name(&case_dir, &page.variant_id)?;
            write_file(&case_dir.join(format!("{}.html", page.variant_id)), page.html.as_bytes())?;
            page.html.clear();
        }
        write_file(&case_dir.join("case.json"), &to_json_bytes(&stripped))?;
    }
    let manifest = SuiteManifest {
        suite_id: suite_digest(cases),
        case_ids: cases.iter().map(|c| c.case_id.clone()).collect(),
    };
    write_file(&dir.join("manifest.json"), &to_json_bytes(&manifest))
}

/// Write `pages/` and `suite/` under `out`. Everything is staged in a
/// sibling directory first; a failure leaves `out` untouched.
pub fn write_generated(
    out: &Path,
    corpus: &[SeedPage],
    cases: &[TestCase],
    generation_ms: f64,
) -> Result<String, StoreError> {
    let parent = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(io_err(parent))?;
    let staging = tempfile::Builder::new()
        .prefix(".mettlext-staging-")
        .tempdir_in(parent)
        .map_err(io_err(parent))?;
    write_corpus_into(&staging.path().join("pages"), corpus)?;
    write_suite_into(&staging.path().join("suite"), cases)?;
    let timing = PhaseTimings {
        generation_ms,
        ..PhaseTimings::default()
    };
    write_file(&staging.path().join("suite").join(GENERATION_FILE), &to_json_bytes(&timing))?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    for name in ["pages", "suite"] {
        let target = out.join(name);
        if target.exists() {
            fs::remove_dir_all(&target).map_err(io_err(&target))?;
        }
        let from = staging.path().join(name);
        fs::rename(&from, &target).map_err(io_err(&target))?;
    }
    Ok(suite_digest(cases))
}

pub fn read_corpus(pages_dir: &Path) -> Result<Vec<SeedPage>, StoreError> {
    let mut metas: Vec<PathBuf> = fs::read_dir(pages_dir)
        .map_err(io_err(pages_dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".meta.json"))
        .collect();
    metas.sort();
    metas
        .into_iter()
        .map(|meta_path| {
            let mut meta: serde_json::Value = read_json(&meta_path)?;
            let page_id = meta
                .get("page_id")
                .and_then(|v| v.as_str())
                .ok_or_else(|| layout(&meta_path, "missing page_id"))?
                .to_string();
            let html_path = pages_dir.join(format!("{page_id}.html"));
            let html = fs::read_to_string(&html_path).map_err(io_err(&html_path))?;
            meta.as_object_mut()
                .ok_or_else(|| layout(&meta_path, "not an object"))?
                .insert("html".into(), html.into());
            serde_json::from_value(meta).map_err(|source| StoreError::Json {
                path: meta_path.display().to_string(),
                source,
            })
        })
        .collect()
}

/// Generation time lives apart from the manifest so the manifest stays
/// byte-deterministic.
const GENERATION_FILE: &str = "generation.json";

/// The `suite/` directory for either it or its parent.
pub fn suite_root(suite_dir: &Path) -> PathBuf {
    if suite_dir.join("manifest.json").is_file() {
        suite_dir.to_path_buf()
    } else {
        suite_dir.join("suite")
    }
}

/// Recorded generation time; zero when absent.
pub fn read_generation_ms(suite_dir: &Path) -> f64 {
    read_json::<PhaseTimings>(&suite_root(suite_dir).join(GENERATION_FILE))
        .map(|t| t.generation_ms)
        .unwrap_or(0.0)
}

/// Load a suite written by [`write_generated`]. `suite_dir` is either the
/// `suite/` directory or its parent.
pub fn read_suite(suite_dir: &Path) -> Result<(SuiteManifest, Vec<TestCase>), StoreError> {
    let dir = suite_root(suite_dir);
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.is_file() {
        return Err(layout(suite_dir, "no suite manifest found"));
    }
    let manifest: SuiteManifest = read_json(&manifest_path)?;
    let mut cases = Vec::with_capacity(manifest.case_ids.len());
    for id in &manifest.case_ids {
        safe_name(&dir, id)?;
        let case_dir = dir.join(id);
        let mut case: TestCase = read_json(&case_dir.join("case.json"))?;
        for page in std::iter::once(&mut case.base).chain(case.variants.iter_mut()) {
            safe_name(&case_dir, &page.variant_id)?;
            let p = case_dir.join(format!("{}.html", page.variant_id));
            page.html = fs::read_to_string(&p).map_err(io_err(&p))?;
        }
        cases.push(case);
    }
    let digest = suite_digest(&cases);
    if digest != manifest.suite_id {
        return Err(layout(
            &manifest_path,
            format!("suite content digest {digest} does not match manifest {}", manifest.suite_id),
        ));
    }
    Ok((manifest, cases))
}

pub fn runset_path(runs_dir: &Path, suite_id: &str) -> PathBuf {
    runs_dir.join(format!("{suite_id}.runset.json"))
}

pub fn write_runset(path: &Path, run_set: &RunSet) -> Result<(), StoreError> {
    write_atomic(path, &to_json_bytes(run_set))
}

pub fn read_runset(path: &Path) -> Result<RunSet, StoreError> {
    read_json(path)
}
