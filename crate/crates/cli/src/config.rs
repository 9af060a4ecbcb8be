//! The JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use mettlext_core::harness::ExecutionConfig;
use mettlext_core::metamorphic::{SuiteMix, SuiteOptions};
use mettlext_core::{SimilarityMetric, Thresholds};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Seeds corpus generation, suite planning and mock adapters.
    pub seed: u64,
    pub corpus_size: usize,
    /// Target visible lengths cycled over the corpus.
    pub lengths: Vec<usize>,
    pub mix: SuiteMix,
    pub suite: SuiteOptions,
    /// Template directory; the built-in library when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub templates_dir: Option<PathBuf>,
    pub metric: SimilarityMetric,
    pub thresholds: Thresholds,
    pub execution: ExecutionConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 42,
            corpus_size: 20,
            lengths: vec![1000, 2000, 3000],
            mix: SuiteMix {
                semantic_equivalence: 40,
                security_boundary: 10,
            },
            suite: SuiteOptions::default(),
            templates_dir: None,
            metric: SimilarityMetric::TokenJaccard,
            thresholds: Thresholds::default(),
            execution: ExecutionConfig::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str, path: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Config = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Field {
            path: path.to_string(),
            message: format!("at `{}`: {}", e.path(), e.inner()),
        })?;
        config.validate(path)?;
        Ok(config)
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.display().to_string(),
                    source,
                })?;
                Self::from_json(&text, &p.display().to_string())
            }
        }
    }

    pub fn validate(&self, path: &str) -> Result<(), ConfigError> {
        let invalid = |message: String| ConfigError::Invalid {
            path: path.to_string(),
            message,
        };
        if self.corpus_size == 0 {
            return Err(invalid("corpus_size must be at least 1".into()));
        }
        if self.lengths.is_empty() {
            return Err(invalid("lengths must not be empty".into()));
        }
        if self.mix.total() == 0 {
            return Err(invalid("mix must request at least one case".into()));
        }
        self.thresholds
            .validate()
            .map_err(|e| invalid(format!("thresholds: {e}")))?;
        self.execution
            .validate()
            .map_err(|e| invalid(format!("execution: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(Config::from_json("{}", "c.json").unwrap(), Config::default());
    }

    #[test]
    fn field_errors_name_the_path() {
        let err = Config::from_json(r#"{"thresholds": {"tau_mr": "high"}}"#, "c.json").unwrap_err();
        assert!(err.to_string().contains("thresholds.tau_mr"), "{err}");
        let err = Config::from_json(r#"{"bogus": 1}"#, "c.json").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn out_of_range_threshold_is_rejected() {
        let err = Config::from_json(r#"{"thresholds": {"tau_mr": 1.5}}"#, "c.json").unwrap_err();
        assert!(err.to_string().contains("tau_mr"), "{err}");
    }

    #[test]
    fn metric_by_name() {
        let c = Config::from_json(r#"{"metric": "char_ngram_containment:3"}"#, "c.json").unwrap();
        assert_eq!(c.metric, SimilarityMetric::CharNgramContainment(3));
    }
}
