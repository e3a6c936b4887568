use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ServiceError;

/// Service settings, read from the JSON file given to `fedsearch serve --config`.
/// Relative paths are resolved against the directory holding that file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    pub index_dir: PathBuf,
    pub model: PathBuf,
    pub kwint: PathBuf,
    /// Members with precomputed intent scores (`members_scored.jsonl`).
    pub population: PathBuf,
    pub click_log: PathBuf,
    #[serde(default = "default_top_m")]
    pub block_score_top_m: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_threshold")]
    pub intent_threshold: f64,
    #[serde(default = "default_capacity")]
    pub impression_capacity: usize,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}
fn default_top_m() -> usize {
    3
}
fn default_k() -> usize {
    10
}
fn default_threshold() -> f64 {
    0.5
}
fn default_capacity() -> usize {
    10_000
}

impl ServiceConfig {
    /// Config with defaults for everything but the artifact paths.
    pub fn new(
        index_dir: impl Into<PathBuf>,
        model: impl Into<PathBuf>,
        kwint: impl Into<PathBuf>,
        population: impl Into<PathBuf>,
        click_log: impl Into<PathBuf>,
    ) -> Self {
        Self {
            listen: default_listen(),
            index_dir: index_dir.into(),
            model: model.into(),
            kwint: kwint.into(),
            population: population.into(),
            click_log: click_log.into(),
            block_score_top_m: default_top_m(),
            k: default_k(),
            intent_threshold: default_threshold(),
            impression_capacity: default_capacity(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = fs::read_to_string(path).map_err(|source| ServiceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: ServiceConfig = serde_json::from_str(&text).map_err(|e| {
            ServiceError::Config(format!("{}: {e}", path.display()))
        })?;
        if let Some(base) = path.parent() {
            config.resolve_against(base);
        }
        Ok(config)
    }

    fn resolve_against(&mut self, base: &Path) {
        for p in [
            &mut self.index_dir,
            &mut self.model,
            &mut self.kwint,
            &mut self.population,
            &mut self.click_log,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.k == 0 {
            return Err(ServiceError::Config("k must be at least 1".into()));
        }
        if self.block_score_top_m == 0 {
            return Err(ServiceError::Config(
                "block_score_top_m must be at least 1".into(),
            ));
        }
        if self.impression_capacity == 0 {
            return Err(ServiceError::Config(
                "impression_capacity must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.intent_threshold) {
            return Err(ServiceError::Config(format!(
                "intent_threshold {} is outside [0, 1]",
                self.intent_threshold
            )));
        }
        for (what, path) in [
            ("index_dir", &self.index_dir),
            ("model", &self.model),
            ("kwint", &self.kwint),
            ("population", &self.population),
        ] {
            if !path.exists() {
                return Err(ServiceError::MissingPath {
                    what,
                    path: path.clone(),
                });
            }
        }
        let log_dir = self
            .click_log
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        if !log_dir.is_dir() {
            return Err(ServiceError::MissingPath {
                what: "click_log directory",
                path: log_dir.to_path_buf(),
            });
        }
        Ok(())
    }
}
