//! HTTP front end for a trained fedsearch model.
//!
//! [`AppState::load`] reads the artifacts named in a [`ServiceConfig`] and
//! [`router`] exposes them:
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/search?q=<query>&member=<id>` | blended SERP, impression logged |
//! | POST | `/click` | `{serp_id, position, click_kind}` |
//! | GET | `/members/<id>/intents` | intent scores and active intents |
//! | GET | `/healthz` | liveness |
//!
//! Every response body is JSON carrying `schema_version: 1`.

pub mod api;
pub mod config;
pub mod store;

use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, PoisonError, RwLock};

use fedsearch::domain::active_set;
use fedsearch::features::{FeatureVocabulary, KeywordIntentTable};
use fedsearch::pipeline::{self, PipelineError};
use fedsearch::scorer::{BlockLayout, ScorerError};
use fedsearch::{
    FederatedEngine, FederatedScorer, FederationConfig, IntentTaxonomy, Member, ScorerModel,
};
use thiserror::Error;

pub use api::{router, SCHEMA_VERSION};
pub use config::ServiceConfig;
pub use store::{ClickError, ClickOutcome, ClickStore};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{what} not found: {}", path.display())]
    MissingPath { what: &'static str, path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

/// Everything a search reads. Replaced as a whole, never mutated.
pub struct Snapshot {
    pub engine: FederatedEngine<FederatedScorer>,
    pub members: BTreeMap<String, Member>,
}

impl Snapshot {
    pub fn load(config: &ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        let indexes = pipeline::load_indexes(&config.index_dir)?;
        let model: ScorerModel = pipeline::read_json(&config.model)?;
        model.check_vocabulary(&FeatureVocabulary::federated(&IntentTaxonomy::default()))?;
        let table: KeywordIntentTable = pipeline::read_json(&config.kwint)?;
        let members = pipeline::read_jsonl::<Member>(&config.population)?
            .into_iter()
            .map(|mut m| {
                m.active_intents = active_set(&m.intent_scores, config.intent_threshold);
                (m.member_id.clone(), m)
            })
            .collect();
        let federation = FederationConfig {
            k: config.k,
            layout: BlockLayout {
                block_score_top_m: config.block_score_top_m,
                ..BlockLayout::default()
            },
        };
        Ok(Self {
            engine: FederatedEngine::new(
                Arc::new(indexes),
                FederatedScorer { model, table },
                federation,
            ),
            members,
        })
    }
}

pub struct AppState {
    snapshot: RwLock<Arc<Snapshot>>,
    clicks: Mutex<ClickStore>,
}

impl AppState {
    pub fn new(snapshot: Snapshot, clicks: ClickStore) -> Self {
        Self {
            snapshot: RwLock::new(Arc::new(snapshot)),
            clicks: Mutex::new(clicks),
        }
    }

    pub fn load(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let snapshot = Snapshot::load(config)?;
        let capacity = NonZeroUsize::new(config.impression_capacity)
            .ok_or_else(|| ServiceError::Config("impression_capacity must be at least 1".into()))?;
        let clicks =
            ClickStore::open(&config.click_log, capacity).map_err(|source| ServiceError::Io {
                path: config.click_log.clone(),
                source,
            })?;
        Ok(Self::new(snapshot, clicks))
    }

    /// The current artifacts. In-flight requests keep the snapshot they
    /// started with across a [`swap`](Self::swap).
    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .clone()
    }

    /// Installs new artifacts atomically; returns the previous ones.
    pub fn swap(&self, next: Snapshot) -> Arc<Snapshot> {
        let mut guard = self.snapshot.write().unwrap_or_else(PoisonError::into_inner);
        std::mem::replace(&mut *guard, Arc::new(next))
    }

    pub fn with_clicks<R>(&self, f: impl FnOnce(&mut ClickStore) -> R) -> R {
        let mut guard = self.clicks.lock().unwrap_or_else(PoisonError::into_inner);
        f(&mut guard)
    }
}
