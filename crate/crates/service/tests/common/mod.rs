#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use fedsearch::pipeline::{self, PipelineConfig, WorldLayout};
use fedsearch::Member;
use fedsearch_service::{router, AppState, ServiceConfig};
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use tower::ServiceExt;

pub fn small_config() -> PipelineConfig {
    pipeline::read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/small.json"))
        .unwrap()
}

/// Trained artifacts for a small world, built once per test binary.
pub struct Artifacts {
    pub dir: PathBuf,
    pub members: Vec<Member>,
    pub queries: Vec<String>,
}

pub fn artifacts() -> &'static Artifacts {
    static CELL: OnceLock<Artifacts> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!(
            "service-fixture-{}",
            std::process::id()
        ));
        let config = small_config();
        let world_dir = dir.join("world");
        let layout = WorldLayout::new(&world_dir);
        pipeline::genworld(&config.world, &world_dir).unwrap();
        let indexes = pipeline::index(&layout.corpus_dir(), &dir.join("index")).unwrap();
        let scored = dir.join("members.jsonl");
        let members = pipeline::intents(
            &layout.members(),
            &dir.join("intent_model.json"),
            Some(&layout.truth()),
            config.world.now,
            &config.intent,
            &scored,
        )
        .unwrap();
        let world = pipeline::load_world(&world_dir, Some(&scored)).unwrap();
        let logs = pipeline::collect(&world, &indexes, &config).unwrap();
        let table = pipeline::mine_kwint(&logs, config.kwint);
        let model = pipeline::train(&logs, &members, &table, &config).unwrap();
        pipeline::write_json(&dir.join("kwint.json"), &table).unwrap();
        pipeline::write_json(&dir.join("model.json"), &model).unwrap();
        Artifacts {
            dir,
            members,
            queries: world.queries,
        }
    })
}

/// Service config over the shared artifacts with a private click log.
pub fn service_config(log_dir: &Path) -> ServiceConfig {
    let a = artifacts();
    ServiceConfig::new(
        a.dir.join("index"),
        a.dir.join("model.json"),
        a.dir.join("kwint.json"),
        a.dir.join("members.jsonl"),
        log_dir.join("clicks.jsonl"),
    )
}

pub struct TestApp {
    pub state: Arc<AppState>,
    pub config: ServiceConfig,
    _log_dir: tempfile::TempDir,
}

impl TestApp {
    pub fn new() -> Self {
        Self::with(|_| {})
    }

    pub fn with(tweak: impl FnOnce(&mut ServiceConfig)) -> Self {
        let log_dir = tempfile::tempdir().unwrap();
        let mut config = service_config(log_dir.path());
        tweak(&mut config);
        let state = Arc::new(AppState::load(&config).unwrap());
        Self {
            state,
            config,
            _log_dir: log_dir,
        }
    }

    pub async fn get<T: DeserializeOwned>(&self, uri: &str) -> (StatusCode, T) {
        let req = Request::get(uri).body(Body::empty()).unwrap();
        self.send(req).await
    }

    pub async fn post<T: DeserializeOwned>(&self, uri: &str, body: serde_json::Value) -> (StatusCode, T) {
        let req = Request::post(uri)
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()))
            .unwrap();
        self.send(req).await
    }

    async fn send<T: DeserializeOwned>(&self, req: Request<Body>) -> (StatusCode, T) {
        let resp = router(self.state.clone()).oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let body = serde_json::from_slice(&bytes)
            .unwrap_or_else(|e| panic!("{status}: {e}: {}", String::from_utf8_lossy(&bytes)));
        (status, body)
    }

    pub fn log_lines(&self) -> Vec<String> {
        std::fs::read_to_string(&self.config.click_log)
            .unwrap()
            .lines()
            .map(String::from)
            .collect()
    }
}

pub fn search_uri(query: &str, member: &str) -> String {
    let q: String = query
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("+");
    format!("/search?q={q}&member={member}")
}
