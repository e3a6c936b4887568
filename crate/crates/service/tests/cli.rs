use std::path::Path;
use std::process::{Command, Output};

fn fedsearch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedsearch"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn small_config() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data/small.json")
        .display()
        .to_string()
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = fedsearch(&[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("Usage"), "{err}");
    for sub in ["genworld", "index", "intents", "collect", "mine-kwint", "train", "ab", "serve"] {
        assert!(err.contains(sub), "usage lacks {sub}");
    }
}

#[test]
fn unknown_subcommand_exits_2() {
    let out = fedsearch(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn serve_with_missing_model_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::create_dir(d.join("index")).unwrap();
    for f in ["kwint.json", "members.jsonl"] {
        std::fs::write(d.join(f), "").unwrap();
    }
    let config = d.join("service.json");
    std::fs::write(
        &config,
        r#"{"index_dir": "index", "model": "model.json", "kwint": "kwint.json",
            "population": "members.jsonl", "click_log": "clicks.jsonl"}"#,
    )
    .unwrap();
    let out = fedsearch(&["serve", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("model not found"), "{err}");
}

#[test]
fn failing_step_reports_one_line() {
    let out = fedsearch(&["index", "--corpus", "/no/such/dir", "--out", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr(&out).lines().count(), 1);
}

#[test]
fn pipeline_subcommands_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let w = |p: &str| dir.path().join(p).display().to_string();
    let cfg = small_config();
    let steps: Vec<Vec<String>> = vec![
        vec!["genworld", "--config", &cfg, "--seed", "9", "--out", &w("world")],
        vec!["index", "--corpus", &w("world/corpus"), "--out", &w("index")],
        vec![
            "intents", "--config", &cfg,
            "--population", &w("world/members.jsonl"),
            "--truth", &w("world/truth.jsonl"),
            "--model", &w("intent_model.json"),
            "--out", &w("members.jsonl"),
        ],
        vec![
            "collect", "--config", &cfg, "--world", &w("world"),
            "--members", &w("members.jsonl"), "--index", &w("index"), "--out", &w("logs.jsonl"),
        ],
        vec!["mine-kwint", "--config", &cfg, "--logs", &w("logs.jsonl"), "--out", &w("kwint.json")],
        vec![
            "train", "--config", &cfg, "--logs", &w("logs.jsonl"),
            "--population", &w("members.jsonl"), "--kwint", &w("kwint.json"), "--l2", "0.001",
            "--out", &w("model.json"),
        ],
        vec![
            "ab", "--config", &cfg, "--world", &w("world"), "--members", &w("members.jsonl"),
            "--index", &w("index"), "--kwint", &w("kwint.json"),
            "--control", "baseline", "--treatment", &w("model.json"),
            "--searches", "1500", "--seed", "11", "--report", &w("report.json"),
        ],
    ]
    .into_iter()
    .map(|s| s.into_iter().map(String::from).collect())
    .collect();

    for step in &steps {
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        let out = fedsearch(&args);
        assert!(out.status.success(), "{}: {}", step[0], stderr(&out));
    }

    for artifact in [
        "world/world.json", "world/members.jsonl", "world/truth.jsonl", "world/queries.jsonl",
        "world/corpus/People.jsonl", "index/People.json", "intent_model.json", "members.jsonl",
        "logs.jsonl", "kwint.json", "model.json", "report.json",
    ] {
        assert!(dir.path().join(artifact).is_file(), "missing {artifact}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(w("report.json")).unwrap()).unwrap();
    let searches = report["control"]["searches"].as_u64().unwrap()
        + report["treatment"]["searches"].as_u64().unwrap();
    assert_eq!(searches, 1500);

    // the trained artifacts are directly servable
    std::fs::write(
        w("service.json"),
        r#"{"listen": "127.0.0.1:0", "index_dir": "index", "model": "model.json",
            "kwint": "kwint.json", "population": "members.jsonl", "click_log": "clicks.jsonl"}"#,
    )
    .unwrap();
    let config = fedsearch_service::ServiceConfig::load(Path::new(&w("service.json"))).unwrap();
    fedsearch_service::AppState::load(&config).unwrap();
}
