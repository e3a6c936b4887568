//! Artifact persistence and the end-to-end steps behind the `fedsearch` CLI:
//! genworld → index → intents → collect → mine-kwint → train → ab.
//!
//! Every artifact is JSON or JSON Lines. Writers are deterministic, so
//! reading an artifact and writing it back reproduces the same bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ClickLogEntry, Document, Intent, Member, Vertical};
use crate::features::{
    mine_keyword_intent, FeatureVocabulary, KeywordIntentConfig, KeywordIntentTable,
};
use crate::federation::{BaselineScorer, FederatedEngine, FederatedScorer, FederationConfig};
use crate::intent::{batch_update, train_intent_model, IntentConfig, IntentError, IntentModel};
use crate::scorer::{
    label_clicklog, train_logreg, LogRegParams, ScorerError, ScorerModel, TrainingExample,
};
use crate::simulation::{
    collect_randomized, generate_world, run_ab, AbReport, ClickModelParams, LatentMember,
    SimulationError, World, WorldConfig,
};
use crate::vertical::{IndexError, VerticalIndex, VerticalIndexes};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// One compact JSON object per line, LF-terminated.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = create(path)?;
    for item in items {
        let line = serde_json::to_string(item).map_err(|source| PipelineError::Json {
            path: path.to_path_buf(),
            line: 0,
            source,
        })?;
        writeln!(out, "{line}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Reads JSON Lines. A malformed *final* line without a trailing newline is
/// treated as a torn write: skipped with a warning. Any other bad line fails.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let mut items = Vec::new();
    let mut buf = String::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let complete = buf.ends_with('\n');
        let text = buf.trim();
        if text.is_empty() {
            continue;
        }
        match serde_json::from_str(text) {
            Ok(item) => items.push(item),
            Err(e) if !complete => {
                log::warn!(
                    "{}:{line_no}: skipping truncated final line ({e})",
                    path.display()
                );
            }
            Err(source) => {
                return Err(PipelineError::Json {
                    path: path.to_path_buf(),
                    line: line_no,
                    source,
                })
            }
        }
    }
    Ok(items)
}

/// Reads a click log in which the same impression may appear on several
/// lines (the service appends a fresh snapshot after every click). The last
/// snapshot of each `serp_id` wins; entries keep first-seen order.
pub fn read_click_log(path: &Path) -> Result<Vec<ClickLogEntry>> {
    Ok(fold_click_log(read_jsonl(path)?))
}

pub fn fold_click_log(entries: Vec<ClickLogEntry>) -> Vec<ClickLogEntry> {
    let mut slot: BTreeMap<String, usize> = BTreeMap::new();
    let mut folded: Vec<ClickLogEntry> = Vec::with_capacity(entries.len());
    for entry in entries {
        match slot.get(&entry.serp.serp_id) {
            Some(&i) => folded[i] = entry,
            None => {
                slot.insert(entry.serp.serp_id.clone(), folded.len());
                folded.push(entry);
            }
        }
    }
    folded
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|source| PipelineError::Json {
        path: path.to_path_buf(),
        line: 0,
        source,
    })?;
    writeln!(out, "{text}").map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| PipelineError::Json {
        path: path.to_path_buf(),
        line: source.line(),
        source,
    })
}

/// All tunables of the offline pipeline in one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub world: WorldConfig,
    pub federation: FederationConfig,
    pub intent: IntentConfig,
    pub kwint: KeywordIntentConfig,
    pub scorer: LogRegParams,
    pub click_model: ClickModelParams,
    pub collect_searches: usize,
    pub collect_seed: u64,
    pub ab_searches: usize,
    pub ab_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            world: WorldConfig::default(),
            federation: FederationConfig::default(),
            intent: IntentConfig::default(),
            kwint: KeywordIntentConfig::default(),
            scorer: LogRegParams::default(),
            click_model: ClickModelParams::default(),
            collect_searches: 30_000,
            collect_seed: 3,
            ab_searches: 50_000,
            ab_seed: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub member_id: String,
    pub true_intents: BTreeSet<Intent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldMeta {
    pub now: u64,
    pub query_zipf: f64,
    pub config: WorldConfig,
}

/// File layout of a generated world directory.
pub struct WorldLayout {
    pub root: PathBuf,
}

impl WorldLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
    pub fn meta(&self) -> PathBuf {
        self.root.join("world.json")
    }
    pub fn members(&self) -> PathBuf {
        self.root.join("members.jsonl")
    }
    pub fn truth(&self) -> PathBuf {
        self.root.join("truth.jsonl")
    }
    pub fn queries(&self) -> PathBuf {
        self.root.join("queries.jsonl")
    }
    pub fn corpus_dir(&self) -> PathBuf {
        self.root.join("corpus")
    }
    pub fn corpus(&self, v: Vertical) -> PathBuf {
        self.corpus_dir().join(format!("{v}.jsonl"))
    }
}

pub fn save_world(world: &World, config: &WorldConfig, dir: &Path) -> Result<()> {
    let layout = WorldLayout::new(dir);
    write_json(
        &layout.meta(),
        &WorldMeta {
            now: world.now,
            query_zipf: world.query_zipf,
            config: config.clone(),
        },
    )?;
    let members: Vec<&Member> = world.population.iter().map(|l| &l.member).collect();
    write_jsonl(&layout.members(), &members)?;
    let truth: Vec<TruthRecord> = world
        .population
        .iter()
        .map(|l| TruthRecord {
            member_id: l.member.member_id.clone(),
            true_intents: l.true_intents.clone(),
        })
        .collect();
    write_jsonl(&layout.truth(), &truth)?;
    write_jsonl(&layout.queries(), &world.queries)?;
    for (v, docs) in &world.corpora {
        write_jsonl(&layout.corpus(*v), docs)?;
    }
    Ok(())
}

/// Reads one `<Vertical>.jsonl` per vertical present in `dir`.
pub fn load_corpora(dir: &Path) -> Result<BTreeMap<Vertical, Vec<Document>>> {
    let mut corpora = BTreeMap::new();
    for v in Vertical::ALL {
        let path = dir.join(format!("{v}.jsonl"));
        if path.exists() {
            corpora.insert(v, read_jsonl(&path)?);
        }
    }
    Ok(corpora)
}

/// Loads a world. `members` overrides the stored member records, typically
/// with ones whose intents have been inferred.
pub fn load_world(dir: &Path, members: Option<&Path>) -> Result<World> {
    let layout = WorldLayout::new(dir);
    let meta: WorldMeta = read_json(&layout.meta())?;
    let members: Vec<Member> = read_jsonl(members.unwrap_or(&layout.members()))?;
    let truth: BTreeMap<String, BTreeSet<Intent>> = read_jsonl::<TruthRecord>(&layout.truth())?
        .into_iter()
        .map(|t| (t.member_id, t.true_intents))
        .collect();
    let population = members
        .into_iter()
        .map(|member| {
            let true_intents = truth.get(&member.member_id).cloned().ok_or_else(|| {
                PipelineError::Invalid(format!("no ground truth for member {}", member.member_id))
            })?;
            Ok(LatentMember {
                member,
                true_intents,
            })
        })
        .collect::<Result<_>>()?;
    Ok(World {
        now: meta.now,
        population,
        corpora: load_corpora(&layout.corpus_dir())?,
        queries: read_jsonl(&layout.queries())?,
        query_zipf: meta.query_zipf,
    })
}

pub fn genworld(config: &WorldConfig, out: &Path) -> Result<World> {
    let world = generate_world(config);
    save_world(&world, config, out)?;
    Ok(world)
}

/// Builds one index per corpus file and writes `<Vertical>.json` into `out`.
pub fn index(corpus_dir: &Path, out: &Path) -> Result<VerticalIndexes> {
    let corpora = load_corpora(corpus_dir)?;
    if corpora.is_empty() {
        return Err(PipelineError::Invalid(format!(
            "no <Vertical>.jsonl corpus files in {}",
            corpus_dir.display()
        )));
    }
    let indexes = VerticalIndexes::build(&corpora)?;
    for idx in indexes.iter() {
        write_json(&out.join(format!("{}.json", idx.vertical)), idx)?;
    }
    Ok(indexes)
}

pub fn load_indexes(dir: &Path) -> Result<VerticalIndexes> {
    let mut indexes = Vec::new();
    for v in Vertical::ALL {
        let path = dir.join(format!("{v}.json"));
        if path.exists() {
            indexes.push(read_json::<VerticalIndex>(&path)?);
        }
    }
    if indexes.is_empty() {
        return Err(PipelineError::Invalid(format!(
            "no indexes in {}",
            dir.display()
        )));
    }
    Ok(VerticalIndexes::from_indexes(indexes))
}

pub fn fit_intent_model(world: &World, config: &IntentConfig) -> Result<IntentModel> {
    let labeled: Vec<(Member, BTreeSet<Intent>)> = world
        .population
        .iter()
        .map(|l| (l.member.clone(), l.true_intents.clone()))
        .collect();
    Ok(train_intent_model(&labeled, world.now, config)?)
}

/// Trains the intent model on ground truth when `truth` is given (and saves
/// it to `model_path`), otherwise loads it; then refreshes every member.
pub fn intents(
    population: &Path,
    model_path: &Path,
    truth: Option<&Path>,
    now: u64,
    config: &IntentConfig,
    out: &Path,
) -> Result<Vec<Member>> {
    let members: Vec<Member> = read_jsonl(population)?;
    let model = match truth {
        Some(truth) => {
            let truth: BTreeMap<String, BTreeSet<Intent>> = read_jsonl::<TruthRecord>(truth)?
                .into_iter()
                .map(|t| (t.member_id, t.true_intents))
                .collect();
            let labeled: Vec<(Member, BTreeSet<Intent>)> = members
                .iter()
                .filter_map(|m| truth.get(&m.member_id).map(|t| (m.clone(), t.clone())))
                .collect();
            let model = train_intent_model(&labeled, now, config)?;
            write_json(model_path, &model)?;
            model
        }
        None => read_json(model_path)?,
    };
    model.covers(&config.taxonomy)?;
    let updated = batch_update(&members, &model, now, config);
    write_jsonl(out, &updated)?;
    Ok(updated)
}

pub fn collect(
    world: &World,
    indexes: &VerticalIndexes,
    config: &PipelineConfig,
) -> Result<Vec<ClickLogEntry>> {
    Ok(collect_randomized(
        world,
        indexes,
        config.federation.k,
        config.federation.layout,
        &config.click_model,
        config.collect_searches,
        config.collect_seed,
    )?)
}

pub fn mine_kwint(logs: &[ClickLogEntry], config: KeywordIntentConfig) -> KeywordIntentTable {
    mine_keyword_intent(logs, config)
}

/// Skip-above examples for every log entry whose member is known.
pub fn training_examples(
    logs: &[ClickLogEntry],
    members: &[Member],
    table: &KeywordIntentTable,
) -> Vec<TrainingExample> {
    let by_id: BTreeMap<&str, &Member> =
        members.iter().map(|m| (m.member_id.as_str(), m)).collect();
    logs.iter()
        .filter_map(|e| by_id.get(e.serp.member_id.as_str()).map(|m| (e, *m)))
        .flat_map(|(e, m)| label_clicklog(e, m, table))
        .collect()
}

pub fn train(
    logs: &[ClickLogEntry],
    members: &[Member],
    table: &KeywordIntentTable,
    config: &PipelineConfig,
) -> Result<ScorerModel> {
    let examples = training_examples(logs, members, table);
    let vocab = FeatureVocabulary::federated(&config.intent.taxonomy);
    Ok(train_logreg(&examples, &vocab, config.scorer)?)
}

/// Control: the rule baseline. Treatment: the learned federated scorer.
pub fn ab(
    world: &World,
    indexes: Arc<VerticalIndexes>,
    table: &KeywordIntentTable,
    model: &ScorerModel,
    config: &PipelineConfig,
) -> Result<AbReport> {
    model.check_vocabulary(&FeatureVocabulary::federated(&config.intent.taxonomy))?;
    let control = FederatedEngine::new(
        indexes.clone(),
        BaselineScorer {
            table: table.clone(),
        },
        config.federation,
    );
    let treatment = FederatedEngine::new(
        indexes,
        FederatedScorer {
            model: model.clone(),
            table: table.clone(),
        },
        config.federation,
    );
    Ok(run_ab(
        world,
        &control,
        &treatment,
        &config.click_model,
        config.ab_searches,
        config.ab_seed,
    )?)
}

/// File names used by [`run_all`] inside its work directory.
pub mod files {
    pub const WORLD: &str = "world";
    pub const INDEX: &str = "index";
    pub const INTENT_MODEL: &str = "intent_model.json";
    pub const MEMBERS_SCORED: &str = "members_scored.jsonl";
    pub const LOGS: &str = "randomized_logs.jsonl";
    pub const KWINT: &str = "kwint.json";
    pub const MODEL: &str = "model.json";
    pub const REPORT: &str = "report.json";
}

/// Runs every step, persisting each artifact under `workdir` and reading it
/// back from disk before the next step consumes it.
pub fn run_all(config: &PipelineConfig, workdir: &Path) -> Result<AbReport> {
    let world_dir = workdir.join(files::WORLD);
    let layout = WorldLayout::new(&world_dir);
    genworld(&config.world, &world_dir)?;

    index(&layout.corpus_dir(), &workdir.join(files::INDEX))?;
    let indexes = Arc::new(load_indexes(&workdir.join(files::INDEX))?);

    let scored = workdir.join(files::MEMBERS_SCORED);
    intents(
        &layout.members(),
        &workdir.join(files::INTENT_MODEL),
        Some(&layout.truth()),
        config.world.now,
        &config.intent,
        &scored,
    )?;
    let world = load_world(&world_dir, Some(&scored))?;

    let logs = collect(&world, &indexes, config)?;
    write_jsonl(&workdir.join(files::LOGS), &logs)?;
    let logs = read_click_log(&workdir.join(files::LOGS))?;

    write_json(
        &workdir.join(files::KWINT),
        &mine_kwint(&logs, config.kwint),
    )?;
    let table: KeywordIntentTable = read_json(&workdir.join(files::KWINT))?;

    let members: Vec<Member> = read_jsonl(&scored)?;
    write_json(
        &workdir.join(files::MODEL),
        &train(&logs, &members, &table, config)?,
    )?;
    let model: ScorerModel = read_json(&workdir.join(files::MODEL))?;

    let report = ab(&world, indexes, &table, &model, config)?;
    write_json(&workdir.join(files::REPORT), &report)?;
    Ok(report)
}
