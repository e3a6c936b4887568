//! Personalized federated search.
//!
//! A query fans out to one BM25 index per vertical. A single learned scorer,
//! trained on click logs from a randomization experiment, rates whole
//! verticals (to pick the primary one) as well as individual results and
//! secondary blocks (to merge them into one ranking). Searcher intents such as
//! job seeking or hiring, inferred from profile and activity, enter that scorer
//! as features crossed with each result category.
//!
//! Module map:
//!
//! * [`domain`]: shared types and their canonical JSON form.
//! * [`vertical`]: inverted index, BM25 ranking, block scores.
//! * [`intent`]: intent signals, per-intent models, batch refresh.
//! * [`features`]: composite feature vectors and keyword-intent mining.
//! * [`scorer`]: skip-above labeling, randomized SERPs, logistic regression.
//! * [`federation`]: vertical selection, aggregation, the rule baseline.
//! * [`simulation`]: synthetic world, cascade clicks, A/B reports.
//! * [`pipeline`]: artifact IO and the end-to-end steps behind the CLI.

pub mod domain;
pub mod features;
pub mod federation;
pub mod intent;
pub mod pipeline;
pub mod scorer;
pub mod simulation;
pub mod vertical;

pub use domain::{
    category_of, ClickEvent, ClickKind, ClickLogEntry, Document, Intent, IntentTaxonomy, Member,
    RankedItem, ResultCategory, ResultType, ScoredDoc, SecondaryBlock, Serp, Vertical,
};
pub use federation::{
    aggregate, baseline_score, federated_search, select_verticals, BaselineScorer, FederatedEngine,
    FederatedScorer, FederationConfig, ItemScorer, SearchPolicy,
};
pub use scorer::{LogRegParams, ScorerModel};
