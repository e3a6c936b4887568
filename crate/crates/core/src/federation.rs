//! Runtime federation: fan out the query, pick a primary vertical, then merge
//! candidate secondary blocks into the primary ranking.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{category_of, Member, RankedItem, ScoredDoc, SecondaryBlock, Serp, Vertical};
use crate::features::{assemble, KeywordIntentTable};
use crate::scorer::{BlockLayout, ScorerModel};
use crate::vertical::{IndexError, VerticalIndexes, VerticalResultList};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FederationError {
    #[error("no vertical returned results")]
    NoEligibleVertical,
    #[error("primary result list is empty")]
    EmptyPrimary,
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Scores a SERP item for a (query, member) pair. Scores must be comparable
/// across verticals and between individual results and blocks.
pub trait ItemScorer: Send + Sync {
    fn score_item(&self, query: &str, member: &Member, item: &RankedItem) -> f64;
}

/// The learned scorer: click probability over assembled features.
#[derive(Debug, Clone, PartialEq)]
pub struct FederatedScorer {
    pub model: ScorerModel,
    pub table: KeywordIntentTable,
}

impl ItemScorer for FederatedScorer {
    fn score_item(&self, query: &str, member: &Member, item: &RankedItem) -> f64 {
        self.model
            .score(&assemble(query, member, item, &self.table))
    }
}

/// Rule-based control arm. Uses keyword intent and base relevance only;
/// never looks at the searcher.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineScorer {
    pub table: KeywordIntentTable,
}

impl ItemScorer for BaselineScorer {
    fn score_item(&self, query: &str, _member: &Member, item: &RankedItem) -> f64 {
        baseline_score(query, item, &self.table)
    }
}

/// `p(category | query) · base / (1 + base)`, always in [0, 1].
pub fn baseline_score(query: &str, item: &RankedItem, table: &KeywordIntentTable) -> f64 {
    let kwint = table.probability(query, category_of(item));
    let base = item.base_signal();
    kwint * base / (1.0 + base)
}

/// Scores every non-empty vertical as a block. The best becomes primary; the
/// rest are returned as candidates in descending score order. Ties go to the
/// vertical declared first.
pub fn select_verticals(
    query: &str,
    member: &Member,
    vertical_results: &BTreeMap<Vertical, VerticalResultList>,
    scorer: &dyn ItemScorer,
    layout: BlockLayout,
) -> Result<(Vertical, Vec<SecondaryBlock>), FederationError> {
    let mut scored: Vec<(f64, SecondaryBlock)> = vertical_results
        .values()
        .filter_map(|list| layout.block(list))
        .map(|block| {
            let item = RankedItem::from(block.clone());
            (scorer.score_item(query, member, &item), block)
        })
        .collect();
    if scored.is_empty() {
        return Err(FederationError::NoEligibleVertical);
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.vertical.cmp(&b.1.vertical)));
    let primary = scored.remove(0).1.vertical;
    Ok((primary, scored.into_iter().map(|(_, b)| b).collect()))
}

/// Merges blocks into the primary list without reordering it.
///
/// Candidates are sorted by score (descending, stable). At each output slot
/// the next primary result is emitted if it outscores the best remaining
/// block, or if no blocks remain; otherwise that block is emitted. Once every
/// primary result is placed, leftover blocks are dropped.
pub fn aggregate(
    primary_results: &[ScoredDoc],
    candidates: Vec<SecondaryBlock>,
    scorer: impl Fn(&RankedItem) -> f64,
) -> Result<Vec<RankedItem>, FederationError> {
    if primary_results.is_empty() {
        return Err(FederationError::EmptyPrimary);
    }
    let mut blocks: Vec<(f64, RankedItem)> = candidates
        .into_iter()
        .map(|b| {
            let item = RankedItem::from(b);
            (scorer(&item), item)
        })
        .collect();
    blocks.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut blocks = blocks.into_iter().peekable();

    let mut ranked = Vec::with_capacity(primary_results.len() + blocks.len());
    for doc in primary_results {
        let item = RankedItem::individual(doc.clone());
        let primary_score = scorer(&item);
        while let Some((_, block)) = blocks.next_if(|(s, _)| primary_score <= *s) {
            ranked.push(block);
        }
        ranked.push(item);
    }
    Ok(ranked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FederationConfig {
    /// Results fetched per vertical.
    pub k: usize,
    pub layout: BlockLayout,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            k: 10,
            layout: BlockLayout::default(),
        }
    }
}

fn serp_id_for(query: &str, member_id: &str) -> String {
    let digest = Sha256::new()
        .chain_update(query.as_bytes())
        .chain_update([0])
        .chain_update(member_id.as_bytes())
        .finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Fan-out, preliminary vertical selection and aggregation in one call.
pub fn federated_search(
    query: &str,
    member: &Member,
    indexes: &VerticalIndexes,
    scorer: &dyn ItemScorer,
    config: FederationConfig,
) -> Result<Serp, FederationError> {
    let results = indexes.fan_out(query, config.k)?;
    federate(query, member, &results, scorer, config)
}

/// Everything after fan-out.
pub fn federate(
    query: &str,
    member: &Member,
    results: &BTreeMap<Vertical, VerticalResultList>,
    scorer: &dyn ItemScorer,
    config: FederationConfig,
) -> Result<Serp, FederationError> {
    let (primary, candidates) = select_verticals(query, member, results, scorer, config.layout)?;
    let items = aggregate(&results[&primary].results, candidates, |item| {
        scorer.score_item(query, member, item)
    })?;
    Ok(Serp {
        serp_id: serp_id_for(query, &member.member_id),
        query: query.to_string(),
        member_id: member.member_id.clone(),
        primary_vertical: primary,
        items,
        randomized: false,
    })
}

/// A serving policy: (query, member) → SERP.
pub trait SearchPolicy: Send + Sync {
    fn serve(&self, query: &str, member: &Member) -> Result<Serp, FederationError>;
}

/// Indexes plus a scorer; the unit an A/B arm or the HTTP service runs.
pub struct FederatedEngine<S> {
    pub indexes: Arc<VerticalIndexes>,
    pub scorer: S,
    pub config: FederationConfig,
}

impl<S: ItemScorer> FederatedEngine<S> {
    pub fn new(indexes: Arc<VerticalIndexes>, scorer: S, config: FederationConfig) -> Self {
        Self {
            indexes,
            scorer,
            config,
        }
    }
}

impl<S: ItemScorer> SearchPolicy for FederatedEngine<S> {
    fn serve(&self, query: &str, member: &Member) -> Result<Serp, FederationError> {
        federated_search(query, member, &self.indexes, &self.scorer, self.config)
    }
}
