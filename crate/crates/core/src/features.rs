//! Feature construction for the federated scorer.
//!
//! Every signal is crossed with the [`ResultCategory`] of the item being
//! scored, so one linear model learns a separate weight per category. Three
//! families share the vector, each under its own id prefix:
//!
//! * `intent:<Intent>:<Vertical>:<ResultType>` fires (value 1) when the
//!   searcher has the intent and the item has the category.
//! * `kwint:<Vertical>:<ResultType>` carries the mined click probability of
//!   the category for the query.
//! * `base:<Vertical>:<ResultType>` carries the vertical ranker's score (or
//!   the block score for blocks).
//!
//! plus a constant `bias`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{
    category_map, category_of, normalize_terms, ClickLogEntry, Intent, IntentTaxonomy, Member,
    RankedItem, ResultCategory,
};

pub const BIAS: &str = "bias";

/// Sparse feature map. Zero values are never stored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(BTreeMap<String, f64>);

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, id: impl Into<String>, value: f64) {
        let id = id.into();
        if value == 0.0 {
            self.0.remove(&id);
        } else {
            self.0.insert(id, value);
        }
    }

    pub fn with(mut self, id: impl Into<String>, value: f64) -> Self {
        self.set(id, value);
        self
    }

    pub fn get(&self, id: &str) -> f64 {
        self.0.get(id).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn extend(&mut self, other: FeatureVector) {
        for (k, v) in other.0 {
            self.set(k, v);
        }
    }
}

impl<K: Into<String>> FromIterator<(K, f64)> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = (K, f64)>>(iter: I) -> Self {
        let mut fv = FeatureVector::new();
        for (k, v) in iter {
            fv.set(k, v);
        }
        fv
    }
}

pub fn intent_feature_id(intent: &Intent, category: ResultCategory) -> String {
    format!("intent:{intent}:{category}")
}

pub fn kwint_feature_id(category: ResultCategory) -> String {
    format!("kwint:{category}")
}

pub fn base_feature_id(category: ResultCategory) -> String {
    format!("base:{category}")
}

/// A closed, lexicographically sorted set of feature ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVocabulary {
    ids: Vec<String>,
}

impl FeatureVocabulary {
    pub fn new(ids: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = ids.into_iter().collect();
        Self {
            ids: set.into_iter().collect(),
        }
    }

    /// All federated-scorer ids for a taxonomy: |intents|×14 + 14 + 14 + 1.
    pub fn federated(taxonomy: &IntentTaxonomy) -> Self {
        let mut ids = Vec::new();
        for category in ResultCategory::all() {
            ids.extend(taxonomy.iter().map(|i| intent_feature_id(i, category)));
            ids.push(kwint_feature_id(category));
            ids.push(base_feature_id(category));
        }
        ids.push(BIAS.to_string());
        Self::new(ids)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .ok()
    }

    /// Hex SHA-256 over the newline-joined ids.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for id in &self.ids {
            hasher.update(id.as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub fn composite_intent_features(
    active_intents: &BTreeSet<Intent>,
    category: ResultCategory,
) -> FeatureVector {
    active_intents
        .iter()
        .map(|i| (intent_feature_id(i, category), 1.0))
        .collect()
}

/// Lowercase, trim, collapse inner whitespace.
pub fn normalize_query(query: &str) -> String {
    normalize_terms(query)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KeywordIntentConfig {
    pub laplace_alpha: f64,
    pub min_impressions: u64,
    /// Mine only logs from the randomization experiment.
    pub randomized_only: bool,
}

impl Default for KeywordIntentConfig {
    fn default() -> Self {
        Self {
            laplace_alpha: 1.0,
            min_impressions: 20,
            randomized_only: true,
        }
    }
}

/// Mined p(category | query) for head queries plus a pooled prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordIntentTable {
    pub per_query: BTreeMap<String, CategoryProbabilities>,
    #[serde(with = "category_map")]
    pub global_prior: BTreeMap<ResultCategory, f64>,
    pub min_impressions: u64,
    pub laplace_alpha: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryProbabilities(#[serde(with = "category_map")] pub BTreeMap<ResultCategory, f64>);

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    impressions: u64,
    clicks: u64,
}

fn smoothed(t: Tally, alpha: f64) -> Option<f64> {
    let denom = t.impressions as f64 + 2.0 * alpha;
    (denom > 0.0).then(|| (t.clicks as f64 + alpha) / denom)
}

pub fn mine_keyword_intent(
    logs: &[ClickLogEntry],
    config: KeywordIntentConfig,
) -> KeywordIntentTable {
    let mut per_query: BTreeMap<String, BTreeMap<ResultCategory, Tally>> = BTreeMap::new();
    for entry in logs {
        if config.randomized_only && !entry.serp.randomized {
            continue;
        }
        let clicked = entry.clicked_positions();
        let tallies = per_query
            .entry(normalize_query(&entry.serp.query))
            .or_default();
        for (pos, item) in entry.serp.items.iter().enumerate() {
            let t = tallies.entry(category_of(item)).or_default();
            t.impressions += 1;
            t.clicks += u64::from(clicked.contains(&pos));
        }
    }

    let alpha = config.laplace_alpha;
    let mut pooled: BTreeMap<ResultCategory, Tally> = BTreeMap::new();
    for tallies in per_query.values() {
        for (&c, t) in tallies {
            let p = pooled.entry(c).or_default();
            p.impressions += t.impressions;
            p.clicks += t.clicks;
        }
    }
    let global_prior = ResultCategory::all()
        .map(|c| {
            let t = pooled.get(&c).copied().unwrap_or_default();
            (c, smoothed(t, alpha).unwrap_or(0.0))
        })
        .collect();

    let per_query = per_query
        .into_iter()
        .filter(|(_, tallies)| {
            tallies.values().map(|t| t.impressions).sum::<u64>() >= config.min_impressions
        })
        .map(|(q, tallies)| {
            let probs = tallies
                .into_iter()
                .filter_map(|(c, t)| smoothed(t, alpha).map(|p| (c, p)))
                .collect();
            (q, CategoryProbabilities(probs))
        })
        .collect();

    KeywordIntentTable {
        per_query,
        global_prior,
        min_impressions: config.min_impressions,
        laplace_alpha: alpha,
    }
}

impl KeywordIntentTable {
    /// Per-query probability for head queries, the pooled prior otherwise.
    /// A head query that never showed the category also falls back to the prior.
    pub fn probability(&self, query: &str, category: ResultCategory) -> f64 {
        self.per_query
            .get(&normalize_query(query))
            .and_then(|p| p.0.get(&category))
            .or_else(|| self.global_prior.get(&category))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn empty(alpha: f64) -> Self {
        mine_keyword_intent(
            &[],
            KeywordIntentConfig {
                laplace_alpha: alpha,
                ..KeywordIntentConfig::default()
            },
        )
    }
}

pub fn keyword_intent_features(
    query: &str,
    category: ResultCategory,
    table: &KeywordIntentTable,
) -> FeatureVector {
    FeatureVector::new().with(
        kwint_feature_id(category),
        table.probability(query, category),
    )
}

pub fn base_ranking_features(item: &RankedItem) -> FeatureVector {
    FeatureVector::new().with(base_feature_id(category_of(item)), item.base_signal())
}

pub fn assemble(
    query: &str,
    member: &Member,
    item: &RankedItem,
    table: &KeywordIntentTable,
) -> FeatureVector {
    let category = category_of(item);
    let mut fv = composite_intent_features(&member.active_intents, category);
    fv.extend(keyword_intent_features(query, category, table));
    fv.extend(base_ranking_features(item));
    fv.set(BIAS, 1.0);
    fv
}
