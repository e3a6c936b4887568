//! Searcher intent inference from profile and recent activity.
//!
//! One independent logistic model per intent, so any subset of intents can be
//! active for a member at once.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{active_set, ActivityKind, Intent, IntentTaxonomy, Member};
use crate::features::{FeatureVector, FeatureVocabulary};
use crate::scorer::{train_logreg, Label, LogRegParams, ScorerError, ScorerModel};

pub const SECONDS_PER_DAY: u64 = 86_400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntentError {
    #[error("need at least two members to train, got {0}")]
    TooFewMembers(usize),
    #[error("intent {0} has examples of only one class")]
    DegenerateLabels(Intent),
    #[error("model has no entry for intent {0}")]
    MissingIntent(Intent),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntentConfig {
    pub taxonomy: IntentTaxonomy,
    pub threshold: f64,
    pub window_days: u64,
    pub recruiter_terms: Vec<String>,
    pub final_year_months: u32,
    pub training: LogRegParams,
}

impl Default for IntentConfig {
    fn default() -> Self {
        Self {
            taxonomy: IntentTaxonomy::default(),
            threshold: 0.5,
            window_days: 28,
            recruiter_terms: ["recruiter", "talent", "sourcer", "hiring manager"]
                .map(String::from)
                .to_vec(),
            final_year_months: 12,
            training: LogRegParams {
                learning_rate: 0.05,
                epochs: 100,
                ..LogRegParams::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntentSignalVector {
    pub title_has_recruiter_term: u8,
    pub is_final_year_student: u8,
    pub recent_job_searches: u32,
    pub recent_job_applies: u32,
    pub recent_content_views: u32,
    pub recent_profile_views: u32,
    pub recent_group_joins: u32,
}

const SIGNAL_NAMES: [&str; 7] = [
    "title_has_recruiter_term",
    "is_final_year_student",
    "recent_job_searches",
    "recent_job_applies",
    "recent_content_views",
    "recent_profile_views",
    "recent_group_joins",
];

impl IntentSignalVector {
    pub fn vocabulary() -> FeatureVocabulary {
        FeatureVocabulary::new(SIGNAL_NAMES.map(String::from))
    }

    pub fn values(&self) -> [f64; 7] {
        [
            f64::from(self.title_has_recruiter_term),
            f64::from(self.is_final_year_student),
            f64::from(self.recent_job_searches),
            f64::from(self.recent_job_applies),
            f64::from(self.recent_content_views),
            f64::from(self.recent_profile_views),
            f64::from(self.recent_group_joins),
        ]
    }

    pub fn to_features(&self) -> FeatureVector {
        SIGNAL_NAMES.into_iter().zip(self.values()).collect()
    }
}

pub fn extract_intent_signals(
    member: &Member,
    now: u64,
    config: &IntentConfig,
) -> IntentSignalVector {
    let title = member.title.to_lowercase();
    let recruiter = config
        .recruiter_terms
        .iter()
        .any(|t| title.contains(t.as_str()));
    let final_year = member.is_student
        && member
            .months_to_graduation
            .is_some_and(|m| m <= config.final_year_months);

    let start = now.saturating_sub(config.window_days * SECONDS_PER_DAY);
    let mut s = IntentSignalVector {
        title_has_recruiter_term: u8::from(recruiter),
        is_final_year_student: u8::from(final_year),
        ..Default::default()
    };
    for event in member
        .activities
        .iter()
        .filter(|e| e.timestamp > start && e.timestamp <= now)
    {
        match event.kind {
            ActivityKind::JobSearch => s.recent_job_searches += 1,
            ActivityKind::JobApply => s.recent_job_applies += 1,
            ActivityKind::ContentView => s.recent_content_views += 1,
            ActivityKind::ProfileView => s.recent_profile_views += 1,
            ActivityKind::GroupJoin => s.recent_group_joins += 1,
            ActivityKind::PostPublish => {}
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentModel {
    pub models: BTreeMap<Intent, ScorerModel>,
}

impl IntentModel {
    /// All-zero weights: every intent scores exactly 0.5.
    pub fn zero(taxonomy: &IntentTaxonomy) -> Self {
        let vocab = IntentSignalVector::vocabulary();
        Self {
            models: taxonomy
                .iter()
                .map(|i| {
                    (
                        i.clone(),
                        ScorerModel::zero(&vocab, LogRegParams::default()),
                    )
                })
                .collect(),
        }
    }

    pub fn covers(&self, taxonomy: &IntentTaxonomy) -> Result<(), IntentError> {
        match taxonomy.iter().find(|i| !self.models.contains_key(*i)) {
            Some(i) => Err(IntentError::MissingIntent(i.clone())),
            None => Ok(()),
        }
    }

    pub fn scores(&self, signals: &IntentSignalVector) -> BTreeMap<Intent, f64> {
        let features = signals.to_features();
        self.models
            .iter()
            .map(|(i, m)| (i.clone(), m.score(&features)))
            .collect()
    }
}

pub fn train_intent_model(
    members: &[(Member, BTreeSet<Intent>)],
    now: u64,
    config: &IntentConfig,
) -> Result<IntentModel, IntentError> {
    if members.len() < 2 {
        return Err(IntentError::TooFewMembers(members.len()));
    }
    let vocab = IntentSignalVector::vocabulary();
    let features: Vec<FeatureVector> = members
        .iter()
        .map(|(m, _)| extract_intent_signals(m, now, config).to_features())
        .collect();

    let mut models = BTreeMap::new();
    for intent in config.taxonomy.iter() {
        let examples: Vec<(FeatureVector, Label)> = features
            .iter()
            .zip(members)
            .map(|(f, (_, truth))| {
                let label = if truth.contains(intent) {
                    Label::Positive
                } else {
                    Label::Negative
                };
                (f.clone(), label)
            })
            .collect();
        let model = train_logreg(&examples, &vocab, config.training).map_err(|e| match e {
            ScorerError::DegenerateLabels => IntentError::DegenerateLabels(intent.clone()),
            other => IntentError::Scorer(other),
        })?;
        models.insert(intent.clone(), model);
    }
    Ok(IntentModel { models })
}

pub fn infer_intents(
    member: &Member,
    model: &IntentModel,
    now: u64,
    config: &IntentConfig,
) -> (BTreeMap<Intent, f64>, BTreeSet<Intent>) {
    let scores = model.scores(&extract_intent_signals(member, now, config));
    let active = active_set(&scores, config.threshold);
    (scores, active)
}

/// The daily refresh: every member's intents recomputed from scratch.
pub fn batch_update(
    population: &[Member],
    model: &IntentModel,
    now: u64,
    config: &IntentConfig,
) -> Vec<Member> {
    population
        .iter()
        .map(|m| {
            let (intent_scores, active_intents) = infer_intents(m, model, now, config);
            Member {
                intent_scores,
                active_intents,
                ..m.clone()
            }
        })
        .collect()
}
