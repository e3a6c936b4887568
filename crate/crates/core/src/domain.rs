//! Core vocabulary shared by every other module.
//!
//! Everything here is plain data: constructors validate, nothing mutates after
//! construction. The serde representation is the canonical JSON form used by
//! every persisted artifact (field names as declared, enum variants as their
//! exact identifier strings).

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("unknown vertical `{0}`")]
    UnknownVertical(String),
    #[error("unknown result type `{0}`")]
    UnknownResultType(String),
    #[error("malformed result category `{0}`")]
    MalformedCategory(String),
    #[error("document `{0}` has empty text")]
    EmptyDocumentText(String),
    #[error("document id must not be empty")]
    EmptyDocumentId,
    #[error("base score {0} is not a finite non-negative number")]
    InvalidBaseScore(f64),
    #[error("secondary block for {0} has no documents")]
    EmptyBlock(Vertical),
    #[error("activities of member `{0}` are not sorted by timestamp")]
    UnsortedActivities(String),
    #[error("intent score {score} for {intent} is outside [0, 1]")]
    IntentScoreOutOfRange { intent: Intent, score: f64 },
    #[error("click position {position} is out of range for a SERP of {len} items")]
    InvalidPosition { position: usize, len: usize },
    #[error("header click at position {0} targets an individual result")]
    HeaderClickOnIndividual(usize),
}

/// The seven content sources. Declaration order is the tie-break order used
/// throughout vertical selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Vertical {
    People,
    Jobs,
    Companies,
    Universities,
    Groups,
    Slideshows,
    Posts,
}

impl Vertical {
    pub const ALL: [Vertical; 7] = [
        Vertical::People,
        Vertical::Jobs,
        Vertical::Companies,
        Vertical::Universities,
        Vertical::Groups,
        Vertical::Slideshows,
        Vertical::Posts,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Vertical::People => "People",
            Vertical::Jobs => "Jobs",
            Vertical::Companies => "Companies",
            Vertical::Universities => "Universities",
            Vertical::Groups => "Groups",
            Vertical::Slideshows => "Slideshows",
            Vertical::Posts => "Posts",
        }
    }
}

impl fmt::Display for Vertical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Vertical {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Vertical::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| DomainError::UnknownVertical(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ResultType {
    Individual,
    Block,
}

impl ResultType {
    pub const ALL: [ResultType; 2] = [ResultType::Individual, ResultType::Block];

    pub fn as_str(self) -> &'static str {
        match self {
            ResultType::Individual => "Individual",
            ResultType::Block => "Block",
        }
    }
}

impl fmt::Display for ResultType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResultType {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Individual" => Ok(ResultType::Individual),
            "Block" => Ok(ResultType::Block),
            other => Err(DomainError::UnknownResultType(other.to_string())),
        }
    }
}

/// A (vertical, result type) pair. All learned features are keyed by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ResultCategory {
    pub vertical: Vertical,
    pub result_type: ResultType,
}

impl ResultCategory {
    pub const fn new(vertical: Vertical, result_type: ResultType) -> Self {
        Self {
            vertical,
            result_type,
        }
    }

    pub const fn individual(vertical: Vertical) -> Self {
        Self::new(vertical, ResultType::Individual)
    }

    pub const fn block(vertical: Vertical) -> Self {
        Self::new(vertical, ResultType::Block)
    }

    /// All 14 categories in `Ord` order.
    pub fn all() -> impl Iterator<Item = ResultCategory> {
        Vertical::ALL.into_iter().flat_map(|v| {
            ResultType::ALL
                .into_iter()
                .map(move |t| ResultCategory::new(v, t))
        })
    }
}

/// `Vertical:ResultType`, the form used inside feature ids and JSON map keys.
impl fmt::Display for ResultCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.vertical, self.result_type)
    }
}

impl FromStr for ResultCategory {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (v, t) = s
            .split_once(':')
            .ok_or_else(|| DomainError::MalformedCategory(s.to_string()))?;
        Ok(ResultCategory::new(v.parse()?, t.parse()?))
    }
}

/// (De)serializes `BTreeMap<ResultCategory, T>` as a JSON object keyed by
/// `Vertical:ResultType`.
pub mod category_map {
    use super::ResultCategory;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S, T>(map: &BTreeMap<ResultCategory, T>, ser: S) -> Result<S::Ok, S::Error>
    where
        S: Serializer,
        T: Serialize,
    {
        let keyed: BTreeMap<String, &T> = map.iter().map(|(c, v)| (c.to_string(), v)).collect();
        keyed.serialize(ser)
    }

    pub fn deserialize<'de, D, T>(de: D) -> Result<BTreeMap<ResultCategory, T>, D::Error>
    where
        D: Deserializer<'de>,
        T: Deserialize<'de>,
    {
        let keyed = BTreeMap::<String, T>::deserialize(de)?;
        keyed
            .into_iter()
            .map(|(k, v)| k.parse().map(|c| (c, v)).map_err(D::Error::custom))
            .collect()
    }
}

/// A searcher intent. The default taxonomy has three values; more can be
/// declared through [`IntentTaxonomy`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Intent(Cow<'static, str>);

impl Intent {
    pub const JOB_SEEKING: Intent = Intent(Cow::Borrowed("JobSeeking"));
    pub const HIRING: Intent = Intent(Cow::Borrowed("Hiring"));
    pub const CONTENT_CONSUMING: Intent = Intent(Cow::Borrowed("ContentConsuming"));

    pub fn new(name: impl Into<String>) -> Self {
        Intent(Cow::Owned(name.into()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The configured set of intents, kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntentTaxonomy(BTreeSet<Intent>);

impl IntentTaxonomy {
    pub fn new(intents: impl IntoIterator<Item = Intent>) -> Self {
        Self(intents.into_iter().collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Intent> {
        self.0.iter()
    }

    pub fn contains(&self, intent: &Intent) -> bool {
        self.0.contains(intent)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for IntentTaxonomy {
    fn default() -> Self {
        Self::new([
            Intent::JOB_SEEKING,
            Intent::HIRING,
            Intent::CONTENT_CONSUMING,
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActivityKind {
    JobSearch,
    JobApply,
    ProfileView,
    ContentView,
    GroupJoin,
    PostPublish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityEvent {
    pub kind: ActivityKind,
    /// Epoch seconds.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub member_id: String,
    pub title: String,
    pub is_student: bool,
    pub months_to_graduation: Option<u32>,
    pub industry: String,
    pub activities: Vec<ActivityEvent>,
    pub intent_scores: BTreeMap<Intent, f64>,
    pub active_intents: BTreeSet<Intent>,
}

impl Member {
    /// A member without inferred intents. Activities are sorted on the way in.
    pub fn new(
        member_id: impl Into<String>,
        title: impl Into<String>,
        industry: impl Into<String>,
        mut activities: Vec<ActivityEvent>,
    ) -> Self {
        activities.sort_by_key(|a| a.timestamp);
        Self {
            member_id: member_id.into(),
            title: title.into(),
            is_student: false,
            months_to_graduation: None,
            industry: industry.into(),
            activities,
            intent_scores: BTreeMap::new(),
            active_intents: BTreeSet::new(),
        }
    }

    pub fn with_student(mut self, months_to_graduation: Option<u32>) -> Self {
        self.is_student = true;
        self.months_to_graduation = months_to_graduation;
        self
    }

    pub fn with_intents(mut self, scores: BTreeMap<Intent, f64>, threshold: f64) -> Self {
        self.active_intents = active_set(&scores, threshold);
        self.intent_scores = scores;
        self
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self
            .activities
            .windows(2)
            .any(|w| w[0].timestamp > w[1].timestamp)
        {
            return Err(DomainError::UnsortedActivities(self.member_id.clone()));
        }
        for (intent, &score) in &self.intent_scores {
            if !(0.0..=1.0).contains(&score) {
                return Err(DomainError::IntentScoreOutOfRange {
                    intent: intent.clone(),
                    score,
                });
            }
        }
        Ok(())
    }
}

/// Intents whose score reaches the threshold (inclusive).
pub fn active_set(scores: &BTreeMap<Intent, f64>, threshold: f64) -> BTreeSet<Intent> {
    scores
        .iter()
        .filter(|(_, &s)| s >= threshold)
        .map(|(i, _)| i.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub vertical: Vertical,
    /// Lowercase whitespace-separated terms.
    pub text: String,
    pub is_name_doc: bool,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        vertical: Vertical,
        text: impl Into<String>,
    ) -> Result<Self, DomainError> {
        let doc_id = doc_id.into();
        if doc_id.is_empty() {
            return Err(DomainError::EmptyDocumentId);
        }
        let text = normalize_terms(&text.into());
        if text.is_empty() {
            return Err(DomainError::EmptyDocumentText(doc_id));
        }
        Ok(Self {
            doc_id,
            vertical,
            text,
            is_name_doc: false,
        })
    }

    pub fn name_doc(mut self) -> Self {
        self.is_name_doc = true;
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.text.split_whitespace()
    }
}

/// Lowercases, trims and collapses runs of whitespace to a single space.
pub fn normalize_terms(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc: Document,
    pub base_score: f64,
}

impl ScoredDoc {
    pub fn new(doc: Document, base_score: f64) -> Result<Self, DomainError> {
        if !base_score.is_finite() || base_score < 0.0 {
            return Err(DomainError::InvalidBaseScore(base_score));
        }
        Ok(Self { doc, base_score })
    }
}

/// A secondary vertical cluster as it is placed on a SERP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondaryBlock {
    pub vertical: Vertical,
    /// In the vertical ranker's order.
    pub docs: Vec<ScoredDoc>,
    pub block_score: f64,
}

impl SecondaryBlock {
    pub fn new(
        vertical: Vertical,
        docs: Vec<ScoredDoc>,
        block_score: f64,
    ) -> Result<Self, DomainError> {
        if docs.is_empty() {
            return Err(DomainError::EmptyBlock(vertical));
        }
        Ok(Self {
            vertical,
            docs,
            block_score,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RankedItem {
    PrimaryIndividual {
        scored: ScoredDoc,
    },
    SecondaryBlock {
        vertical: Vertical,
        docs: Vec<ScoredDoc>,
        block_score: f64,
    },
}

impl RankedItem {
    pub fn individual(scored: ScoredDoc) -> Self {
        RankedItem::PrimaryIndividual { scored }
    }

    pub fn vertical(&self) -> Vertical {
        match self {
            RankedItem::PrimaryIndividual { scored } => scored.doc.vertical,
            RankedItem::SecondaryBlock { vertical, .. } => *vertical,
        }
    }

    pub fn is_block(&self) -> bool {
        matches!(self, RankedItem::SecondaryBlock { .. })
    }

    /// The base ranker's score for an individual, the block score for a block.
    pub fn base_signal(&self) -> f64 {
        match self {
            RankedItem::PrimaryIndividual { scored } => scored.base_score,
            RankedItem::SecondaryBlock { block_score, .. } => *block_score,
        }
    }
}

impl From<SecondaryBlock> for RankedItem {
    fn from(b: SecondaryBlock) -> Self {
        RankedItem::SecondaryBlock {
            vertical: b.vertical,
            docs: b.docs,
            block_score: b.block_score,
        }
    }
}

pub fn category_of(item: &RankedItem) -> ResultCategory {
    match item {
        RankedItem::PrimaryIndividual { scored } => ResultCategory::individual(scored.doc.vertical),
        RankedItem::SecondaryBlock { vertical, .. } => ResultCategory::block(*vertical),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Serp {
    pub serp_id: String,
    pub query: String,
    pub member_id: String,
    pub primary_vertical: Vertical,
    pub items: Vec<RankedItem>,
    pub randomized: bool,
}

impl Serp {
    /// The individual results in displayed order.
    pub fn primary_docs(&self) -> impl Iterator<Item = &ScoredDoc> {
        self.items.iter().filter_map(|item| match item {
            RankedItem::PrimaryIndividual { scored } => Some(scored),
            RankedItem::SecondaryBlock { .. } => None,
        })
    }

    pub fn block_verticals(&self) -> impl Iterator<Item = Vertical> + '_ {
        self.items
            .iter()
            .filter(|i| i.is_block())
            .map(RankedItem::vertical)
    }

    /// Checks the primary-order and block-uniqueness invariants against the
    /// primary vertical's ranked list.
    pub fn preserves_primary_order(&self, primary: &[ScoredDoc]) -> bool {
        self.primary_docs()
            .map(|d| &d.doc.doc_id)
            .eq(primary.iter().map(|d| &d.doc.doc_id))
    }

    pub fn blocks_are_valid(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.block_verticals()
            .all(|v| v != self.primary_vertical && seen.insert(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClickKind {
    ResultClick,
    HeaderClick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickEvent {
    pub position: usize,
    pub click_kind: ClickKind,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickLogEntry {
    pub serp: Serp,
    pub clicks: Vec<ClickEvent>,
}

impl ClickLogEntry {
    pub fn new(serp: Serp) -> Self {
        Self {
            serp,
            clicks: Vec::new(),
        }
    }

    pub fn check_click(&self, click: &ClickEvent) -> Result<(), DomainError> {
        let item = self
            .serp
            .items
            .get(click.position)
            .ok_or(DomainError::InvalidPosition {
                position: click.position,
                len: self.serp.items.len(),
            })?;
        if click.click_kind == ClickKind::HeaderClick && !item.is_block() {
            return Err(DomainError::HeaderClickOnIndividual(click.position));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        self.clicks.iter().try_for_each(|c| self.check_click(c))
    }

    /// Distinct clicked positions, ascending. A block clicked through both its
    /// header and a child result still counts once.
    pub fn clicked_positions(&self) -> BTreeSet<usize> {
        self.clicks.iter().map(|c| c.position).collect()
    }
}
