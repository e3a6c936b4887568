//! The federated scorer and everything needed to train it from click logs:
//! skip-above labeling, the randomization experiment that produces unbiased
//! logs, and L2-regularized logistic regression fit by mini-batch gradient
//! descent.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ClickLogEntry, Member, RankedItem, ScoredDoc, SecondaryBlock, Serp, Vertical};
use crate::features::{assemble, FeatureVector, FeatureVocabulary, KeywordIntentTable};
use crate::vertical::{block_score, VerticalResultList};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScorerError {
    #[error("training data needs at least one positive and one negative example")]
    DegenerateLabels,
    #[error("loss became non-finite at epoch {0}; lower the learning rate")]
    NonFiniteLoss(usize),
    #[error("no vertical returned results")]
    NoEligibleVertical,
    #[error("model was trained on vocabulary {model}, caller expects {expected}")]
    VocabularyMismatch { model: String, expected: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    fn target(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub features: FeatureVector,
    pub label: Label,
    pub serp_id: String,
    pub position: usize,
}

/// Anything the trainer can learn from.
pub trait Labeled {
    fn features(&self) -> &FeatureVector;
    fn label(&self) -> Label;
}

impl Labeled for TrainingExample {
    fn features(&self) -> &FeatureVector {
        &self.features
    }
    fn label(&self) -> Label {
        self.label
    }
}

impl Labeled for (FeatureVector, Label) {
    fn features(&self) -> &FeatureVector {
        &self.0
    }
    fn label(&self) -> Label {
        self.1
    }
}

/// Skip-above rule: clicked items are positive, unclicked items above the
/// last click are negative, everything below the last click is dropped.
pub fn skip_above_labels(entry: &ClickLogEntry) -> Vec<(usize, Label)> {
    let clicked = entry.clicked_positions();
    let Some(&last) = clicked.last() else {
        return Vec::new();
    };
    (0..=last.min(entry.serp.items.len().saturating_sub(1)))
        .map(|pos| {
            let label = if clicked.contains(&pos) {
                Label::Positive
            } else {
                Label::Negative
            };
            (pos, label)
        })
        .collect()
}

/// Labels one impression and assembles features for each kept item.
pub fn label_clicklog(
    entry: &ClickLogEntry,
    member: &Member,
    table: &KeywordIntentTable,
) -> Vec<TrainingExample> {
    skip_above_labels(entry)
        .into_iter()
        .map(|(position, label)| TrainingExample {
            features: assemble(
                &entry.serp.query,
                member,
                &entry.serp.items[position],
                table,
            ),
            label,
            serp_id: entry.serp.serp_id.clone(),
            position,
        })
        .collect()
}

/// How secondary verticals are packed into blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockLayout {
    /// Documents shown inside a block.
    pub k_block: usize,
    /// Top results averaged into the block score.
    pub block_score_top_m: usize,
}

impl Default for BlockLayout {
    fn default() -> Self {
        Self {
            k_block: 3,
            block_score_top_m: 3,
        }
    }
}

impl BlockLayout {
    pub fn block(&self, list: &VerticalResultList) -> Option<SecondaryBlock> {
        let score = block_score(list, self.block_score_top_m).ok()?;
        let docs: Vec<ScoredDoc> = list.results.iter().take(self.k_block).cloned().collect();
        SecondaryBlock::new(list.vertical, docs, score).ok()
    }
}

/// One SERP of the randomization experiment: a uniformly random primary among
/// the verticals that returned anything, and every other such vertical
/// inserted as a block into an independent uniform gap of the primary list.
pub fn randomize_serp(
    query: &str,
    member_id: &str,
    vertical_results: &BTreeMap<Vertical, VerticalResultList>,
    layout: BlockLayout,
    rng_seed: u64,
) -> Result<Serp, ScorerError> {
    let eligible: Vec<&VerticalResultList> = vertical_results
        .values()
        .filter(|r| !r.is_empty())
        .collect();
    if eligible.is_empty() {
        return Err(ScorerError::NoEligibleVertical);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let serp_id = format!("rnd-{:016x}", rng.random::<u64>());
    let primary = eligible[rng.random_range(0..eligible.len())];
    let n = primary.results.len();

    // gap g sits before primary result g; gap n is after the last one
    let mut slotted: Vec<(usize, SecondaryBlock)> = Vec::new();
    for list in eligible.iter().filter(|l| l.vertical != primary.vertical) {
        let gap = rng.random_range(0..=n);
        if let Some(block) = layout.block(list) {
            slotted.push((gap, block));
        }
    }
    // stable sort keeps vertical order within a gap
    slotted.sort_by_key(|(gap, _)| *gap);

    let mut items = Vec::with_capacity(n + slotted.len());
    let mut blocks = slotted.into_iter().peekable();
    for (i, doc) in primary.results.iter().enumerate() {
        while let Some((_, block)) = blocks.next_if(|(gap, _)| *gap == i) {
            items.push(block.into());
        }
        items.push(RankedItem::individual(doc.clone()));
    }
    items.extend(blocks.map(|(_, b)| RankedItem::from(b)));

    Ok(Serp {
        serp_id,
        query: query.to_string(),
        member_id: member_id.to_string(),
        primary_vertical: primary.vertical,
        items,
        randomized: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegParams {
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Stop once the epoch-over-epoch objective change falls below this.
    pub tolerance: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self {
            l2_lambda: 1e-4,
            learning_rate: 0.1,
            epochs: 50,
            batch_size: 64,
            seed: 0,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerModel {
    pub weights: BTreeMap<String, f64>,
    pub intercept: f64,
    pub vocabulary_hash: String,
    pub hyperparams: LogRegParams,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl ScorerModel {
    pub fn zero(vocab: &FeatureVocabulary, hyperparams: LogRegParams) -> Self {
        Self {
            weights: vocab.ids().iter().map(|id| (id.clone(), 0.0)).collect(),
            intercept: 0.0,
            vocabulary_hash: vocab.checksum(),
            hyperparams,
        }
    }

    pub fn margin(&self, features: &FeatureVector) -> f64 {
        features
            .iter()
            .filter_map(|(id, v)| self.weights.get(id).map(|w| w * v))
            .sum::<f64>()
            + self.intercept
    }

    /// Predicted click probability. Features outside the vocabulary are ignored.
    pub fn score(&self, features: &FeatureVector) -> f64 {
        sigmoid(self.margin(features))
    }

    pub fn check_vocabulary(&self, vocab: &FeatureVocabulary) -> Result<(), ScorerError> {
        let expected = vocab.checksum();
        if self.vocabulary_hash == expected {
            Ok(())
        } else {
            Err(ScorerError::VocabularyMismatch {
                model: self.vocabulary_hash.clone(),
                expected,
            })
        }
    }
}

pub fn score(model: &ScorerModel, features: &FeatureVector) -> f64 {
    model.score(features)
}

/// Examples projected onto a vocabulary as sparse index/value rows.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    rows: Vec<Vec<(usize, f64)>>,
    targets: Vec<f64>,
    dim: usize,
}

impl TrainingSet {
    pub fn new<E: Labeled>(examples: &[E], vocab: &FeatureVocabulary) -> Self {
        let rows = examples
            .iter()
            .map(|e| {
                e.features()
                    .iter()
                    .filter_map(|(id, v)| vocab.index_of(id).map(|i| (i, v)))
                    .collect()
            })
            .collect();
        let targets = examples.iter().map(|e| e.label().target()).collect();
        Self {
            rows,
            targets,
            dim: vocab.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positive_rate(&self) -> f64 {
        self.targets.iter().sum::<f64>() / self.targets.len() as f64
    }

    fn margin(&self, row: usize, weights: &[f64], intercept: f64) -> f64 {
        self.rows[row]
            .iter()
            .map(|&(i, v)| weights[i] * v)
            .sum::<f64>()
            + intercept
    }

    pub fn predict(&self, row: usize, weights: &[f64], intercept: f64) -> f64 {
        sigmoid(self.margin(row, weights, intercept))
    }

    /// Mean negative log-likelihood plus `λ/2 · ‖w‖²`; the intercept is not
    /// penalized.
    pub fn objective(&self, weights: &[f64], intercept: f64, l2_lambda: f64) -> f64 {
        let nll = (0..self.len())
            .map(|r| {
                let z = self.margin(r, weights, intercept);
                softplus(z) - self.targets[r] * z
            })
            .sum::<f64>()
            / self.len() as f64;
        nll + 0.5 * l2_lambda * weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Gradient of [`Self::objective`] restricted to `batch` (all rows when
    /// `None`): `(∂/∂w, ∂/∂intercept)`.
    pub fn gradient(
        &self,
        weights: &[f64],
        intercept: f64,
        l2_lambda: f64,
        batch: Option<&[usize]>,
    ) -> (Vec<f64>, f64) {
        let all: Vec<usize>;
        let batch = match batch {
            Some(b) => b,
            None => {
                all = (0..self.len()).collect();
                &all
            }
        };
        let mut grad: Vec<f64> = weights.iter().map(|w| l2_lambda * w).collect();
        let mut grad_b = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for &r in batch {
            let err = (self.predict(r, weights, intercept) - self.targets[r]) * scale;
            for &(i, v) in &self.rows[r] {
                grad[i] += err * v;
            }
            grad_b += err;
        }
        (grad, grad_b)
    }
}

pub fn train_logreg<E: Labeled>(
    examples: &[E],
    vocab: &FeatureVocabulary,
    params: LogRegParams,
) -> Result<ScorerModel, ScorerError> {
    let has = |l: Label| examples.iter().any(|e| e.label() == l);
    if !has(Label::Positive) || !has(Label::Negative) {
        return Err(ScorerError::DegenerateLabels);
    }
    let data = TrainingSet::new(examples, vocab);
    let (weights, intercept) = fit(&data, params)?;
    Ok(ScorerModel {
        weights: vocab.ids().iter().cloned().zip(weights).collect(),
        intercept,
        vocabulary_hash: vocab.checksum(),
        hyperparams: params,
    })
}

/// Mini-batch gradient descent over a shuffled order that is reshuffled every
/// epoch. Deterministic for a fixed seed.
pub fn fit(data: &TrainingSet, params: LogRegParams) -> Result<(Vec<f64>, f64), ScorerError> {
    let mut weights = vec![0.0; data.dim()];
    let mut intercept = 0.0;
    if params.epochs == 0 || data.is_empty() {
        return Ok((weights, intercept));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut previous = data.objective(&weights, intercept, params.l2_lambda);
    let batch_size = params.batch_size.max(1);

    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            let (grad, grad_b) = data.gradient(&weights, intercept, params.l2_lambda, Some(batch));
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= params.learning_rate * g;
            }
            intercept -= params.learning_rate * grad_b;
        }
        let loss = data.objective(&weights, intercept, params.l2_lambda);
        if !loss.is_finite() {
            return Err(ScorerError::NonFiniteLoss(epoch));
        }
        log::debug!("epoch {epoch}: objective {loss:.6}");
        if (previous - loss).abs() < params.tolerance {
            break;
        }
        previous = loss;
    }
    Ok((weights, intercept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ClickEvent, ClickKind, Document};

    fn list(v: Vertical, n: usize) -> VerticalResultList {
        VerticalResultList {
            vertical: v,
            results: (0..n)
                .map(|i| {
                    ScoredDoc::new(
                        Document::new(format!("{v}-{i}"), v, "t").unwrap(),
                        (n - i) as f64,
                    )
                    .unwrap()
                })
                .collect(),
        }
    }

    fn entry(n_items: usize, clicks: &[usize]) -> ClickLogEntry {
        let results = BTreeMap::from([(Vertical::Jobs, list(Vertical::Jobs, n_items))]);
        let serp = randomize_serp("q", "m", &results, BlockLayout::default(), 1).unwrap();
        ClickLogEntry {
            serp,
            clicks: clicks
                .iter()
                .map(|&p| ClickEvent {
                    position: p,
                    click_kind: ClickKind::ResultClick,
                    timestamp: 0,
                })
                .collect(),
        }
    }

    fn split(labels: &[(usize, Label)]) -> (Vec<usize>, Vec<usize>) {
        let pos = labels
            .iter()
            .filter(|l| l.1 == Label::Positive)
            .map(|l| l.0)
            .collect();
        let neg = labels
            .iter()
            .filter(|l| l.1 == Label::Negative)
            .map(|l| l.0)
            .collect();
        (pos, neg)
    }

    #[test]
    fn skip_above_single_click() {
        let (pos, neg) = split(&skip_above_labels(&entry(4, &[2])));
        assert_eq!(pos, [2]);
        assert_eq!(neg, [0, 1]);
    }

    #[test]
    fn skip_above_no_clicks() {
        assert!(skip_above_labels(&entry(4, &[])).is_empty());
    }

    #[test]
    fn skip_above_two_clicks() {
        let (pos, neg) = split(&skip_above_labels(&entry(4, &[0, 2])));
        assert_eq!(pos, [0, 2]);
        assert_eq!(neg, [1]);
    }

    #[test]
    fn singleton_vertical_is_primary() {
        let results = BTreeMap::from([
            (Vertical::Jobs, list(Vertical::Jobs, 3)),
            (Vertical::People, list(Vertical::People, 0)),
        ]);
        let serp = randomize_serp("q", "m", &results, BlockLayout::default(), 9).unwrap();
        assert_eq!(serp.primary_vertical, Vertical::Jobs);
        assert_eq!(serp.items.len(), 3);
        assert!(serp.randomized);
    }

    #[test]
    fn randomize_is_deterministic_and_order_preserving() {
        let results: BTreeMap<_, _> = [Vertical::Jobs, Vertical::People, Vertical::Groups]
            .into_iter()
            .map(|v| (v, list(v, 5)))
            .collect();
        let a = randomize_serp("q", "m", &results, BlockLayout::default(), 42).unwrap();
        let b = randomize_serp("q", "m", &results, BlockLayout::default(), 42).unwrap();
        assert_eq!(a, b);
        assert!(a.preserves_primary_order(&results[&a.primary_vertical].results));
        assert!(a.blocks_are_valid());
        assert_eq!(a.items.len(), 7);
    }

    #[test]
    fn randomize_needs_an_eligible_vertical() {
        let results = BTreeMap::from([(Vertical::Jobs, list(Vertical::Jobs, 0))]);
        assert_eq!(
            randomize_serp("q", "m", &results, BlockLayout::default(), 0),
            Err(ScorerError::NoEligibleVertical)
        );
    }

    #[test]
    fn score_closed_forms() {
        let vocab = FeatureVocabulary::new(["a".to_string()]);
        let mut model = ScorerModel::zero(&vocab, LogRegParams::default());
        assert_eq!(score(&model, &FeatureVector::new()), 0.5);

        model.weights.insert("a".into(), 2.0);
        model.intercept = -3.0;
        let fv = FeatureVector::new().with("a", 1.0);
        approx::assert_abs_diff_eq!(
            score(&model, &fv),
            1.0 / (1.0 + 1f64.exp()),
            epsilon = 1e-12
        );
        approx::assert_abs_diff_eq!(score(&model, &fv), 0.26894, epsilon = 1e-5);

        let extra = fv.clone().with("not-in-vocab", 5.0);
        assert_eq!(score(&model, &extra), score(&model, &fv));
    }

    #[test]
    fn degenerate_and_zero_epoch_training() {
        let vocab = FeatureVocabulary::new(["a".to_string()]);
        let only_pos = vec![(FeatureVector::new().with("a", 1.0), Label::Positive)];
        assert_eq!(
            train_logreg(&only_pos, &vocab, LogRegParams::default()),
            Err(ScorerError::DegenerateLabels)
        );
        let both = vec![
            (FeatureVector::new().with("a", 1.0), Label::Positive),
            (FeatureVector::new().with("a", -1.0), Label::Negative),
        ];
        let model = train_logreg(
            &both,
            &vocab,
            LogRegParams {
                epochs: 0,
                ..LogRegParams::default()
            },
        )
        .unwrap();
        assert_eq!(model.weights["a"], 0.0);
        assert_eq!(model.score(&both[0].0), 0.5);
    }

    #[test]
    fn weight_signs_follow_labels() {
        let vocab = FeatureVocabulary::new(["a".to_string(), "b".to_string()]);
        let data = vec![
            (FeatureVector::new().with("a", 1.0), Label::Positive),
            (FeatureVector::new().with("b", 1.0), Label::Negative),
        ];
        let model = train_logreg(&data, &vocab, LogRegParams::default()).unwrap();
        assert!(model.weights["a"] > 0.0);
        assert!(model.weights["b"] < 0.0);
    }

    #[test]
    fn exploding_learning_rate_is_reported() {
        let vocab = FeatureVocabulary::new(["a".to_string()]);
        let data = vec![
            (FeatureVector::new().with("a", 1e300), Label::Positive),
            (FeatureVector::new().with("a", -1e300), Label::Negative),
        ];
        let params = LogRegParams {
            learning_rate: 1e10,
            ..LogRegParams::default()
        };
        assert!(matches!(
            train_logreg(&data, &vocab, params),
            Err(ScorerError::NonFiniteLoss(_))
        ));
    }
}
