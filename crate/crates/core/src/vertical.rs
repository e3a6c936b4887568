//! Per-vertical inverted index and first-pass BM25 ranker.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Document, ScoredDoc, Vertical};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("document `{doc_id}` belongs to {found}, expected {expected}")]
    MixedVertical {
        doc_id: String,
        expected: Vertical,
        found: Vertical,
    },
    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),
    #[error("query has no terms")]
    EmptyQuery,
    #[error("block has no results")]
    EmptyBlock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc_id: String,
    pub term_frequency: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerticalIndex {
    pub vertical: Vertical,
    pub postings: BTreeMap<String, Vec<Posting>>,
    pub doc_lengths: BTreeMap<String, u32>,
    pub doc_count: usize,
    pub avg_doc_length: f64,
    pub documents: BTreeMap<String, Document>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerticalResultList {
    pub vertical: Vertical,
    pub results: Vec<ScoredDoc>,
}

impl VerticalResultList {
    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }
}

pub fn build_index(docs: &[Document], vertical: Vertical) -> Result<VerticalIndex, IndexError> {
    if docs.is_empty() {
        return Err(IndexError::EmptyCorpus);
    }
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_lengths = BTreeMap::new();
    let mut documents = BTreeMap::new();

    for doc in docs {
        if doc.vertical != vertical {
            return Err(IndexError::MixedVertical {
                doc_id: doc.doc_id.clone(),
                expected: vertical,
                found: doc.vertical,
            });
        }
        if documents.insert(doc.doc_id.clone(), doc.clone()).is_some() {
            return Err(IndexError::DuplicateDocId(doc.doc_id.clone()));
        }
        let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
        let mut len = 0u32;
        for term in doc.terms() {
            *tf.entry(term).or_default() += 1;
            len += 1;
        }
        doc_lengths.insert(doc.doc_id.clone(), len);
        for (term, term_frequency) in tf {
            postings.entry(term.to_string()).or_default().push(Posting {
                doc_id: doc.doc_id.clone(),
                term_frequency,
            });
        }
    }

    let doc_count = doc_lengths.len();
    let avg_doc_length =
        doc_lengths.values().map(|&l| f64::from(l)).sum::<f64>() / doc_count as f64;
    Ok(VerticalIndex {
        vertical,
        postings,
        doc_lengths,
        doc_count,
        avg_doc_length,
        documents,
    })
}

/// Distinct lowercase query terms in first-occurrence order.
pub fn query_terms(query: &str) -> Vec<String> {
    let mut terms: Vec<String> = Vec::new();
    for t in query.split_whitespace().map(str::to_lowercase) {
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    terms
}

impl VerticalIndex {
    pub fn idf(&self, term: &str) -> Option<f64> {
        let df = self.postings.get(term)?.len() as f64;
        let n = self.doc_count as f64;
        Some(((n - df + 0.5) / (df + 0.5) + 1.0).ln())
    }

    /// Top-`k` documents by BM25. Repeated query terms count once.
    pub fn search(&self, query: &str, k: usize) -> Result<VerticalResultList, IndexError> {
        let terms = query_terms(query);
        if terms.is_empty() {
            return Err(IndexError::EmptyQuery);
        }
        let mut scores: HashMap<&str, f64> = HashMap::new();
        for term in &terms {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let idf = self.idf(term).unwrap_or(0.0);
            for posting in list {
                let dl = f64::from(self.doc_lengths[&posting.doc_id]);
                let tf = f64::from(posting.term_frequency);
                let norm = BM25_K1 * (1.0 - BM25_B + BM25_B * dl / self.avg_doc_length);
                *scores.entry(posting.doc_id.as_str()).or_default() +=
                    idf * tf * (BM25_K1 + 1.0) / (tf + norm);
            }
        }
        let mut ranked: Vec<(&str, f64)> = scores.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(k);
        let results = ranked
            .into_iter()
            .map(|(id, score)| ScoredDoc {
                doc: self.documents[id].clone(),
                base_score: score,
            })
            .collect();
        Ok(VerticalResultList {
            vertical: self.vertical,
            results,
        })
    }
}

/// Mean base score of the first `min(m, len)` results.
pub fn block_score(results: &VerticalResultList, m: usize) -> Result<f64, IndexError> {
    let top = &results.results[..m.max(1).min(results.results.len())];
    if top.is_empty() {
        return Err(IndexError::EmptyBlock);
    }
    Ok(top.iter().map(|d| d.base_score).sum::<f64>() / top.len() as f64)
}

/// One index per vertical; verticals without a corpus are simply absent.
#[derive(Debug, Clone, Default)]
pub struct VerticalIndexes {
    indexes: BTreeMap<Vertical, VerticalIndex>,
}

impl VerticalIndexes {
    pub fn build(corpora: &BTreeMap<Vertical, Vec<Document>>) -> Result<Self, IndexError> {
        let indexes = corpora
            .iter()
            .filter(|(_, docs)| !docs.is_empty())
            .map(|(&v, docs)| build_index(docs, v).map(|idx| (v, idx)))
            .collect::<Result<_, _>>()?;
        Ok(Self { indexes })
    }

    pub fn from_indexes(indexes: impl IntoIterator<Item = VerticalIndex>) -> Self {
        Self {
            indexes: indexes.into_iter().map(|i| (i.vertical, i)).collect(),
        }
    }

    pub fn get(&self, vertical: Vertical) -> Option<&VerticalIndex> {
        self.indexes.get(&vertical)
    }

    pub fn iter(&self) -> impl Iterator<Item = &VerticalIndex> {
        self.indexes.values()
    }

    pub fn len(&self) -> usize {
        self.indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indexes.is_empty()
    }

    /// Sends the query to every vertical, top-`k` each. Verticals with no
    /// match come back with an empty list.
    pub fn fan_out(
        &self,
        query: &str,
        k: usize,
    ) -> Result<BTreeMap<Vertical, VerticalResultList>, IndexError> {
        self.indexes
            .iter()
            .map(|(&v, idx)| idx.search(query, k).map(|r| (v, r)))
            .collect()
    }
}
