//! Reference implementations and generators shared by the integration tests.
//! Nothing here calls into the code under test except to build inputs.

#![allow(dead_code)]

use fedsearch::{ClickEvent, ClickKind, ClickLogEntry, Document, RankedItem, ScoredDoc, SecondaryBlock, Serp, Vertical};
use rand::seq::SliceRandom;
use rand::Rng;

/// One output slot of a merge: a primary index or a block index into the
/// caller's candidate list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    P(usize),
    B(usize),
}

/// Literal transcription of the merge rule. At each output slot, look at the
/// next primary p and the best block c still unplaced: p goes first if
/// score(p) > score(c) or nothing is left, else c does. Stops after the last
/// primary; unplaced blocks are dropped.
pub fn reference_merge(primary: &[f64], blocks: &[f64]) -> Vec<Slot> {
    let mut remaining: Vec<usize> = (0..blocks.len()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < primary.len() {
        let best = remaining
            .iter()
            .copied()
            .max_by(|&a, &b| blocks[a].partial_cmp(&blocks[b]).unwrap());
        match best {
            Some(j) if blocks[j] >= primary[i] => {
                out.push(Slot::B(j));
                remaining.retain(|&x| x != j);
            }
            _ => {
                out.push(Slot::P(i));
                i += 1;
            }
        }
    }
    out
}

pub const SECONDARY: [Vertical; 6] = [
    Vertical::Jobs,
    Vertical::Companies,
    Vertical::Universities,
    Vertical::Groups,
    Vertical::Slideshows,
    Vertical::Posts,
];

pub fn doc(id: &str, vertical: Vertical) -> Document {
    Document::new(id, vertical, "software engineer").unwrap()
}

pub fn primary_docs(scores: &[f64]) -> Vec<ScoredDoc> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &s)| ScoredDoc::new(doc(&format!("p{i}"), Vertical::People), s).unwrap())
        .collect()
}

/// Block `j` belongs to `SECONDARY[j]` and carries its score in `block_score`.
pub fn blocks(scores: &[f64]) -> Vec<SecondaryBlock> {
    scores
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let v = SECONDARY[j];
            let d = ScoredDoc::new(doc(&format!("{v}-0"), v), 1.0).unwrap();
            SecondaryBlock::new(v, vec![d], s).unwrap()
        })
        .collect()
}

/// Score of an item as encoded by [`primary_docs`] / [`blocks`].
pub fn carried_score(item: &RankedItem) -> f64 {
    item.base_signal()
}

/// Maps aggregate output back to slots using the ids set by the builders.
pub fn as_slots(items: &[RankedItem]) -> Vec<Slot> {
    items
        .iter()
        .map(|item| match item {
            RankedItem::PrimaryIndividual { scored } => {
                Slot::P(scored.doc.doc_id[1..].parse().unwrap())
            }
            RankedItem::SecondaryBlock { vertical, .. } => {
                Slot::B(SECONDARY.iter().position(|v| v == vertical).unwrap())
            }
        })
        .collect()
}

/// `n` distinct scores in (0, 1), shuffled.
pub fn distinct_scores(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut grid: Vec<u32> = (1..1000).collect();
    grid.shuffle(rng);
    grid[..n].iter().map(|&g| f64::from(g) / 1000.0).collect()
}

/// Area under the ROC curve by pair counting (ties count half).
pub fn auc(scores: &[f64], positive: &[bool]) -> f64 {
    let pos: Vec<f64> = scores.iter().zip(positive).filter(|(_, &p)| p).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(positive).filter(|(_, &p)| !p).map(|(&s, _)| s).collect();
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

/// A random SERP of 1 to 12 items, about a quarter of them blocks, with
/// clicks drawn independently per position.
pub fn random_impression(rng: &mut impl Rng, id: usize) -> ClickLogEntry {
    let n_items = rng.random_range(1..=12);
    let items: Vec<RankedItem> = (0..n_items)
        .map(|i| {
            if i > 0 && rng.random_bool(0.25) {
                let v = SECONDARY[rng.random_range(0..SECONDARY.len())];
                let d = ScoredDoc::new(doc(&format!("b{i}"), v), 1.0).unwrap();
                SecondaryBlock::new(v, vec![d], 0.5).unwrap().into()
            } else {
                RankedItem::individual(
                    ScoredDoc::new(doc(&format!("p{i}"), Vertical::People), 1.0).unwrap(),
                )
            }
        })
        .collect();
    let mut clicks = Vec::new();
    for (pos, item) in items.iter().enumerate() {
        if rng.random_bool(0.2) {
            let click_kind = if item.is_block() && rng.random_bool(0.5) {
                ClickKind::HeaderClick
            } else {
                ClickKind::ResultClick
            };
            clicks.push(ClickEvent {
                position: pos,
                click_kind,
                timestamp: pos as u64,
            });
        }
    }
    ClickLogEntry {
        serp: Serp {
            serp_id: format!("s{id}"),
            query: "software engineer".into(),
            member_id: "m".into(),
            primary_vertical: Vertical::People,
            items,
            randomized: true,
        },
        clicks,
    }
}
