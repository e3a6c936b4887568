//! Vertical selection and block merging with a hand-made scorer, so every
//! number on the page is easy to follow.
//!
//! ```bash
//! cargo run -p fedsearch --example aggregation
//! ```

use std::collections::BTreeMap;

use fedsearch::federation::federate;
use fedsearch::vertical::VerticalResultList;
use fedsearch::{Document, FederationConfig, ItemScorer, Member, RankedItem, ScoredDoc, Vertical};

/// Base relevance, doubled for Jobs results.
struct FavorJobs;

impl ItemScorer for FavorJobs {
    fn score_item(&self, _query: &str, _member: &Member, item: &RankedItem) -> f64 {
        let boost = if item.vertical() == Vertical::Jobs { 2.0 } else { 1.0 };
        item.base_signal() * boost
    }
}

fn list(vertical: Vertical, scores: &[f64]) -> Result<VerticalResultList, fedsearch::domain::DomainError> {
    let results = scores
        .iter()
        .enumerate()
        .map(|(i, &s)| ScoredDoc::new(Document::new(format!("{vertical}-{i}"), vertical, "rust developer")?, s))
        .collect::<Result<_, _>>()?;
    Ok(VerticalResultList { vertical, results })
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let results: BTreeMap<Vertical, VerticalResultList> = [
        list(Vertical::People, &[3.0, 2.6, 2.2, 1.5, 1.1, 0.8])?,
        list(Vertical::Jobs, &[1.0, 0.9, 0.7])?,
        list(Vertical::Groups, &[1.8, 1.2])?,
        list(Vertical::Posts, &[0.4])?,
    ]
    .into_iter()
    .map(|l| (l.vertical, l))
    .collect();

    let member = Member::new("m1", "engineer", "software", vec![]);
    let serp = federate("rust developer", &member, &results, &FavorJobs, FederationConfig::default())?;
    println!("primary vertical: {}", serp.primary_vertical);
    for (pos, item) in serp.items.iter().enumerate() {
        match item {
            RankedItem::PrimaryIndividual { scored } => {
                println!("{pos:>2}  {:<10} {:.2}", scored.doc.doc_id, FavorJobs.score_item("", &member, item))
            }
            RankedItem::SecondaryBlock { vertical, docs, .. } => println!(
                "{pos:>2}  [{vertical} block, {} results] {:.2}",
                docs.len(),
                FavorJobs.score_item("", &member, item)
            ),
        }
    }
    Ok(())
}
