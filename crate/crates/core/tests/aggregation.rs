mod support;

use fedsearch::{aggregate, RankedItem};
use proptest::prelude::*;
use support::{as_slots, blocks, carried_score, primary_docs, reference_merge, Slot};

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0.0f64..1.0, 1..=10),
        prop::collection::vec(0.0f64..1.0, 0..=6),
    )
}

proptest! {
    #[test]
    fn agrees_with_reference((p, c) in instance()) {
        let got = aggregate(&primary_docs(&p), blocks(&c), carried_score).unwrap();
        prop_assert_eq!(as_slots(&got), reference_merge(&p, &c));
    }

    #[test]
    fn primary_order_is_preserved((p, c) in instance()) {
        let got = aggregate(&primary_docs(&p), blocks(&c), carried_score).unwrap();
        let primaries: Vec<usize> = as_slots(&got)
            .into_iter()
            .filter_map(|s| match s { Slot::P(i) => Some(i), Slot::B(_) => None })
            .collect();
        prop_assert_eq!(primaries, (0..p.len()).collect::<Vec<_>>());
    }

    #[test]
    fn last_item_is_primary_and_blocks_are_unique((p, c) in instance()) {
        let got = aggregate(&primary_docs(&p), blocks(&c), carried_score).unwrap();
        prop_assert!(got.len() <= p.len() + c.len());
        prop_assert!(!got.last().unwrap().is_block());
        let mut seen: Vec<usize> = as_slots(&got)
            .into_iter()
            .filter_map(|s| match s { Slot::B(j) => Some(j), Slot::P(_) => None })
            .collect();
        let n = seen.len();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), n);
    }

    /// Every emitted block outscores (or ties) the primary after it; every
    /// dropped block is strictly below the last primary.
    #[test]
    fn emitted_and_dropped_blocks((p, c) in instance()) {
        let got = aggregate(&primary_docs(&p), blocks(&c), carried_score).unwrap();
        let scores: Vec<f64> = got.iter().map(carried_score).collect();
        for (i, item) in got.iter().enumerate() {
            if item.is_block() {
                let next = got[i..].iter().position(|x| !x.is_block()).unwrap() + i;
                prop_assert!(scores[i] >= scores[next]);
            }
        }
        let emitted: Vec<usize> = as_slots(&got)
            .into_iter()
            .filter_map(|s| match s { Slot::B(j) => Some(j), Slot::P(_) => None })
            .collect();
        let last = *p.last().unwrap();
        for (j, &s) in c.iter().enumerate() {
            if !emitted.contains(&j) {
                prop_assert!(s < last);
            }
        }
        let blocks_in_order: Vec<f64> = got
            .iter()
            .filter(|i| matches!(i, RankedItem::SecondaryBlock { .. }))
            .map(carried_score)
            .collect();
        prop_assert!(blocks_in_order.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn no_candidates_returns_primary_unchanged() {
    let p = [0.9, 0.5, 0.1];
    let got = aggregate(&primary_docs(&p), Vec::new(), carried_score).unwrap();
    assert_eq!(as_slots(&got), vec![Slot::P(0), Slot::P(1), Slot::P(2)]);
}

#[test]
fn empty_primary_is_an_error() {
    assert!(aggregate(&[], blocks(&[0.5]), carried_score).is_err());
}
