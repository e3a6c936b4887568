mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use fedsearch::domain::{ActivityEvent, ActivityKind};
use fedsearch::features::{mine_keyword_intent, KeywordIntentConfig};
use fedsearch::intent::{extract_intent_signals, train_intent_model, IntentConfig, SECONDS_PER_DAY};
use fedsearch::simulation::{generate_world, run_ab, simulate_session, ClickModelParams, LatentMember, WorldConfig};
use fedsearch::vertical::VerticalIndexes;
use fedsearch::{
    federated_search, BaselineScorer, FederatedEngine, FederationConfig, Intent, Member, RankedItem,
    ResultCategory, ScoredDoc, Serp, Vertical,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn serp(n: usize) -> Serp {
    Serp {
        serp_id: "s".into(),
        query: "q".into(),
        member_id: "m".into(),
        primary_vertical: Vertical::People,
        items: (0..n)
            .map(|i| {
                RankedItem::individual(
                    ScoredDoc::new(support::doc(&format!("p{i}"), Vertical::People), 1.0).unwrap(),
                )
            })
            .collect(),
        randomized: false,
    }
}

fn always_click(gamma: f64) -> ClickModelParams {
    ClickModelParams {
        gamma,
        base_click_prob: ResultCategory::all().map(|c| (c, 1.0)).collect(),
        ..ClickModelParams::default()
    }
}

fn searcher() -> LatentMember {
    LatentMember {
        member: Member::new("m", "analyst", "retail", vec![]),
        true_intents: BTreeSet::new(),
    }
}

proptest! {
    /// With every examined item clicked, the clicks are exactly the examined
    /// prefix of the page.
    #[test]
    fn cascade_clicks_form_a_prefix(seed in any::<u64>(), n in 1usize..15, gamma in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entry = simulate_session(&searcher(), &serp(n), &always_click(gamma), 0, &mut rng);
        let positions: Vec<usize> = entry.clicks.iter().map(|c| c.position).collect();
        prop_assert!(!positions.is_empty());
        prop_assert_eq!(positions.clone(), (0..positions.len()).collect::<Vec<_>>());
        prop_assert!(entry.validate().is_ok());
    }
}

#[test]
fn examination_depth_is_geometric() {
    let gamma = 0.7;
    let params = always_click(gamma);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let page = serp(30);
    let trials = 20_000;
    let mut reached = [0usize; 4];
    for _ in 0..trials {
        let depth = simulate_session(&searcher(), &page, &params, 0, &mut rng).clicks.len();
        for (i, r) in reached.iter_mut().enumerate() {
            *r += usize::from(depth > i);
        }
    }
    for (i, &r) in reached.iter().enumerate() {
        let want = gamma.powi(i as i32);
        let got = r as f64 / trials as f64;
        let se = (want * (1.0 - want) / trials as f64).sqrt().max(1e-9);
        assert!((got - want).abs() <= 4.0 * se, "depth {i}: {got} vs {want}");
    }
}

fn active_member(kind: ActivityKind, count: u64, now: u64) -> Member {
    let events = (0..count)
        .map(|i| ActivityEvent {
            kind,
            timestamp: now - (i % 20 + 1) * SECONDS_PER_DAY,
        })
        .collect();
    Member::new("x", "engineer", "software", events)
}

#[test]
fn intent_scores_rise_with_their_signal() {
    let world = generate_world(&WorldConfig {
        n_members: 2000,
        docs_per_vertical: 50,
        n_queries: 20,
        seed: 13,
        ..WorldConfig::default()
    });
    let config = IntentConfig::default();
    let labeled: Vec<_> = world
        .population
        .iter()
        .map(|l| (l.member.clone(), l.true_intents.clone()))
        .collect();
    let model = train_intent_model(&labeled, world.now, &config).unwrap();

    let curve = |kind, intent: &Intent| -> Vec<f64> {
        (0..6)
            .map(|c| {
                let signals = extract_intent_signals(&active_member(kind, c * 3, world.now), world.now, &config);
                model.scores(&signals)[intent]
            })
            .collect()
    };
    for (kind, intent) in [
        (ActivityKind::JobSearch, Intent::JOB_SEEKING),
        (ActivityKind::ContentView, Intent::CONTENT_CONSUMING),
        (ActivityKind::ProfileView, Intent::HIRING),
    ] {
        let s = curve(kind, &intent);
        assert!(s.windows(2).all(|w| w[1] > w[0]), "{intent} vs {kind:?}: {s:?}");
    }

    let plain = extract_intent_signals(&Member::new("a", "engineer", "software", vec![]), world.now, &config);
    let recruiter = extract_intent_signals(&Member::new("b", "Senior Recruiter", "software", vec![]), world.now, &config);
    assert!(model.scores(&recruiter)[&Intent::HIRING] > model.scores(&plain)[&Intent::HIRING]);
}

#[test]
fn activity_outside_the_window_is_ignored() {
    let now = 1_700_000_000;
    let config = IntentConfig::default();
    let old = Member::new(
        "o",
        "engineer",
        "software",
        vec![ActivityEvent {
            kind: ActivityKind::JobSearch,
            timestamp: now - (config.window_days + 1) * SECONDS_PER_DAY,
        }],
    );
    assert_eq!(extract_intent_signals(&old, now, &config).recent_job_searches, 0);
}

/// Tiny world with hand-picked member intents; the learned scorer is
/// replaced by a rule that rewards what each intent prefers.
struct PrefersIntent;

impl fedsearch::ItemScorer for PrefersIntent {
    fn score_item(&self, _query: &str, member: &Member, item: &RankedItem) -> f64 {
        let favored = ClickModelParams::default().prefers(&member.active_intents, item.vertical());
        item.base_signal() * if favored { 10.0 } else { 1.0 }
    }
}

#[test]
fn searcher_intent_changes_the_page() {
    let world = generate_world(&WorldConfig {
        n_members: 200,
        docs_per_vertical: 200,
        n_queries: 40,
        seed: 21,
        ..WorldConfig::default()
    });
    let indexes = VerticalIndexes::build(&world.corpora).unwrap();
    let config = FederationConfig::default();
    let with = |intent: Intent| {
        Member::new(intent.as_str(), "engineer", "software", vec![])
            .with_intents(BTreeMap::from([(intent, 1.0)]), 0.5)
    };
    let seeker = with(Intent::JOB_SEEKING);
    let hirer = with(Intent::HIRING);

    let mut differing = 0;
    for query in &world.queries {
        let (Ok(a), Ok(b)) = (
            federated_search(query, &seeker, &indexes, &PrefersIntent, config),
            federated_search(query, &hirer, &indexes, &PrefersIntent, config),
        ) else {
            continue;
        };
        assert_eq!(a.query, b.query);
        assert!(a.blocks_are_valid() && b.blocks_are_valid());
        let again = federated_search(query, &seeker, &indexes, &PrefersIntent, config).unwrap();
        assert_eq!(a, again);
        if a.primary_vertical == Vertical::Jobs {
            assert_ne!(b.primary_vertical, Vertical::Jobs, "{query}");
        }
        differing += usize::from(a.items != b.items);
    }
    assert!(differing * 2 > world.queries.len(), "{differing}/{}", world.queries.len());
}

#[test]
fn single_vertical_query_has_no_blocks() {
    let mut corpora = BTreeMap::new();
    corpora.insert(Vertical::People, vec![support::doc("a", Vertical::People)]);
    corpora.insert(
        Vertical::Jobs,
        vec![fedsearch::Document::new("j", Vertical::Jobs, "warehouse forklift").unwrap()],
    );
    let indexes = VerticalIndexes::build(&corpora).unwrap();
    let scorer = BaselineScorer {
        table: mine_keyword_intent(&[], KeywordIntentConfig::default()),
    };
    let member = Member::new("m", "engineer", "software", vec![]);
    let serp =
        federated_search("software", &member, &indexes, &scorer, FederationConfig::default()).unwrap();
    assert_eq!(serp.primary_vertical, Vertical::People);
    assert!(serp.items.iter().all(|i| !i.is_block()));
    assert!(federated_search("nothing", &member, &indexes, &scorer, FederationConfig::default()).is_err());
}

#[test]
fn ab_assignment_is_deterministic() {
    let world = generate_world(&WorldConfig {
        n_members: 100,
        docs_per_vertical: 80,
        n_queries: 20,
        seed: 4,
        ..WorldConfig::default()
    });
    let indexes = Arc::new(VerticalIndexes::build(&world.corpora).unwrap());
    let engine = FederatedEngine::new(
        indexes,
        BaselineScorer {
            table: mine_keyword_intent(&[], KeywordIntentConfig::default()),
        },
        FederationConfig::default(),
    );
    let params = ClickModelParams::default();
    let a = run_ab(&world, &engine, &engine, &params, 800, 9).unwrap();
    let b = run_ab(&world, &engine, &engine, &params, 800, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.control.searches + a.treatment.searches, 800);
    let share = a.treatment.searches as f64 / 800.0;
    assert!((share - 0.5).abs() < 0.06, "{share}");
}
