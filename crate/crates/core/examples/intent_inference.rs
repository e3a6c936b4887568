//! Trains the per-intent models on a synthetic population and scores a few
//! hand-written members.
//!
//! ```bash
//! cargo run -p fedsearch --example intent_inference
//! ```

use std::collections::BTreeSet;

use fedsearch::domain::{ActivityEvent, ActivityKind};
use fedsearch::intent::{infer_intents, train_intent_model, IntentConfig, SECONDS_PER_DAY};
use fedsearch::simulation::{generate_world, WorldConfig};
use fedsearch::{Intent, Member};

fn events(now: u64, kinds: &[(ActivityKind, u64)]) -> Vec<ActivityEvent> {
    kinds
        .iter()
        .flat_map(|&(kind, n)| {
            (0..n).map(move |i| ActivityEvent {
                kind,
                timestamp: now - (i + 1) * SECONDS_PER_DAY,
            })
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&WorldConfig {
        n_members: 3000,
        docs_per_vertical: 20,
        ..WorldConfig::default()
    });
    let config = IntentConfig::default();
    let labeled: Vec<(Member, BTreeSet<Intent>)> = world
        .population
        .iter()
        .map(|l| (l.member.clone(), l.true_intents.clone()))
        .collect();
    let model = train_intent_model(&labeled, world.now, &config)?;

    let now = world.now;
    let members = [
        Member::new("recruiter", "Technical Recruiter", "staffing", events(now, &[(ActivityKind::ProfileView, 12)])),
        Member::new("graduate", "student", "education", events(now, &[(ActivityKind::JobSearch, 8), (ActivityKind::JobApply, 3)]))
            .with_student(Some(4)),
        Member::new("reader", "product manager", "software", events(now, &[(ActivityKind::ContentView, 15), (ActivityKind::GroupJoin, 2)])),
        Member::new("quiet", "accountant", "finance", vec![]),
    ];
    for m in &members {
        let (scores, active) = infer_intents(m, &model, now, &config);
        let scores: Vec<String> = scores.iter().map(|(i, s)| format!("{i} {s:.2}")).collect();
        let active: Vec<&str> = active.iter().map(Intent::as_str).collect();
        println!("{:<10} {}  active: {active:?}", m.member_id, scores.join(", "));
    }
    Ok(())
}
