//! Synthetic world, cascade click model and A/B harness.
//!
//! Members carry hidden ground-truth intents; their profiles and activity are
//! sampled conditionally on those intents so the intent engine has something
//! real (but noisy) to recover. Clicks come from a cascade user who scans
//! top-down and is more likely to click verticals that match what they want.

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    category_map, category_of, ActivityEvent, ActivityKind, ClickEvent, ClickKind, ClickLogEntry,
    Document, Intent, Member, RankedItem, ResultCategory, Serp, Vertical,
};
use crate::federation::SearchPolicy;
use crate::intent::{batch_update, IntentConfig, IntentModel, SECONDS_PER_DAY};
use crate::scorer::{randomize_serp, BlockLayout};
use crate::vertical::VerticalIndexes;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("{0} arm has no searches")]
    EmptyArm(&'static str),
    #[error("world has no members")]
    NoMembers,
    #[error("world has no queries")]
    NoQueries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentMember {
    pub member: Member,
    pub true_intents: BTreeSet<Intent>,
}

/// How ground-truth intents are distributed over the population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntentMixture {
    /// Target marginal rate per intent.
    pub rates: BTreeMap<Intent, f64>,
    /// Share of members with no intent at all.
    pub none_share: f64,
}

impl Default for IntentMixture {
    fn default() -> Self {
        Self {
            rates: BTreeMap::from([
                (Intent::JOB_SEEKING, 0.30),
                (Intent::HIRING, 0.20),
                (Intent::CONTENT_CONSUMING, 0.40),
            ]),
            none_share: 0.25,
        }
    }
}

impl IntentMixture {
    /// Members outside the no-intent share draw each intent independently at
    /// `rate / (1 - none_share)` and get at least one (picked by rate).
    fn sample(&self, rng: &mut impl Rng) -> BTreeSet<Intent> {
        let mut set = BTreeSet::new();
        if self.rates.is_empty() || rng.random::<f64>() < self.none_share {
            return set;
        }
        let scale = 1.0 / (1.0 - self.none_share).max(f64::EPSILON);
        for (intent, &rate) in &self.rates {
            if rng.random::<f64>() < (rate * scale).min(1.0) {
                set.insert(intent.clone());
            }
        }
        if set.is_empty() {
            let intents: Vec<_> = self.rates.keys().collect();
            if let Ok(w) = WeightedIndex::new(self.rates.values().map(|r| r.max(1e-12))) {
                set.insert(intents[w.sample(rng)].clone());
            }
        }
        set
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub n_members: usize,
    pub docs_per_vertical: usize,
    pub n_queries: usize,
    pub seed: u64,
    pub mixture: IntentMixture,
    /// The simulation clock, epoch seconds.
    pub now: u64,
    /// Zipf exponent of query popularity.
    pub query_zipf: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            n_members: 5000,
            docs_per_vertical: 2000,
            n_queries: 500,
            seed: 7,
            mixture: IntentMixture::default(),
            now: 1_700_000_000,
            query_zipf: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub now: u64,
    pub population: Vec<LatentMember>,
    pub corpora: BTreeMap<Vertical, Vec<Document>>,
    /// Ordered by popularity, most popular first.
    pub queries: Vec<String>,
    pub query_zipf: f64,
}

const TOPICS: [&str; 48] = [
    "software",
    "engineer",
    "data",
    "machine",
    "learning",
    "marketing",
    "sales",
    "design",
    "finance",
    "product",
    "cloud",
    "security",
    "nursing",
    "teaching",
    "leadership",
    "analytics",
    "python",
    "java",
    "devops",
    "startup",
    "accounting",
    "legal",
    "research",
    "mobile",
    "web",
    "ux",
    "blockchain",
    "operations",
    "logistics",
    "consulting",
    "healthcare",
    "energy",
    "retail",
    "media",
    "writing",
    "strategy",
    "biology",
    "robotics",
    "supply",
    "chain",
    "management",
    "customer",
    "success",
    "frontend",
    "backend",
    "statistics",
    "economics",
    "architecture",
];

const FIRST_NAMES: [&str; 16] = [
    "ana", "ben", "chen", "dara", "eli", "fatima", "gus", "hana", "ivan", "jo", "kemal", "lina",
    "mateo", "noor", "omar", "priya",
];
const LAST_NAMES: [&str; 12] = [
    "smith", "garcia", "kim", "okafor", "novak", "silva", "haddad", "ito", "berg", "rossi", "khan",
    "meyer",
];

const ORDINARY_TITLES: [&str; 10] = [
    "software engineer",
    "data analyst",
    "product manager",
    "account executive",
    "designer",
    "nurse",
    "teacher",
    "consultant",
    "marketing specialist",
    "operations lead",
];
const RECRUITER_TITLES: [&str; 4] = [
    "technical recruiter",
    "talent acquisition partner",
    "hiring manager",
    "senior sourcer",
];
const INDUSTRIES: [&str; 8] = [
    "software",
    "finance",
    "healthcare",
    "education",
    "retail",
    "energy",
    "media",
    "consulting",
];

/// Vertical texture: filler vocabulary, length range and the share of the
/// topic list the vertical covers.
fn vertical_profile(v: Vertical) -> (&'static [&'static str], (usize, usize), f64) {
    match v {
        Vertical::People => (
            &["profile", "experienced", "skilled", "professional"],
            (2, 5),
            1.0,
        ),
        Vertical::Jobs => (
            &[
                "job", "hiring", "role", "apply", "team", "remote", "salary", "benefits", "full",
                "time",
            ],
            (10, 24),
            1.0,
        ),
        Vertical::Companies => (
            &["company", "inc", "global", "solutions", "group"],
            (3, 8),
            0.6,
        ),
        Vertical::Universities => (
            &["university", "college", "school", "institute"],
            (3, 6),
            0.4,
        ),
        Vertical::Groups => (
            &["group", "community", "network", "members", "forum"],
            (3, 7),
            0.9,
        ),
        Vertical::Slideshows => (
            &["slides", "deck", "talk", "presentation", "overview"],
            (6, 14),
            0.8,
        ),
        Vertical::Posts => (
            &[
                "post", "thoughts", "today", "learned", "sharing", "article", "my", "week",
            ],
            (8, 30),
            1.0,
        ),
    }
}

fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    (1..=n).map(|r| 1.0 / (r as f64).powf(s)).collect()
}

fn generate_corpus(v: Vertical, n_docs: usize, rng: &mut ChaCha8Rng) -> Vec<Document> {
    let (filler, (min_len, max_len), coverage) = vertical_profile(v);
    let mut topics: Vec<&str> = TOPICS.to_vec();
    // each vertical ranks topic popularity differently and covers a subset
    for i in (1..topics.len()).rev() {
        topics.swap(i, rng.random_range(0..=i));
    }
    topics.truncate(((TOPICS.len() as f64) * coverage).ceil() as usize);
    let topic_dist = WeightedIndex::new(zipf_weights(topics.len(), 0.8)).expect("non-empty");

    (0..n_docs)
        .map(|i| {
            let doc_id = format!("{}-{i:05}", v.as_str().to_lowercase());
            if v == Vertical::People && rng.random::<f64>() < 0.3 {
                let name = format!(
                    "{} {}",
                    FIRST_NAMES.choose(rng).expect("names"),
                    LAST_NAMES.choose(rng).expect("names")
                );
                return Document::new(doc_id, v, name)
                    .expect("non-empty")
                    .name_doc();
            }
            let len = rng.random_range(min_len..=max_len);
            let n_topics = rng.random_range(1..=3usize);
            let mut terms: Vec<&str> = (0..n_topics)
                .map(|_| topics[topic_dist.sample(rng)])
                .collect();
            while terms.len() < len {
                terms.push(filler.choose(rng).expect("filler"));
            }
            Document::new(doc_id, v, terms.join(" ")).expect("non-empty")
        })
        .collect()
}

fn poisson(rng: &mut ChaCha8Rng, rate: f64) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate)
        .map(|d| d.sample(rng) as u64)
        .unwrap_or(0)
}

fn generate_member(id: usize, truth: &BTreeSet<Intent>, now: u64, rng: &mut ChaCha8Rng) -> Member {
    let seeking = truth.contains(&Intent::JOB_SEEKING);
    let hiring = truth.contains(&Intent::HIRING);
    let content = truth.contains(&Intent::CONTENT_CONSUMING);

    let recruiter_title = rng.random::<f64>() < if hiring { 0.8 } else { 0.03 };
    let title = if recruiter_title {
        RECRUITER_TITLES.choose(rng)
    } else {
        ORDINARY_TITLES.choose(rng)
    }
    .expect("titles");

    // expected event counts inside the 28-day window
    let rates = [
        (ActivityKind::JobSearch, if seeking { 5.0 } else { 0.4 }),
        (ActivityKind::JobApply, if seeking { 2.5 } else { 0.15 }),
        (ActivityKind::ProfileView, if hiring { 6.0 } else { 1.5 }),
        (ActivityKind::ContentView, if content { 7.0 } else { 1.2 }),
        (ActivityKind::GroupJoin, if content { 1.2 } else { 0.2 }),
        (ActivityKind::PostPublish, if content { 0.8 } else { 0.2 }),
    ];
    let window = 28 * SECONDS_PER_DAY;
    let mut activities = Vec::new();
    for (kind, rate) in rates {
        for _ in 0..poisson(rng, rate) {
            activities.push(ActivityEvent {
                kind,
                timestamp: now - rng.random_range(0..window),
            });
        }
        // older history the window should ignore
        for _ in 0..poisson(rng, 1.5) {
            activities.push(ActivityEvent {
                kind,
                timestamp: now - rng.random_range(window + 1..3 * window),
            });
        }
    }

    let mut member = Member::new(
        format!("m{id:05}"),
        *title,
        *INDUSTRIES.choose(rng).expect("industries"),
        activities,
    );
    let student = rng.random::<f64>() < if seeking { 0.35 } else { 0.08 };
    if student {
        let months = if seeking || rng.random::<f64>() < 0.2 {
            rng.random_range(1..=12)
        } else {
            rng.random_range(13..=48)
        };
        member = member.with_student(Some(months));
    }
    member
}

fn generate_queries(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut pool: Vec<String> = TOPICS.iter().map(|t| t.to_string()).collect();
    for (i, a) in TOPICS.iter().enumerate() {
        for b in &TOPICS[i + 1..] {
            pool.push(format!("{a} {b}"));
        }
    }
    for i in (1..pool.len()).rev() {
        pool.swap(i, rng.random_range(0..=i));
    }
    pool.truncate(n);
    pool
}

pub fn generate_world(config: &WorldConfig) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let corpora = Vertical::ALL
        .into_iter()
        .map(|v| (v, generate_corpus(v, config.docs_per_vertical, &mut rng)))
        .collect();
    let population = (0..config.n_members)
        .map(|i| {
            let true_intents = config.mixture.sample(&mut rng);
            let member = generate_member(i, &true_intents, config.now, &mut rng);
            LatentMember {
                member,
                true_intents,
            }
        })
        .collect();
    let queries = generate_queries(config.n_queries, &mut rng);
    World {
        now: config.now,
        population,
        corpora,
        queries,
        query_zipf: config.query_zipf,
    }
}

impl World {
    /// Replaces every member's inferred intents (the daily batch refresh).
    pub fn refresh_intents(&mut self, model: &IntentModel, config: &IntentConfig) {
        let members: Vec<Member> = self.population.iter().map(|l| l.member.clone()).collect();
        for (latent, updated) in self
            .population
            .iter_mut()
            .zip(batch_update(&members, model, self.now, config))
        {
            latent.member = updated;
        }
    }

    pub fn member_index(&self) -> BTreeMap<&str, &LatentMember> {
        self.population
            .iter()
            .map(|l| (l.member.member_id.as_str(), l))
            .collect()
    }

    fn traffic(&self) -> Result<Traffic<'_>, SimulationError> {
        if self.population.is_empty() {
            return Err(SimulationError::NoMembers);
        }
        if self.queries.is_empty() {
            return Err(SimulationError::NoQueries);
        }
        Ok(Traffic {
            world: self,
            query_dist: WeightedIndex::new(zipf_weights(self.queries.len(), self.query_zipf))
                .expect("non-empty"),
        })
    }
}

/// Draws (member, query) pairs: members uniformly, queries by popularity.
struct Traffic<'w> {
    world: &'w World,
    query_dist: WeightedIndex<f64>,
}

impl<'w> Traffic<'w> {
    fn draw(&self, rng: &mut ChaCha8Rng) -> (&'w LatentMember, &'w str) {
        let member = &self.world.population[rng.random_range(0..self.world.population.len())];
        let query = &self.world.queries[self.query_dist.sample(rng)];
        (member, query)
    }
}

/// Independent stream per search so results do not depend on iteration order.
fn search_rng(seed: u64, search: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(search);
    rng
}

/// People results draw clicks from everyone, so People is the usual primary
/// vertical; other verticals only compete when the searcher is drawn to them.
pub const PEOPLE_BASE_CLICK_PROB: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClickModelParams {
    /// Probability of examining the next item after each examined item.
    pub gamma: f64,
    #[serde(with = "category_map")]
    pub base_click_prob: BTreeMap<ResultCategory, f64>,
    pub intent_boost: f64,
    /// Share of block clicks that land on the header.
    pub header_click_share: f64,
    /// Verticals each true intent is drawn to.
    pub preferences: BTreeMap<Intent, BTreeSet<Vertical>>,
}

impl Default for ClickModelParams {
    fn default() -> Self {
        Self {
            gamma: 0.7,
            base_click_prob: ResultCategory::all()
                .map(|c| {
                    (
                        c,
                        if c.vertical == Vertical::People {
                            PEOPLE_BASE_CLICK_PROB
                        } else {
                            0.05
                        },
                    )
                })
                .collect(),
            intent_boost: 4.0,
            header_click_share: 0.3,
            preferences: BTreeMap::from([
                (Intent::JOB_SEEKING, BTreeSet::from([Vertical::Jobs])),
                (Intent::HIRING, BTreeSet::from([Vertical::People])),
                (
                    Intent::CONTENT_CONSUMING,
                    BTreeSet::from([Vertical::Slideshows, Vertical::Posts, Vertical::Groups]),
                ),
            ]),
        }
    }
}

impl ClickModelParams {
    pub fn prefers(&self, true_intents: &BTreeSet<Intent>, vertical: Vertical) -> bool {
        true_intents
            .iter()
            .filter_map(|i| self.preferences.get(i))
            .any(|vs| vs.contains(&vertical))
    }

    pub fn click_probability(&self, true_intents: &BTreeSet<Intent>, item: &RankedItem) -> f64 {
        let category = category_of(item);
        let base = self.base_click_prob.get(&category).copied().unwrap_or(0.0);
        let boost = if self.prefers(true_intents, category.vertical) {
            self.intent_boost
        } else {
            1.0
        };
        (base * boost).clamp(0.0, 1.0)
    }
}

/// One cascade session over `serp`. Items are examined top-down; after each
/// examined item the user continues with probability `gamma`.
pub fn simulate_session(
    member: &LatentMember,
    serp: &Serp,
    params: &ClickModelParams,
    start_time: u64,
    rng: &mut impl Rng,
) -> ClickLogEntry {
    let mut clicks = Vec::new();
    for (position, item) in serp.items.iter().enumerate() {
        if rng.random::<f64>() < params.click_probability(&member.true_intents, item) {
            let click_kind = if item.is_block() && rng.random::<f64>() < params.header_click_share {
                ClickKind::HeaderClick
            } else {
                ClickKind::ResultClick
            };
            clicks.push(ClickEvent {
                position,
                click_kind,
                timestamp: start_time + position as u64,
            });
        }
        if rng.random::<f64>() >= params.gamma {
            break;
        }
    }
    ClickLogEntry {
        serp: serp.clone(),
        clicks,
    }
}

/// Randomization-experiment traffic: every search gets a randomized SERP.
pub fn collect_randomized(
    world: &World,
    indexes: &VerticalIndexes,
    k: usize,
    layout: BlockLayout,
    params: &ClickModelParams,
    n_searches: usize,
    seed: u64,
) -> Result<Vec<ClickLogEntry>, SimulationError> {
    let traffic = world.traffic()?;
    let mut logs = Vec::with_capacity(n_searches);
    for i in 0..n_searches as u64 {
        let mut rng = search_rng(seed, i);
        let (member, query) = traffic.draw(&mut rng);
        let Ok(results) = indexes.fan_out(query, k) else {
            continue;
        };
        let Ok(serp) = randomize_serp(
            query,
            &member.member.member_id,
            &results,
            layout,
            rng.random(),
        ) else {
            continue;
        };
        logs.push(simulate_session(
            member,
            &serp,
            params,
            world.now + i,
            &mut rng,
        ));
    }
    Ok(logs)
}

/// Click counts for one arm. Rates are per search.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmMetrics {
    pub searches: u64,
    pub primary_clicks: u64,
    pub secondary_clicks: u64,
    pub switches: u64,
    pub searches_with_primary_click: u64,
    pub searches_with_secondary_click: u64,
    pub searches_with_switch: u64,
    /// Per-search sums of squared counts, for standard errors.
    pub primary_clicks_sq: u64,
    pub secondary_clicks_sq: u64,
    pub switches_sq: u64,
}

impl ArmMetrics {
    pub fn from_logs(logs: &[ClickLogEntry]) -> Self {
        let mut m = ArmMetrics::default();
        for entry in logs {
            let (mut primary, mut secondary, mut switches) = (0u64, 0u64, 0u64);
            for click in &entry.clicks {
                let Some(item) = entry.serp.items.get(click.position) else {
                    continue;
                };
                match (item.is_block(), click.click_kind) {
                    (false, ClickKind::ResultClick) => primary += 1,
                    (true, ClickKind::ResultClick) => secondary += 1,
                    (true, ClickKind::HeaderClick) => switches += 1,
                    (false, ClickKind::HeaderClick) => {}
                }
            }
            m.searches += 1;
            m.primary_clicks += primary;
            m.secondary_clicks += secondary;
            m.switches += switches;
            m.primary_clicks_sq += primary * primary;
            m.secondary_clicks_sq += secondary * secondary;
            m.switches_sq += switches * switches;
            m.searches_with_primary_click += u64::from(primary > 0);
            m.searches_with_secondary_click += u64::from(secondary > 0);
            m.searches_with_switch += u64::from(switches > 0);
        }
        m
    }

    fn rate(&self, clicks: u64) -> f64 {
        clicks as f64 / self.searches as f64
    }

    /// Variance of the per-search mean of a click count.
    fn rate_variance(&self, clicks: u64, sq: u64) -> f64 {
        let n = self.searches as f64;
        if n < 2.0 {
            return 0.0;
        }
        let mean = clicks as f64 / n;
        let sample_var = (sq as f64 - n * mean * mean) / (n - 1.0);
        sample_var.max(0.0) / n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub control_rate: f64,
    pub treatment_rate: f64,
    /// `(treatment - control) / control`; absent when the control rate is 0.
    pub lift: Option<f64>,
    /// Delta-method standard error of `lift`.
    pub lift_std_error: Option<f64>,
    /// Two-proportion z statistic on searches with at least one such click.
    pub z: f64,
    pub p_value: f64,
}

impl MetricComparison {
    fn new(
        control: &ArmMetrics,
        treatment: &ArmMetrics,
        clicks: impl Fn(&ArmMetrics) -> (u64, u64, u64),
    ) -> Self {
        let (c_clicks, c_sq, c_with) = clicks(control);
        let (t_clicks, t_sq, t_with) = clicks(treatment);
        let control_rate = control.rate(c_clicks);
        let treatment_rate = treatment.rate(t_clicks);
        let (lift, lift_std_error) = if control_rate > 0.0 {
            let var_c = control.rate_variance(c_clicks, c_sq);
            let var_t = treatment.rate_variance(t_clicks, t_sq);
            let var = var_t / control_rate.powi(2)
                + treatment_rate.powi(2) * var_c / control_rate.powi(4);
            (
                Some((treatment_rate - control_rate) / control_rate),
                Some(var.sqrt()),
            )
        } else {
            (None, None)
        };
        let (z, p_value) =
            two_proportion_z_test(c_with, control.searches, t_with, treatment.searches);
        Self {
            control_rate,
            treatment_rate,
            lift,
            lift_std_error,
            z,
            p_value,
        }
    }
}

/// Pooled two-proportion z-test, two-sided. Returns `(z, p)`; a degenerate
/// pooled proportion gives `(0, 1)`.
pub fn two_proportion_z_test(x1: u64, n1: u64, x2: u64, n2: u64) -> (f64, f64) {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1f + n2f);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    if se.is_nan() || se <= 0.0 {
        return (0.0, 1.0);
    }
    let z = (x2 as f64 / n2f - x1 as f64 / n1f) / se;
    let p = statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2);
    (z, p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbReport {
    pub control: ArmMetrics,
    pub treatment: ArmMetrics,
    pub primary_ctr: MetricComparison,
    pub secondary_ctr: MetricComparison,
    pub secondary_switches: MetricComparison,
}

pub fn compute_metrics(
    control_logs: &[ClickLogEntry],
    treatment_logs: &[ClickLogEntry],
) -> Result<AbReport, SimulationError> {
    let control = ArmMetrics::from_logs(control_logs);
    let treatment = ArmMetrics::from_logs(treatment_logs);
    if control.searches == 0 {
        return Err(SimulationError::EmptyArm("control"));
    }
    if treatment.searches == 0 {
        return Err(SimulationError::EmptyArm("treatment"));
    }
    let primary_ctr = MetricComparison::new(&control, &treatment, |m| {
        (
            m.primary_clicks,
            m.primary_clicks_sq,
            m.searches_with_primary_click,
        )
    });
    let secondary_ctr = MetricComparison::new(&control, &treatment, |m| {
        (
            m.secondary_clicks,
            m.secondary_clicks_sq,
            m.searches_with_secondary_click,
        )
    });
    let secondary_switches = MetricComparison::new(&control, &treatment, |m| {
        (m.switches, m.switches_sq, m.searches_with_switch)
    });
    Ok(AbReport {
        control,
        treatment,
        primary_ctr,
        secondary_ctr,
        secondary_switches,
    })
}

/// Splits simulated traffic between two policies by a seeded fair coin and
/// reports the three engagement metrics.
pub fn run_ab(
    world: &World,
    control: &dyn SearchPolicy,
    treatment: &dyn SearchPolicy,
    params: &ClickModelParams,
    n_searches: usize,
    seed: u64,
) -> Result<AbReport, SimulationError> {
    let traffic = world.traffic()?;
    let mut control_logs = Vec::new();
    let mut treatment_logs = Vec::new();
    for i in 0..n_searches as u64 {
        let mut rng = search_rng(seed, i);
        let to_treatment = rng.random::<bool>();
        let (member, query) = traffic.draw(&mut rng);
        let policy = if to_treatment { treatment } else { control };
        let Ok(serp) = policy.serve(query, &member.member) else {
            continue;
        };
        let entry = simulate_session(member, &serp, params, world.now + i, &mut rng);
        if to_treatment {
            treatment_logs.push(entry);
        } else {
            control_logs.push(entry);
        }
    }
    compute_metrics(&control_logs, &treatment_logs)
}
