//! Collects randomized-SERP click logs and mines p(category | query) from them.
//!
//! ```bash
//! cargo run --release -p fedsearch --example keyword_intent
//! ```

use fedsearch::pipeline::{self, PipelineConfig};
use fedsearch::simulation::{generate_world, WorldConfig};
use fedsearch::vertical::VerticalIndexes;
use fedsearch::ResultCategory;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig {
        world: WorldConfig {
            n_members: 1000,
            docs_per_vertical: 400,
            n_queries: 100,
            ..WorldConfig::default()
        },
        collect_searches: 10_000,
        ..PipelineConfig::default()
    };
    let mut world = generate_world(&config.world);
    let indexes = VerticalIndexes::build(&world.corpora)?;
    let intent_model = pipeline::fit_intent_model(&world, &config.intent)?;
    world.refresh_intents(&intent_model, &config.intent);

    let logs = pipeline::collect(&world, &indexes, &config)?;
    let table = pipeline::mine_kwint(&logs, config.kwint);
    println!(
        "{} impressions, {} head queries (>= {} item impressions)",
        logs.len(),
        table.per_query.len(),
        table.min_impressions
    );

    for query in world.queries.iter().take(3) {
        println!("\n{query}");
        let mut ranked: Vec<(ResultCategory, f64)> = ResultCategory::all()
            .map(|c| (c, table.probability(query, c)))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        for (c, p) in ranked.iter().take(5) {
            println!("    {c:<24} {p:.3}");
        }
    }
    Ok(())
}
