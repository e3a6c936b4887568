//! Labels randomized click logs with skip-above, trains the federated scorer
//! and prints the heaviest weights.
//!
//! ```bash
//! cargo run --release -p fedsearch --example train_scorer
//! ```

use fedsearch::pipeline::{self, PipelineConfig};
use fedsearch::scorer::Label;
use fedsearch::simulation::{generate_world, WorldConfig};
use fedsearch::vertical::VerticalIndexes;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig {
        world: WorldConfig {
            n_members: 2000,
            docs_per_vertical: 500,
            n_queries: 200,
            ..WorldConfig::default()
        },
        collect_searches: 15_000,
        ..PipelineConfig::default()
    };
    let mut world = generate_world(&config.world);
    let indexes = VerticalIndexes::build(&world.corpora)?;
    let intent_model = pipeline::fit_intent_model(&world, &config.intent)?;
    world.refresh_intents(&intent_model, &config.intent);
    let members: Vec<_> = world.population.iter().map(|l| l.member.clone()).collect();

    let logs = pipeline::collect(&world, &indexes, &config)?;
    let table = pipeline::mine_kwint(&logs, config.kwint);
    let examples = pipeline::training_examples(&logs, &members, &table);
    let positives = examples.iter().filter(|e| e.label == Label::Positive).count();
    println!("{} examples, {positives} positive", examples.len());

    let model = pipeline::train(&logs, &members, &table, &config)?;
    let mut weights: Vec<(&String, &f64)> = model.weights.iter().collect();
    weights.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    println!("intercept {:+.3}", model.intercept);
    for (id, w) in weights.iter().take(15) {
        println!("    {w:+.3}  {id}");
    }
    Ok(())
}
