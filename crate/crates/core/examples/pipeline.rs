//! Every offline step end to end, writing the same artifacts as the CLI.
//!
//! ```bash
//! cargo run --release -p fedsearch --example pipeline -- /tmp/fedsearch-run
//! ```

use std::path::PathBuf;

use fedsearch::pipeline::{self, PipelineConfig};
use fedsearch::simulation::WorldConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let workdir: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("fedsearch-pipeline"));
    let config = PipelineConfig {
        world: WorldConfig {
            n_members: 1500,
            docs_per_vertical: 400,
            n_queries: 120,
            ..WorldConfig::default()
        },
        // the scorer needs enough randomized impressions per query to learn from
        collect_searches: 30_000,
        ab_searches: 20_000,
        ..PipelineConfig::default()
    };
    let report = pipeline::run_all(&config, &workdir)?;
    println!("artifacts in {}", workdir.display());
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
