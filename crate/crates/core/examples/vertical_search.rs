//! BM25 retrieval over a single vertical, then fan-out across all of them.
//!
//! ```bash
//! cargo run -p fedsearch --example vertical_search -- "data science"
//! ```

use fedsearch::simulation::{generate_world, WorldConfig};
use fedsearch::vertical::{block_score, VerticalIndexes};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let query = std::env::args().nth(1).unwrap_or_else(|| "software engineer".into());
    let world = generate_world(&WorldConfig {
        n_members: 10,
        docs_per_vertical: 500,
        ..WorldConfig::default()
    });
    let indexes = VerticalIndexes::build(&world.corpora)?;

    for (vertical, list) in indexes.fan_out(&query, 5)? {
        if list.is_empty() {
            println!("{vertical:<13} (no match)");
            continue;
        }
        println!("{vertical:<13} block score {:.3}", block_score(&list, 3)?);
        for hit in &list.results {
            println!("    {:>7.3}  {:<14} {}", hit.base_score, hit.doc.doc_id, hit.doc.text);
        }
    }
    Ok(())
}
