//! Builds the planted good/mediocre/bad summaries for a document and shows
//! which quality batches and highlight answers the protocol accepts.
//!
//! ```text
//! cargo run --example sanity_protocol -- 42
//! ```

use std::collections::BTreeMap;

use highres::protocol::{heuristic_sanity_question, make_sanity_summaries, validate_quality_batch, PlantTag};
use highres::text::{tokenize, TokenizerConfig};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let cfg = TokenizerConfig::default();
    let doc = tokenize(
        "The Harbor Trust bought the old mill in March. It plans to open a market there next year. \
         Neighbours welcomed the news at a meeting on Tuesday.",
        &cfg,
    );
    let reference = tokenize("Harbor Trust bought the old mill and will open a market.", &cfg);

    let triple = make_sanity_summaries(&doc, &reference, seed, &Default::default()).unwrap();
    for tag in [PlantTag::Good, PlantTag::Mediocre, PlantTag::Bad] {
        println!("{tag:>8}: {}", triple.get(tag).text);
    }

    println!();
    for (bad, mediocre, good) in [(10.0, 50.0, 90.0), (50.0, 50.0, 90.0), (90.0, 50.0, 10.0)] {
        let scores = BTreeMap::from([(PlantTag::Bad, bad), (PlantTag::Mediocre, mediocre), (PlantTag::Good, good)]);
        println!(
            "bad={bad:>4} mediocre={mediocre:>4} good={good:>4} -> {:?}",
            validate_quality_batch(&scores).unwrap()
        );
    }

    let q = heuristic_sanity_question(&doc, seed).unwrap();
    println!("\nTrue/False check: {:?} (answer {})", q.statement, q.answer);
}
