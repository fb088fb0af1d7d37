//! Validates a few annotators' highlights against a budget and prints the
//! per-token NumH values and heatmap intensities.
//!
//! ```text
//! cargo run --example highlight_heatmap
//! ```

use chrono::Utc;
use highres::highlight::{Budget, HighlightCorpusEntry, HighlightSet, TokenSpan};
use highres::text::{tokenize, TokenizerConfig};

fn main() {
    let doc = tokenize(
        "Heavy rain closed the coastal road on Friday. Crews expect to reopen it by Sunday evening.",
        &TokenizerConfig::default(),
    );
    let budget = Budget::tokens(6);
    let raw = [
        ("ann-1", vec![TokenSpan::new(0, 5)]),
        // overlapping drags merge into one span
        ("ann-2", vec![TokenSpan::new(1, 4), TokenSpan::new(3, 5)]),
        ("ann-3", vec![TokenSpan::new(9, 15)]),
        // 8 tokens: over budget
        ("ann-4", vec![TokenSpan::new(0, 8)]),
    ];

    let mut accepted = Vec::new();
    for (who, spans) in raw {
        match HighlightSet::new(who, "rain", &doc, &spans, budget, Utc::now()) {
            Ok(h) => {
                println!("{who}: accepted {:?} ({} tokens)", h.spans, h.length);
                accepted.push(h);
            }
            Err(e) => println!("{who}: rejected: {e}"),
        }
    }

    let entry = HighlightCorpusEntry::new("rain", doc, accepted, budget).unwrap();
    let num_h = entry.num_h_vector();
    let heat = entry.heatmap_weights().unwrap();
    println!("\n{:<10} {:>6} {:>6}", "token", "NumH", "heat");
    for (i, t) in entry.doc.tokens().iter().enumerate() {
        let bar = "#".repeat((heat[i] * 10.0).round() as usize);
        println!("{:<10} {:>6.3} {:>6.3} {bar}", t.surface, num_h[i], heat[i]);
    }
    let cov = entry.coverage_stats().unwrap();
    println!(
        "\nunion coverage {:.3}, share of highlighted tokens in second half {:.3}",
        cov.union_coverage, cov.second_half_fraction
    );
}
