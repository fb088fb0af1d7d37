//! Scores summaries with HROUGE (highlight-weighted) and document-ROUGE
//! (uniform weights), including the undefined cases.
//!
//! ```text
//! cargo run --example hrouge_scoring
//! ```

use chrono::DateTime;
use highres::highlight::{Budget, HighlightCorpusEntry, HighlightSet, TokenSpan};
use highres::metrics::{doc_rouge, NgramWeightTable};
use highres::text::TokenizedText;

fn words(s: &str) -> TokenizedText {
    TokenizedText::from_surfaces(&s.split_whitespace().collect::<Vec<_>>())
}

fn main() {
    // one annotator, budget 2, highlights "a b"
    let doc = words("a b c d");
    let budget = Budget::tokens(2);
    let h = HighlightSet::new("k1", "toy", &doc, &[TokenSpan::new(0, 2)], budget, DateTime::UNIX_EPOCH).unwrap();
    let entry = HighlightCorpusEntry::new("toy", doc.clone(), vec![h], budget).unwrap();

    for n in [1, 2] {
        let table = NgramWeightTable::from_highlights(&entry, n).unwrap();
        println!("order {n} weights:");
        for (g, w) in table.iter() {
            println!("  {g:<5} beta={:.3} count={}", w.beta, w.doc_count);
        }
        for summary in ["a c", "a b", "c d", "x"] {
            let s = words(summary);
            let hr = table.score(&s);
            let dr = doc_rouge(&doc, &s, n);
            let show = |r: Result<highres::HrougeScore, highres::metrics::MetricError>| match r {
                Ok(s) => {
                    let (p, r) = s.percent();
                    format!("P {p:6.2} R {r:6.2}")
                }
                Err(e) => format!("undefined ({e})"),
            };
            println!("  S={summary:<4} HROUGE {}   doc-ROUGE {}", show(hr), show(dr));
        }
    }
}
