//! Tokenizes a sentence pair and prints tokens with character offsets and
//! sentence bounds.
//!
//! ```text
//! cargo run --example tokenize -- "Dr. Lee met 3 people. They left!"
//! ```

use highres::text::{extract_ngrams, tokenize, TokenizerConfig};

fn main() {
    let raw = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "The mayor's plan (announced Monday) failed. Voters said \"no\"!".to_owned());
    let text = tokenize(&raw, &TokenizerConfig::default());

    for (i, t) in text.tokens().iter().enumerate() {
        println!(
            "{i:>3}  {:<12} chars {:>3}..{:<3} {:?}  raw={:?}",
            t.surface,
            t.char_start,
            t.char_end,
            t.kind,
            text.raw_token(i)
        );
    }
    for (i, s) in text.sentence_bounds().iter().enumerate() {
        println!("sentence {i}: tokens {}..{}", s.start, s.end);
    }
    let bigrams: Vec<String> = extract_ngrams(&text, 2)
        .unwrap()
        .into_iter()
        .take(5)
        .map(|p| p.ngram.to_string())
        .collect();
    println!("first bigrams: {bigrams:?}");

    let keep_case = TokenizerConfig {
        lowercase: false,
        split_punctuation: false,
    };
    println!("unsplit, cased: {:?}", tokenize(&raw, &keep_case).surfaces());
}
