//! Tokenization, sentence splitting and n-gram extraction.
//!
//! Every other module works on [`TokenizedText`]: a raw string plus the
//! ordered tokens cut out of it, each carrying character offsets back into
//! the raw text. The default rules are deliberately plain so that scores
//! computed on two machines agree bit for bit:
//!
//! * case-fold to lowercase (configurable),
//! * split on whitespace,
//! * detach leading and trailing non-alphanumeric characters from each
//!   whitespace chunk as one-character tokens,
//! * end a sentence after a `.`, `?` or `!` token that is followed by
//!   whitespace or by the end of the text.

use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TextError {
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
}

/// Knobs for [`tokenize`]. Serialized into corpus files so scores can be
/// reproduced from the file alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// Detach leading/trailing punctuation into separate tokens.
    pub split_punctuation: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            split_punctuation: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// 0-based character (Unicode scalar) offset into the raw text.
    pub char_start: usize,
    /// Exclusive character offset.
    pub char_end: usize,
    pub kind: TokenKind,
    #[serde(skip)]
    byte_range: Range<usize>,
}

impl Token {
    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenizedText {
    raw: String,
    tokens: Vec<Token>,
    sentence_bounds: Vec<Range<usize>>,
    /// Token surfaces kept contiguous so n-gram windows can be borrowed.
    #[serde(skip)]
    words: Vec<String>,
}

impl TokenizedText {
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Token-index ranges, one per sentence, partitioning the token list.
    pub fn sentence_bounds(&self) -> &[Range<usize>] {
        &self.sentence_bounds
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Normalized token surfaces as one slice; `words().windows(n)` yields
    /// n-gram keys without allocating.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Normalized token surfaces in order.
    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    fn assemble(raw: String, tokens: Vec<Token>, sentence_bounds: Vec<Range<usize>>) -> Self {
        let words = tokens.iter().map(|t| t.surface.clone()).collect();
        Self {
            raw,
            tokens,
            sentence_bounds,
            words,
        }
    }

    /// The un-normalized slice of the raw text that produced token `index`.
    pub fn raw_token(&self, index: usize) -> &str {
        &self.raw[self.tokens[index].byte_range.clone()]
    }

    /// Builds a text straight from pre-split surfaces (joined by single
    /// spaces, one sentence). Handy for fixtures such as `[a, b, a]`.
    pub fn from_surfaces<S: AsRef<str>>(surfaces: &[S]) -> Self {
        let raw = surfaces
            .iter()
            .map(|s| s.as_ref())
            .collect::<Vec<_>>()
            .join(" ");
        let mut tokens = Vec::with_capacity(surfaces.len());
        let mut byte = 0;
        let mut chr = 0;
        for s in surfaces {
            let s = s.as_ref();
            let chars = s.chars().count();
            tokens.push(Token {
                surface: s.to_owned(),
                char_start: chr,
                char_end: chr + chars,
                kind: classify(s),
                byte_range: byte..byte + s.len(),
            });
            byte += s.len() + 1;
            chr += chars + 1;
        }
        let sentence_bounds = if tokens.is_empty() {
            Vec::new()
        } else {
            vec![0..tokens.len()]
        };
        Self::assemble(raw, tokens, sentence_bounds)
    }
}

fn classify(surface: &str) -> TokenKind {
    if surface.chars().any(char::is_alphanumeric) {
        TokenKind::Word
    } else {
        TokenKind::Punct
    }
}

fn normalize(piece: &str, config: &TokenizerConfig) -> String {
    if config.lowercase {
        piece.to_lowercase()
    } else {
        piece.to_owned()
    }
}

fn is_sentence_terminal(surface: &str) -> bool {
    matches!(surface, "." | "?" | "!")
}

/// Tokenizes `raw` under `config`. Pure and deterministic; empty input
/// yields an empty token list with no sentences.
pub fn tokenize(raw: &str, config: &TokenizerConfig) -> TokenizedText {
    // (byte_start, byte_end, char_start, char_end)
    let mut pieces: Vec<(usize, usize, usize, usize)> = Vec::new();
    // Whether the piece at the same index is followed by whitespace or EOF.
    let mut followed_by_space: Vec<bool> = Vec::new();

    let indexed: Vec<(usize, char)> = raw.char_indices().collect();
    let byte_at = |ci: usize| indexed.get(ci).map_or(raw.len(), |&(b, _)| b);

    let mut ci = 0;
    while ci < indexed.len() {
        if indexed[ci].1.is_whitespace() {
            ci += 1;
            continue;
        }
        let chunk_start = ci;
        while ci < indexed.len() && !indexed[ci].1.is_whitespace() {
            ci += 1;
        }
        let chunk_end = ci;

        let mut chunk_pieces = Vec::new();
        if config.split_punctuation {
            let mut lo = chunk_start;
            let mut hi = chunk_end;
            while lo < hi && !indexed[lo].1.is_alphanumeric() {
                chunk_pieces.push((lo, lo + 1));
                lo += 1;
            }
            let mut trailing = Vec::new();
            while hi > lo && !indexed[hi - 1].1.is_alphanumeric() {
                trailing.push((hi - 1, hi));
                hi -= 1;
            }
            if lo < hi {
                chunk_pieces.push((lo, hi));
            }
            chunk_pieces.extend(trailing.into_iter().rev());
        } else {
            chunk_pieces.push((chunk_start, chunk_end));
        }

        let last = chunk_pieces.len().saturating_sub(1);
        for (k, (cs, ce)) in chunk_pieces.into_iter().enumerate() {
            pieces.push((byte_at(cs), byte_at(ce), cs, ce));
            followed_by_space.push(k == last);
        }
    }

    let mut tokens = Vec::with_capacity(pieces.len());
    let mut sentence_bounds = Vec::new();
    let mut sentence_start = 0;
    for (i, &(bs, be, cs, ce)) in pieces.iter().enumerate() {
        let slice = &raw[bs..be];
        let surface = normalize(slice, config);
        let kind = classify(slice);
        let ends_sentence = is_sentence_terminal(slice) && followed_by_space[i];
        tokens.push(Token {
            surface,
            char_start: cs,
            char_end: ce,
            kind,
            byte_range: bs..be,
        });
        if ends_sentence {
            sentence_bounds.push(sentence_start..i + 1);
            sentence_start = i + 1;
        }
    }
    if sentence_start < tokens.len() {
        sentence_bounds.push(sentence_start..tokens.len());
    }

    TokenizedText::assemble(raw.to_owned(), tokens, sentence_bounds)
}

/// An ordered tuple of `n` token surfaces.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ngram(Vec<String>);

impl Ngram {
    pub fn new<S: Into<String>>(grams: impl IntoIterator<Item = S>) -> Self {
        Self(grams.into_iter().map(Into::into).collect())
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn grams(&self) -> &[String] {
        &self.0
    }
}

impl Borrow<[String]> for Ngram {
    fn borrow(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for Ngram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionedNgram {
    pub start: usize,
    pub ngram: Ngram,
}

fn check_order(n: usize) -> Result<(), TextError> {
    if n == 0 {
        Err(TextError::ZeroOrder)
    } else {
        Ok(())
    }
}

/// Every contiguous window of `n` tokens with its start index. Windows may
/// cross sentence boundaries but never the end of the text.
pub fn extract_ngrams(text: &TokenizedText, n: usize) -> Result<Vec<PositionedNgram>, TextError> {
    check_order(n)?;
    Ok(text
        .tokens
        .windows(n)
        .enumerate()
        .map(|(start, w)| PositionedNgram {
            start,
            ngram: Ngram(w.iter().map(|t| t.surface.clone()).collect()),
        })
        .collect())
}

/// Occurrence count of every distinct n-gram of order `n`.
pub fn ngram_counts(text: &TokenizedText, n: usize) -> Result<BTreeMap<Ngram, usize>, TextError> {
    check_order(n)?;
    let mut counts: BTreeMap<&[String], usize> = BTreeMap::new();
    for w in text.words.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    Ok(counts.into_iter().map(|(w, c)| (Ngram(w.to_vec()), c)).collect())
}

/// Number of times `g` occurs in `text`.
pub fn count_occurrences(g: &Ngram, text: &TokenizedText) -> usize {
    let n = g.order();
    if n == 0 {
        return 0;
    }
    text.tokens
        .windows(n)
        .filter(|w| w.iter().zip(g.grams()).all(|(t, s)| t.surface == *s))
        .count()
}

/// `min(count(g, a), count(g, b))`: the clipped overlap count of `g`.
pub fn clipped_count(g: &Ngram, a: &TokenizedText, b: &TokenizedText) -> usize {
    count_occurrences(g, a).min(count_occurrences(g, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(t: &TokenizedText) -> Vec<&str> {
        t.surfaces()
    }

    #[test]
    fn empty_input() {
        let t = tokenize("", &TokenizerConfig::default());
        assert!(t.is_empty());
        assert!(t.sentence_bounds().is_empty());
        let t = tokenize("  \n\t ", &TokenizerConfig::default());
        assert!(t.is_empty());
    }

    #[test]
    fn detaches_punctuation() {
        let t = tokenize("Hello, world.", &TokenizerConfig::default());
        assert_eq!(toks(&t), ["hello", ",", "world", "."]);
        assert_eq!(t.sentence_bounds(), &[0..4]);
        assert_eq!(t.tokens()[1].kind, TokenKind::Punct);
    }

    #[test]
    fn splits_sentences() {
        let t = tokenize("A b. C d!", &TokenizerConfig::default());
        assert_eq!(t.len(), 6);
        assert_eq!(t.sentence_bounds(), &[0..3, 3..6]);
    }

    #[test]
    fn terminal_inside_chunk_does_not_split() {
        // "3.5" keeps its dot; "end.)" has the dot followed by ")", not space.
        let t = tokenize("Pi is 3.5 (roughly end.) Next one", &TokenizerConfig::default());
        assert!(toks(&t).contains(&"3.5"));
        assert_eq!(t.sentence_bounds().len(), 1);
    }

    #[test]
    fn case_folding_is_optional() {
        let cfg = TokenizerConfig {
            lowercase: false,
            ..Default::default()
        };
        let t = tokenize("The Cat", &cfg);
        assert_eq!(toks(&t), ["The", "Cat"]);
    }

    #[test]
    fn unicode_offsets_are_in_chars() {
        let t = tokenize("Café «olé»", &TokenizerConfig::default());
        assert_eq!(toks(&t), ["café", "«", "olé", "»"]);
        assert_eq!((t.tokens()[2].char_start, t.tokens()[2].char_end), (6, 9));
        assert_eq!(t.raw_token(0), "Café");
    }

    #[test]
    fn ngram_windows() {
        let t = TokenizedText::from_surfaces(&["a", "b", "a"]);
        let g = extract_ngrams(&t, 2).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!((g[0].start, g[0].ngram.clone()), (0, Ngram::new(["a", "b"])));
        assert_eq!((g[1].start, g[1].ngram.clone()), (1, Ngram::new(["b", "a"])));

        let t1 = TokenizedText::from_surfaces(&["a"]);
        assert!(extract_ngrams(&t1, 2).unwrap().is_empty());

        let t4 = TokenizedText::from_surfaces(&["a", "b", "c", "d"]);
        let u = extract_ngrams(&t4, 1).unwrap();
        assert_eq!(u.iter().map(|p| p.start).collect::<Vec<_>>(), [0, 1, 2, 3]);

        assert_eq!(extract_ngrams(&t4, 0), Err(TextError::ZeroOrder));
    }

    #[test]
    fn ngrams_cross_sentence_bounds() {
        let t = tokenize("A b. C d!", &TokenizerConfig::default());
        let g = extract_ngrams(&t, 2).unwrap();
        assert_eq!(g[2].ngram, Ngram::new([".", "c"]));
    }

    #[test]
    fn clipped_counts() {
        let a = TokenizedText::from_surfaces(&["a", "a", "b"]);
        let b = TokenizedText::from_surfaces(&["a"]);
        assert_eq!(clipped_count(&Ngram::new(["a"]), &a, &b), 1);

        let a = TokenizedText::from_surfaces(&["a", "a"]);
        let b = TokenizedText::from_surfaces(&["a", "a", "a"]);
        assert_eq!(clipped_count(&Ngram::new(["a"]), &a, &b), 2);
        assert_eq!(clipped_count(&Ngram::new(["z"]), &a, &b), 0);
    }

    fn raw_text() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                "[a-zA-Z]{1,6}",
                Just(".".to_owned()),
                Just("!".to_owned()),
                Just(",".to_owned()),
                Just("\"".to_owned()),
                Just("É".to_owned()),
                Just("ß".to_owned()),
                Just(" ".to_owned()),
                Just("\n".to_owned()),
            ],
            0..40,
        )
        .prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn offsets_round_trip(raw in raw_text(), lowercase in any::<bool>()) {
            let cfg = TokenizerConfig { lowercase, split_punctuation: true };
            let t = tokenize(&raw, &cfg);
            let chars: Vec<char> = raw.chars().collect();
            let mut prev_end = 0;
            for tok in t.tokens() {
                prop_assert!(tok.char_start < tok.char_end);
                prop_assert!(tok.char_start >= prev_end);
                prev_end = tok.char_end;
                let slice: String = chars[tok.char_start..tok.char_end].iter().collect();
                prop_assert_eq!(normalize(&slice, &cfg), tok.surface.clone());
            }
            // sentence bounds partition the tokens
            let mut next = 0;
            for r in t.sentence_bounds() {
                prop_assert_eq!(r.start, next);
                prop_assert!(r.end > r.start);
                next = r.end;
            }
            prop_assert_eq!(next, t.len());
            prop_assert_eq!(tokenize(&raw, &cfg), t);
        }

        #[test]
        fn ngram_count_shape(words in proptest::collection::vec("[abc]", 0..10), n in 1usize..5) {
            let t = TokenizedText::from_surfaces(&words);
            let m = words.len();
            prop_assert_eq!(extract_ngrams(&t, 1).unwrap().len(), m);
            prop_assert_eq!(extract_ngrams(&t, n).unwrap().len(), (m + 1).saturating_sub(n));
        }

        #[test]
        fn clipping_is_symmetric_and_bounded(
            a in proptest::collection::vec("[abc]", 0..8),
            b in proptest::collection::vec("[abc]", 0..8),
            g in proptest::collection::vec("[abc]", 1..3),
        ) {
            let (ta, tb) = (TokenizedText::from_surfaces(&a), TokenizedText::from_surfaces(&b));
            let g = Ngram::new(g);
            let c = clipped_count(&g, &ta, &tb);
            prop_assert_eq!(c, clipped_count(&g, &tb, &ta));
            prop_assert!(c <= count_occurrences(&g, &ta) && c <= count_occurrences(&g, &tb));
            prop_assert_eq!(clipped_count(&g, &ta, &ta), count_occurrences(&g, &ta));
        }
    }
}
