//! Per-annotator highlights over a document, the word budget `K`, and the
//! per-token quantities derived from a set of highlights: the
//! length-weighted highlight count (`NumH`), heatmap intensities and
//! coverage statistics.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::text::TokenizedText;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum HighlightError {
    #[error("highlight uses {used} tokens, budget is {limit}")]
    BudgetExceeded { used: usize, limit: usize },
    #[error("span [{start}, {end}) out of bounds for a document of {len} tokens")]
    OutOfBounds { start: usize, end: usize, len: usize },
    #[error("span [{start}, {end}) has start after end")]
    InvalidSpan { start: usize, end: usize },
    #[error("highlight covers no tokens")]
    EmptyHighlight,
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("no highlights for this document")]
    NoAnnotators,
    #[error("token index {index} out of bounds for {len} tokens")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("highlight references document {found:?}, expected {expected:?}")]
    WrongDocument { expected: String, found: String },
}

/// Half-open token-index range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }
}

impl From<[usize; 2]> for TokenSpan {
    fn from([start, end]: [usize; 2]) -> Self {
        Self { start, end }
    }
}

impl From<TokenSpan> for [usize; 2] {
    fn from(s: TokenSpan) -> Self {
        [s.start, s.end]
    }
}

/// Which tokens count toward the budget `K` and toward `len(H_k)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetUnit {
    #[default]
    AllTokens,
    WordsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Budget {
    pub limit: usize,
    #[serde(default)]
    pub unit: BudgetUnit,
}

impl Budget {
    pub const DEFAULT_LIMIT: usize = 30;

    pub fn tokens(limit: usize) -> Self {
        Self {
            limit,
            unit: BudgetUnit::AllTokens,
        }
    }

    fn counted(&self, doc: &TokenizedText, spans: &[TokenSpan]) -> usize {
        match self.unit {
            BudgetUnit::AllTokens => spans.iter().map(TokenSpan::len).sum(),
            BudgetUnit::WordsOnly => spans
                .iter()
                .flat_map(|s| &doc.tokens()[s.start..s.end])
                .filter(|t| t.is_word())
                .count(),
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::tokens(Self::DEFAULT_LIMIT)
    }
}

/// Sorts spans and merges overlapping or touching ones. Empty spans vanish.
pub fn merge_spans(spans: &[TokenSpan]) -> Vec<TokenSpan> {
    let mut sorted: Vec<TokenSpan> = spans.iter().copied().filter(|s| !s.is_empty()).collect();
    sorted.sort();
    let mut merged: Vec<TokenSpan> = Vec::with_capacity(sorted.len());
    for s in sorted {
        match merged.last_mut() {
            Some(last) if s.start <= last.end => last.end = last.end.max(s.end),
            _ => merged.push(s),
        }
    }
    merged
}

/// Checks a raw span selection against a document and budget, returning the
/// merged spans and the counted highlight length.
pub fn validate_highlight(
    doc: &TokenizedText,
    spans: &[TokenSpan],
    budget: Budget,
) -> Result<(Vec<TokenSpan>, usize), HighlightError> {
    if budget.limit == 0 {
        return Err(HighlightError::ZeroBudget);
    }
    let len = doc.len();
    for s in spans {
        if s.start > s.end {
            return Err(HighlightError::InvalidSpan {
                start: s.start,
                end: s.end,
            });
        }
        if s.end > len {
            return Err(HighlightError::OutOfBounds {
                start: s.start,
                end: s.end,
                len,
            });
        }
    }
    let merged = merge_spans(spans);
    let used = budget.counted(doc, &merged);
    if merged.is_empty() || used == 0 {
        return Err(HighlightError::EmptyHighlight);
    }
    if used > budget.limit {
        return Err(HighlightError::BudgetExceeded {
            used,
            limit: budget.limit,
        });
    }
    Ok((merged, used))
}

/// One annotator's validated highlight over one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighlightSet {
    pub annotator_id: String,
    pub doc_id: String,
    /// Merged, sorted, non-overlapping spans.
    pub spans: Vec<TokenSpan>,
    /// `len(H_k)`, in the same unit as the budget.
    pub length: usize,
    pub created_at: DateTime<Utc>,
}

impl HighlightSet {
    pub fn new(
        annotator_id: impl Into<String>,
        doc_id: impl Into<String>,
        doc: &TokenizedText,
        spans: &[TokenSpan],
        budget: Budget,
        created_at: DateTime<Utc>,
    ) -> Result<Self, HighlightError> {
        let (spans, length) = validate_highlight(doc, spans, budget)?;
        Ok(Self {
            annotator_id: annotator_id.into(),
            doc_id: doc_id.into(),
            spans,
            length,
            created_at,
        })
    }

    pub fn covers(&self, index: usize) -> bool {
        // spans are sorted and disjoint
        let at = self.spans.partition_point(|s| s.end <= index);
        self.spans.get(at).is_some_and(|s| s.contains(index))
    }

    /// Number of distinct highlighted tokens, regardless of budget unit.
    pub fn token_count(&self) -> usize {
        self.spans.iter().map(TokenSpan::len).sum()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.spans.iter().flat_map(|s| s.start..s.end)
    }
}

/// A document together with all highlights collected for it.
#[derive(Debug, Clone)]
pub struct HighlightCorpusEntry {
    pub doc_id: String,
    pub doc: TokenizedText,
    pub highlights: Vec<HighlightSet>,
    pub budget: Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageStats {
    /// `|∪ H_k| / m`.
    pub union_coverage: f64,
    /// Share of highlighted-token instances at index `≥ ⌈m/2⌉`.
    pub second_half_fraction: f64,
}

impl HighlightCorpusEntry {
    /// Builds an entry, re-validating every highlight against the document
    /// and budget.
    pub fn new(
        doc_id: impl Into<String>,
        doc: TokenizedText,
        highlights: Vec<HighlightSet>,
        budget: Budget,
    ) -> Result<Self, HighlightError> {
        let doc_id = doc_id.into();
        for h in &highlights {
            if h.doc_id != doc_id {
                return Err(HighlightError::WrongDocument {
                    expected: doc_id,
                    found: h.doc_id.clone(),
                });
            }
            let (spans, length) = validate_highlight(&doc, &h.spans, budget)?;
            debug_assert_eq!(spans, h.spans);
            debug_assert_eq!(length, h.length);
        }
        Ok(Self {
            doc_id,
            doc,
            highlights,
            budget,
        })
    }

    pub fn annotators(&self) -> usize {
        self.highlights.len()
    }

    fn require_annotators(&self) -> Result<(), HighlightError> {
        if self.highlights.is_empty() {
            Err(HighlightError::NoAnnotators)
        } else {
            Ok(())
        }
    }

    /// `NumH(w_j) = Σ_k len(H_k)/K · 1[w_j ∈ H_k]`.
    pub fn num_h(&self, index: usize) -> Result<f64, HighlightError> {
        let len = self.doc.len();
        if index >= len {
            return Err(HighlightError::IndexOutOfBounds { index, len });
        }
        let k = self.budget.limit as f64;
        Ok(self
            .highlights
            .iter()
            .filter(|h| h.covers(index))
            .map(|h| h.length as f64 / k)
            .fold(0.0, |acc, x| acc + x))
    }

    /// `NumH` for every token, in document order.
    pub fn num_h_vector(&self) -> Vec<f64> {
        let k = self.budget.limit as f64;
        let mut out = vec![0.0; self.doc.len()];
        for h in &self.highlights {
            let w = h.length as f64 / k;
            for j in h.indices() {
                out[j] += w;
            }
        }
        out
    }

    /// How many annotators cover each token.
    pub fn coverage_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.doc.len()];
        for h in &self.highlights {
            for j in h.indices() {
                counts[j] += 1;
            }
        }
        counts
    }

    /// Per-token heatmap intensity: share of annotators covering the token.
    pub fn heatmap_weights(&self) -> Result<Vec<f64>, HighlightError> {
        self.require_annotators()?;
        let n = self.annotators() as f64;
        Ok(self
            .coverage_counts()
            .into_iter()
            .map(|c| c as f64 / n)
            .collect())
    }

    pub fn coverage_stats(&self) -> Result<CoverageStats, HighlightError> {
        self.require_annotators()?;
        let m = self.doc.len();
        let counts = self.coverage_counts();
        let union = counts.iter().filter(|&&c| c > 0).count();
        let half = m.div_ceil(2);
        let total: usize = counts.iter().sum();
        let second: usize = counts[half..].iter().sum();
        Ok(CoverageStats {
            union_coverage: union as f64 / m as f64,
            second_half_fraction: second as f64 / total as f64,
        })
    }
}
