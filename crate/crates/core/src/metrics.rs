//! Highlight-weighted n-gram precision and recall (HROUGE) and its
//! uniform-weight special case, document-ROUGE.
//!
//! Each distinct document n-gram `g` gets a weight `β_g` in `[0, 1]`: for
//! every occurrence window of `g`, take the mean of `NumH(w_j) / N` over the
//! window's tokens, then average over occurrences. A summary is scored by
//!
//! ```text
//! overlap   = Σ_{g ∈ S} β_g · min(count(g, D), count(g, S))
//! recall    = overlap / Σ_{g ∈ D} β_g · count(g, D)
//! precision = overlap / Σ_{g ∈ S} count(g, S)
//! ```
//!
//! The precision denominator is unweighted so that summary n-grams nobody
//! highlighted still count against the summary. N-grams absent from the
//! document have `β = 0`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::highlight::{HighlightCorpusEntry, HighlightError};
use crate::text::{ngram_counts, Ngram, TextError, TokenizedText};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Highlight(#[from] HighlightError),
    #[error("document has no tokens")]
    EmptyDocument,
    #[error("{0} is undefined: zero denominator")]
    ZeroDenominator(ScoreSide),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSide {
    Precision,
    Recall,
}

impl std::fmt::Display for ScoreSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Precision => "precision",
            Self::Recall => "recall",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Highlighted,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NgramWeight {
    pub beta: f64,
    /// `count(g, D)`.
    pub doc_count: usize,
}

/// `β` weights of every distinct n-gram of one document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NgramWeightTable {
    pub n: usize,
    pub mode: WeightMode,
    pub doc_id: String,
    /// Number of annotators (0 for uniform tables).
    pub annotators: usize,
    pub budget: usize,
    weights: BTreeMap<Ngram, NgramWeight>,
    recall_denominator: f64,
}

impl NgramWeightTable {
    /// Computes highlight-derived weights for `entry`'s document.
    pub fn from_highlights(entry: &HighlightCorpusEntry, n: usize) -> Result<Self, MetricError> {
        if n == 0 {
            return Err(TextError::ZeroOrder.into());
        }
        if entry.doc.is_empty() {
            return Err(MetricError::EmptyDocument);
        }
        if entry.annotators() == 0 {
            return Err(HighlightError::NoAnnotators.into());
        }
        let annotators = entry.annotators() as f64;
        let salience: Vec<f64> = entry
            .num_h_vector()
            .into_iter()
            .map(|v| v / annotators)
            .collect();

        // Σ over occurrences of window means, and occurrence counts.
        let mut sums: BTreeMap<&[String], (f64, usize)> = BTreeMap::new();
        for (start, g) in entry.doc.words().windows(n).enumerate() {
            let window = &salience[start..start + n];
            let mean = window.iter().sum::<f64>() / n as f64;
            let slot = sums.entry(g).or_insert((0.0, 0));
            slot.0 += mean;
            slot.1 += 1;
        }
        let weights = sums
            .into_iter()
            .map(|(g, (sum, count))| {
                let beta = (sum / count as f64).clamp(0.0, 1.0);
                (
                    Ngram::new(g.iter().cloned()),
                    NgramWeight {
                        beta,
                        doc_count: count,
                    },
                )
            })
            .collect();
        Ok(Self::assemble(
            n,
            WeightMode::Highlighted,
            entry.doc_id.clone(),
            entry.annotators(),
            entry.budget.limit,
            weights,
        ))
    }

    /// Every document n-gram weighted 1.
    pub fn uniform(doc_id: impl Into<String>, doc: &TokenizedText, n: usize) -> Result<Self, MetricError> {
        if doc.is_empty() {
            return Err(MetricError::EmptyDocument);
        }
        let weights = ngram_counts(doc, n)?
            .into_iter()
            .map(|(g, doc_count)| (g, NgramWeight { beta: 1.0, doc_count }))
            .collect();
        Ok(Self::assemble(n, WeightMode::Uniform, doc_id.into(), 0, 0, weights))
    }

    /// The same table with every `β` overridden to 1.
    pub fn with_uniform_weights(&self) -> Self {
        let weights = self
            .weights
            .iter()
            .map(|(g, w)| (g.clone(), NgramWeight { beta: 1.0, ..*w }))
            .collect();
        Self::assemble(
            self.n,
            WeightMode::Uniform,
            self.doc_id.clone(),
            self.annotators,
            self.budget,
            weights,
        )
    }

    fn assemble(
        n: usize,
        mode: WeightMode,
        doc_id: String,
        annotators: usize,
        budget: usize,
        weights: BTreeMap<Ngram, NgramWeight>,
    ) -> Self {
        let recall_denominator = weights
            .values()
            .map(|w| w.beta * w.doc_count as f64)
            .fold(0.0, |acc, x| acc + x);
        Self {
            n,
            mode,
            doc_id,
            annotators,
            budget,
            weights,
            recall_denominator,
        }
    }

    /// `β_g`, or 0 for n-grams not in the document.
    pub fn beta(&self, g: &[String]) -> f64 {
        self.weights.get(g).map_or(0.0, |w| w.beta)
    }

    pub fn get(&self, g: &[String]) -> Option<&NgramWeight> {
        self.weights.get(g)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ngram, &NgramWeight)> {
        self.weights.iter()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Scores `summary` against this table.
    pub fn score(&self, summary: &TokenizedText) -> Result<HrougeScore, MetricError> {
        // Sorted borrowed windows; equal n-grams end up adjacent and lookups
        // go through `Ngram: Borrow<[String]>`, so nothing is allocated per
        // n-gram.
        let mut windows: Vec<&[String]> = summary.words().windows(self.n).collect();
        if windows.is_empty() {
            return Err(MetricError::ZeroDenominator(ScoreSide::Precision));
        }
        if self.recall_denominator <= 0.0 {
            return Err(MetricError::ZeroDenominator(ScoreSide::Recall));
        }
        windows.sort_unstable();
        let summary_total = windows.len();
        let overlap: f64 = windows
            .chunk_by(|a, b| a == b)
            .filter_map(|run| {
                self.weights
                    .get(run[0])
                    .map(|w| w.beta * run.len().min(w.doc_count) as f64)
            })
            // fold from +0.0: an empty f64 `sum` is -0.0
            .fold(0.0, |acc, x| acc + x);
        Ok(HrougeScore {
            n: self.n,
            mode: self.mode,
            precision: (overlap / summary_total as f64).clamp(0.0, 1.0),
            recall: (overlap / self.recall_denominator).clamp(0.0, 1.0),
        })
    }
}

/// `β` table for `entry`'s document at order `n`.
pub fn ngram_weights(entry: &HighlightCorpusEntry, n: usize) -> Result<NgramWeightTable, MetricError> {
    NgramWeightTable::from_highlights(entry, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrougeScore {
    pub n: usize,
    pub mode: WeightMode,
    pub precision: f64,
    pub recall: f64,
}

impl HrougeScore {
    /// `(precision, recall)` on the 0–100 scale used in printed tables.
    pub fn percent(&self) -> (f64, f64) {
        (self.precision * 100.0, self.recall * 100.0)
    }
}

pub fn hrouge(entry: &HighlightCorpusEntry, summary: &TokenizedText, n: usize) -> Result<HrougeScore, MetricError> {
    ngram_weights(entry, n)?.score(summary)
}

/// Standard clipped n-gram precision/recall with the document as reference.
pub fn doc_rouge(doc: &TokenizedText, summary: &TokenizedText, n: usize) -> Result<HrougeScore, MetricError> {
    NgramWeightTable::uniform("", doc, n)?.score(summary)
}
