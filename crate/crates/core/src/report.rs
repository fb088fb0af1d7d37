//! Evaluation reports: content and quality judgment tables, HROUGE and
//! document-ROUGE tables, and highlight agreement.
//!
//! A report is a pure function of the corpus, the campaign configuration
//! and the accepted records, so rebuilding it from a replayed log yields
//! identical bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CORPUS_VERSION};
use crate::highlight::{Budget, CoverageStats, HighlightCorpusEntry, HighlightError, HighlightSet, TokenSpan};
use crate::metrics::{MetricError, NgramWeightTable, WeightMode};
use crate::protocol::{CampaignConfig, JudgmentRecord, SanityParams};
use crate::stats::{
    aggregate_scores, fleiss_kappa, macro_average_kappa, mean, pearson, AggregateRow, BinaryLabelMatrix, Kappa,
    ScoreObservation, StatsError,
};
use crate::store::Campaign;
use crate::text::TokenizerConfig;

pub const CLIPPING_RULE: &str = "count(g, D∩S) = min(count(g, D), count(g, S))";
pub const CV_RULE: &str = "unbiased cv per summary, averaged over summaries with >= 2 judgments";
pub const DEFAULT_ORDERS: [usize; 2] = [1, 2];

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Highlight(#[from] HighlightError),
    #[error("highlight record references unknown document {0:?}")]
    UnknownDocument(String),
    #[error("malformed highlight record on line {line}: {detail}")]
    MalformedHighlight { line: usize, detail: String },
    #[error("unknown report section {0:?}")]
    UnknownSection(String),
    #[error("document {doc_id:?} has highlights under budgets {first} and {second}")]
    MixedBudgets { doc_id: String, first: usize, second: usize },
}

/// One line of a highlights file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighlightRecord {
    pub doc_id: String,
    pub annotator_id: String,
    pub spans: Vec<TokenSpan>,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    Budget::DEFAULT_LIMIT
}

pub fn parse_highlight_lines(text: &str) -> Result<Vec<HighlightRecord>, ReportError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ReportError::MalformedHighlight {
                line: i + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

/// Validates highlight records against the corpus and groups them into one
/// entry per document (documents without highlights get an empty entry).
pub fn entries_from_records(
    corpus: &Corpus,
    records: &[HighlightRecord],
) -> Result<BTreeMap<String, HighlightCorpusEntry>, ReportError> {
    let mut budgets: BTreeMap<&str, usize> = BTreeMap::new();
    let mut grouped: BTreeMap<String, Vec<HighlightSet>> = BTreeMap::new();
    for r in records {
        let doc = corpus
            .documents
            .get(&r.doc_id)
            .ok_or_else(|| ReportError::UnknownDocument(r.doc_id.clone()))?;
        match budgets.insert(&r.doc_id, r.budget) {
            Some(first) if first != r.budget => {
                return Err(ReportError::MixedBudgets {
                    doc_id: r.doc_id.clone(),
                    first,
                    second: r.budget,
                })
            }
            _ => {}
        }
        let h = HighlightSet::new(
            r.annotator_id.clone(),
            r.doc_id.clone(),
            &doc.text,
            &r.spans,
            Budget::tokens(r.budget),
            chrono::DateTime::UNIX_EPOCH,
        )?;
        grouped.entry(r.doc_id.clone()).or_default().push(h);
    }
    let mut entries = BTreeMap::new();
    for (id, doc) in &corpus.documents {
        let budget = Budget::tokens(budgets.get(id.as_str()).copied().unwrap_or(Budget::DEFAULT_LIMIT));
        let hs = grouped.remove(id).unwrap_or_default();
        entries.insert(id.clone(), HighlightCorpusEntry::new(id.clone(), doc.text.clone(), hs, budget)?);
    }
    Ok(entries)
}

fn entries_from_sets(
    corpus: &Corpus,
    highlights: &BTreeMap<String, Vec<HighlightSet>>,
    budget: Budget,
) -> BTreeMap<String, HighlightCorpusEntry> {
    corpus
        .documents
        .iter()
        .map(|(id, doc)| {
            (
                id.clone(),
                HighlightCorpusEntry {
                    doc_id: id.clone(),
                    doc: doc.text.clone(),
                    highlights: highlights.get(id).cloned().unwrap_or_default(),
                    budget,
                },
            )
        })
        .collect()
}

/// Score of one summary at one order; `undefined` explains missing values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRecord {
    pub system: String,
    pub doc_id: String,
    pub n: usize,
    pub mode: WeightMode,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub undefined: Option<String>,
    /// Annotators behind the weights (0 for uniform weights).
    pub annotators: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemScore {
    pub system: String,
    pub n: usize,
    pub mode: WeightMode,
    pub precision: f64,
    pub recall: f64,
    /// Documents with a defined score.
    pub documents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreTable {
    pub per_system: Vec<SystemScore>,
    pub per_document: Vec<ScoreRecord>,
}

fn score_all(
    corpus: &Corpus,
    orders: &[usize],
    mode: WeightMode,
    mut table_for: impl FnMut(&str, usize) -> Result<NgramWeightTable, MetricError>,
) -> ScoreTable {
    let mut per_document = Vec::new();
    for &n in orders {
        for doc_id in corpus.documents.keys() {
            let table = table_for(doc_id, n);
            for s in corpus.summaries_of(doc_id) {
                let result = match &table {
                    Ok(t) => t.score(&s.text).map_err(|e| e.to_string()),
                    Err(e) => Err(e.to_string()),
                };
                let annotators = table.as_ref().map_or(0, |t| t.annotators);
                per_document.push(match result {
                    Ok(score) => ScoreRecord {
                        system: s.system.clone(),
                        doc_id: doc_id.clone(),
                        n,
                        mode,
                        precision: Some(score.precision),
                        recall: Some(score.recall),
                        undefined: None,
                        annotators,
                    },
                    Err(e) => ScoreRecord {
                        system: s.system.clone(),
                        doc_id: doc_id.clone(),
                        n,
                        mode,
                        precision: None,
                        recall: None,
                        undefined: Some(e),
                        annotators,
                    },
                });
            }
        }
    }
    per_document.sort_by(|a, b| (&a.system, a.n, &a.doc_id).cmp(&(&b.system, b.n, &b.doc_id)));

    let mut grouped: BTreeMap<(&str, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for r in &per_document {
        let slot = grouped.entry((&r.system, r.n)).or_default();
        if let (Some(p), Some(rc)) = (r.precision, r.recall) {
            slot.push((p, rc));
        }
    }
    let per_system = grouped
        .into_iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|((system, n), v)| {
            let (p, r): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            SystemScore {
                system: system.to_owned(),
                n,
                mode,
                precision: mean(&p),
                recall: mean(&r),
                documents: p.len(),
            }
        })
        .collect();
    ScoreTable {
        per_system,
        per_document,
    }
}

/// HROUGE for every summary in the corpus at each order.
pub fn hrouge_table(corpus: &Corpus, entries: &BTreeMap<String, HighlightCorpusEntry>, orders: &[usize]) -> ScoreTable {
    score_all(corpus, orders, WeightMode::Highlighted, |doc_id, n| {
        NgramWeightTable::from_highlights(&entries[doc_id], n)
    })
}

/// Document-ROUGE (all weights 1) for every summary at each order.
pub fn doc_rouge_table(corpus: &Corpus, orders: &[usize]) -> ScoreTable {
    score_all(corpus, orders, WeightMode::Uniform, |doc_id, n| {
        NgramWeightTable::uniform(doc_id, &corpus.documents[doc_id].text, n)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocumentAgreement {
    pub doc_id: String,
    pub annotators: usize,
    pub tokens: usize,
    pub kappa: Option<Kappa>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_error: Option<String>,
    pub coverage: Option<CoverageStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementTable {
    pub per_document: Vec<DocumentAgreement>,
    /// Mean over documents with a defined kappa.
    pub macro_kappa: Option<f64>,
    pub kappa_documents: usize,
    pub mean_union_coverage: Option<f64>,
    pub mean_second_half_fraction: Option<f64>,
}

/// Per-document Fleiss kappa on token × annotator labels, plus coverage.
pub fn agreement_table(entries: &BTreeMap<String, HighlightCorpusEntry>) -> AgreementTable {
    let per_document: Vec<DocumentAgreement> = entries
        .values()
        .filter(|e| e.annotators() > 0)
        .map(|e| {
            let kappa = fleiss_kappa(&BinaryLabelMatrix::from_highlights(e));
            DocumentAgreement {
                doc_id: e.doc_id.clone(),
                annotators: e.annotators(),
                tokens: e.doc.len(),
                kappa: kappa.as_ref().ok().copied(),
                kappa_error: kappa.err().map(|err| err.to_string()),
                coverage: e.coverage_stats().ok(),
            }
        })
        .collect();
    let macro_avg = macro_average_kappa(per_document.iter().filter_map(|d| d.kappa.as_ref()));
    let coverage: Vec<CoverageStats> = per_document.iter().filter_map(|d| d.coverage).collect();
    let avg = |f: fn(&CoverageStats) -> f64| {
        (!coverage.is_empty()).then(|| mean(&coverage.iter().map(f).collect::<Vec<_>>()))
    };
    AgreementTable {
        macro_kappa: macro_avg.map(|(k, _)| k),
        kappa_documents: macro_avg.map_or(0, |(_, n)| n),
        mean_union_coverage: avg(|c| c.union_coverage),
        mean_second_half_fraction: avg(|c| c.second_half_fraction),
        per_document,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JudgmentTable {
    pub rows: Vec<AggregateRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlation {
    pub pearson: f64,
    pub summaries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityTable {
    pub rows: Vec<AggregateRow>,
    /// Correlation of per-summary mean fluency and mean clarity.
    pub fluency_clarity: Option<Correlation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "data", rename_all = "snake_case")]
pub enum Section<T> {
    Present(T),
    Omitted(String),
}

impl<T> Section<T> {
    pub fn present(&self) -> Option<&T> {
        match self {
            Self::Present(t) => Some(t),
            Self::Omitted(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub corpus_version: String,
    pub tokenizer: TokenizerConfig,
    pub seed: u64,
    pub budget: Budget,
    pub annotators_per_doc: usize,
    pub judges_per_item: usize,
    pub planted_generator: SanityParams,
    pub orders: Vec<usize>,
    pub clipping: String,
    pub cv_rule: String,
    /// Accepted highlights per document.
    pub annotators: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub provenance: Provenance,
    pub content: Section<JudgmentTable>,
    pub quality: Section<QualityTable>,
    pub hrouge: Section<ScoreTable>,
    pub doc_rouge: Section<ScoreTable>,
    pub agreement: Section<AgreementTable>,
}

fn observations<'a>(
    corpus: &'a Corpus,
    judgments: &'a [JudgmentRecord],
    keep: impl Fn(&JudgmentRecord) -> bool + 'a,
) -> impl Iterator<Item = ScoreObservation> + 'a {
    judgments.iter().filter(move |j| keep(j)).flat_map(move |j| {
        j.scores.iter().filter_map(move |s| {
            let summary = corpus.summaries.get(s.summary_id.as_ref()?)?;
            Some(ScoreObservation {
                system: summary.system.clone(),
                summary_id: summary.id.clone(),
                metric: format!("{}/{}", j.kind, s.metric.as_str()),
                score: s.value,
            })
        })
    })
}

/// Builds the full report from accepted highlights and judgments.
pub fn build_report(
    corpus: &Corpus,
    config: &CampaignConfig,
    highlights: &BTreeMap<String, Vec<HighlightSet>>,
    judgments: &[JudgmentRecord],
) -> Result<EvalReport, ReportError> {
    use crate::protocol::TaskKind;

    let orders = DEFAULT_ORDERS.to_vec();
    let entries = entries_from_sets(corpus, highlights, config.budget);
    let any_highlights = entries.values().any(|e| e.annotators() > 0);

    let content_obs: Vec<ScoreObservation> = observations(corpus, judgments, |j| {
        matches!(j.kind, TaskKind::Content | TaskKind::ContentNoHighlight)
    })
    .collect();
    let content = if content_obs.is_empty() {
        Section::Omitted("no accepted content judgments".into())
    } else {
        Section::Present(JudgmentTable {
            rows: aggregate_scores(&content_obs)?,
        })
    };

    let quality_obs: Vec<ScoreObservation> =
        observations(corpus, judgments, |j| matches!(j.kind, TaskKind::Fluency | TaskKind::Clarity)).collect();
    let quality = if quality_obs.is_empty() {
        Section::Omitted("no accepted fluency or clarity judgments".into())
    } else {
        let mut per_summary: BTreeMap<&str, [Vec<f64>; 2]> = BTreeMap::new();
        for o in &quality_obs {
            let slot = per_summary.entry(&o.summary_id).or_default();
            match o.metric.as_str() {
                "fluency/fluency" => slot[0].push(o.score),
                _ => slot[1].push(o.score),
            }
        }
        let (fl, cl): (Vec<f64>, Vec<f64>) = per_summary
            .values()
            .filter(|[f, c]| !f.is_empty() && !c.is_empty())
            .map(|[f, c]| (mean(f), mean(c)))
            .unzip();
        Section::Present(QualityTable {
            rows: aggregate_scores(&quality_obs)?,
            fluency_clarity: pearson(&fl, &cl).ok().map(|r| Correlation {
                pearson: r,
                summaries: fl.len(),
            }),
        })
    };

    let has_summaries = !corpus.summaries.is_empty();
    let hrouge = match (has_summaries, any_highlights) {
        (false, _) => Section::Omitted("corpus has no summaries".into()),
        (true, false) => Section::Omitted("no accepted highlights".into()),
        (true, true) => Section::Present(hrouge_table(corpus, &entries, &orders)),
    };
    let doc_rouge = if has_summaries {
        Section::Present(doc_rouge_table(corpus, &orders))
    } else {
        Section::Omitted("corpus has no summaries".into())
    };
    let agreement = if any_highlights {
        Section::Present(agreement_table(&entries))
    } else {
        Section::Omitted("no accepted highlights".into())
    };

    Ok(EvalReport {
        provenance: Provenance {
            corpus_version: CORPUS_VERSION.to_owned(),
            tokenizer: corpus.tokenizer,
            seed: config.seed,
            budget: config.budget,
            annotators_per_doc: config.annotators_per_doc,
            judges_per_item: config.judges_per_item,
            planted_generator: config.sanity,
            orders,
            clipping: CLIPPING_RULE.to_owned(),
            cv_rule: CV_RULE.to_owned(),
            annotators: entries.iter().map(|(id, e)| (id.clone(), e.annotators())).collect(),
        },
        content,
        quality,
        hrouge,
        doc_rouge,
        agreement,
    })
}

pub fn campaign_report(campaign: &Campaign) -> Result<EvalReport, ReportError> {
    build_report(
        campaign.corpus(),
        &campaign.tasks().config,
        campaign.highlights(),
        campaign.judgments(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    #[default]
    Records,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "records" => Ok(Self::Records),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

/// How scores in `[0, 1]` are printed in CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreScale {
    /// ×100 with two decimals.
    Percent,
    Fraction,
}

impl ScoreScale {
    fn fmt(self, v: Option<f64>) -> String {
        match (self, v) {
            (_, None) => "undefined".to_owned(),
            (Self::Percent, Some(v)) => format!("{:.2}", v * 100.0),
            (Self::Fraction, Some(v)) => v.to_string(),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    csv_string(
        &["system", "metric", "mean", "cv", "n_judgments", "n_summaries"],
        rows.iter().map(|r| {
            vec![
                r.system.clone(),
                r.metric.clone(),
                format!("{:.2}", r.mean),
                r.cv.map_or_else(String::new, |c| format!("{c:.4}")),
                r.n_judgments.to_string(),
                r.n_summaries.to_string(),
            ]
        }),
    )
}

/// Per-system table followed by nothing else; per-document rows are in
/// [`score_records_csv`].
pub fn score_table_csv(table: &ScoreTable, scale: ScoreScale) -> String {
    csv_string(
        &["system", "n", "mode", "precision", "recall", "documents"],
        table.per_system.iter().map(|r| {
            vec![
                r.system.clone(),
                r.n.to_string(),
                mode_name(r.mode).to_owned(),
                scale.fmt(Some(r.precision)),
                scale.fmt(Some(r.recall)),
                r.documents.to_string(),
            ]
        }),
    )
}

pub fn score_records_csv(records: &[ScoreRecord], scale: ScoreScale) -> String {
    csv_string(
        &["system", "doc_id", "n", "mode", "precision", "recall", "annotators"],
        records.iter().map(|r| {
            vec![
                r.system.clone(),
                r.doc_id.clone(),
                r.n.to_string(),
                mode_name(r.mode).to_owned(),
                scale.fmt(r.precision),
                scale.fmt(r.recall),
                r.annotators.to_string(),
            ]
        }),
    )
}

pub fn agreement_csv(table: &AgreementTable) -> String {
    let mut rows: Vec<Vec<String>> = table
        .per_document
        .iter()
        .map(|d| {
            vec![
                d.doc_id.clone(),
                d.annotators.to_string(),
                match (&d.kappa, &d.kappa_error) {
                    (Some(Kappa::Defined { kappa }), _) => kappa.to_string(),
                    (Some(Kappa::Undefined { .. }), _) => "undefined".into(),
                    (None, _) => "error".into(),
                },
                opt(d.coverage.map(|c| c.union_coverage)),
                opt(d.coverage.map(|c| c.second_half_fraction)),
            ]
        })
        .collect();
    rows.push(vec![
        "macro_average".into(),
        String::new(),
        opt(table.macro_kappa),
        opt(table.mean_union_coverage),
        opt(table.mean_second_half_fraction),
    ]);
    csv_string(
        &["doc_id", "annotators", "kappa", "union_coverage", "second_half_fraction"],
        rows,
    )
}

fn mode_name(mode: WeightMode) -> &'static str {
    match mode {
        WeightMode::Highlighted => "hrouge",
        WeightMode::Uniform => "doc_rouge",
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn omitted_json(reason: &str) -> String {
    to_json(&Section::<()>::Omitted(reason.to_owned()))
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    /// Renders one section (`content`, `quality`, `hrouge`, `doc_rouge`,
    /// `agreement`). Omitted sections render as their explanation.
    pub fn render_section(&self, name: &str, format: Format) -> Result<String, ReportError> {
        let omitted = |s: &str| match format {
            Format::Records => omitted_json(s),
            Format::Csv => format!("# omitted: {s}\n"),
        };
        Ok(match name {
            "content" => match (&self.content, format) {
                (Section::Present(t), Format::Csv) => aggregate_csv(&t.rows),
                (s @ Section::Present(_), Format::Records) => to_json(s),
                (Section::Omitted(r), _) => omitted(r),
            },
            "quality" => match (&self.quality, format) {
                (Section::Present(t), Format::Csv) => aggregate_csv(&t.rows),
                (s @ Section::Present(_), Format::Records) => to_json(s),
                (Section::Omitted(r), _) => omitted(r),
            },
            "hrouge" | "doc_rouge" => {
                let section = if name == "hrouge" { &self.hrouge } else { &self.doc_rouge };
                match (section, format) {
                    (Section::Present(t), Format::Csv) => score_table_csv(t, ScoreScale::Percent),
                    (s @ Section::Present(_), Format::Records) => to_json(s),
                    (Section::Omitted(r), _) => omitted(r),
                }
            }
            "agreement" => match (&self.agreement, format) {
                (Section::Present(t), Format::Csv) => agreement_csv(t),
                (s @ Section::Present(_), Format::Records) => to_json(s),
                (Section::Omitted(r), _) => omitted(r),
            },
            other => return Err(ReportError::UnknownSection(other.to_owned())),
        })
    }
}
