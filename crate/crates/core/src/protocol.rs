//! The three crowd task types and their acceptance rules.
//!
//! * **Highlight annotation**: mark up to `K` tokens of a document, then
//!   answer a True/False question about it. A wrong answer rejects the
//!   whole submission no matter how good the highlight is.
//! * **Content judgment**: rate one summary for precision and recall on a
//!   1–100 scale, with or without the highlight heatmap shown.
//! * **Quality judgment**: rate every summary of a document for a single
//!   metric (fluency or clarity, never both in one batch). Three planted
//!   summaries of known quality are mixed in and the batch is rejected
//!   unless the judge scores them strictly `bad < mediocre < good`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, SanityQuestion};
use crate::highlight::{Budget, HighlightError, HighlightSet};
use crate::text::{TokenKind, TokenizedText};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("document has {sentences} sentence(s); planted summaries need at least 2")]
    DocumentTooShort { sentences: usize },
    #[error("no score for the planted {0} summary")]
    MissingPlantedScore(PlantTag),
    #[error("document {doc_id:?} has no summary from system {system:?}")]
    MissingSummary { doc_id: String, system: String },
    #[error("invalid campaign configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown task type {0:?}")]
    UnknownTaskType(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "highlight")]
    Highlight,
    #[serde(rename = "content")]
    Content,
    #[serde(rename = "content_nohl")]
    ContentNoHighlight,
    #[serde(rename = "fluency")]
    Fluency,
    #[serde(rename = "clarity")]
    Clarity,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        Self::Highlight,
        Self::Content,
        Self::ContentNoHighlight,
        Self::Fluency,
        Self::Clarity,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Highlight => "highlight",
            Self::Content => "content",
            Self::ContentNoHighlight => "content_nohl",
            Self::Fluency => "fluency",
            Self::Clarity => "clarity",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ProtocolError::UnknownTaskType(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityMetric {
    Fluency,
    Clarity,
}

impl QualityMetric {
    pub fn kind(self) -> TaskKind {
        match self {
            Self::Fluency => TaskKind::Fluency,
            Self::Clarity => TaskKind::Clarity,
        }
    }
}

/// What a single score measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ContentPrecision,
    ContentRecall,
    Fluency,
    Clarity,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ContentPrecision => "precision",
            Self::ContentRecall => "recall",
            Self::Fluency => "fluency",
            Self::Clarity => "clarity",
        }
    }
}

impl From<QualityMetric> for Metric {
    fn from(m: QualityMetric) -> Self {
        match m {
            QualityMetric::Fluency => Self::Fluency,
            QualityMetric::Clarity => Self::Clarity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantTag {
    Good,
    Mediocre,
    Bad,
}

impl fmt::Display for PlantTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Good => "good",
            Self::Mediocre => "mediocre",
            Self::Bad => "bad",
        })
    }
}

/// Stable 64-bit seed for a labelled sub-stream of a campaign seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, then a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fixed parameters of the planted-summary generator, stored with every
/// quality batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SanityParams {
    /// Word edits in the mediocre summary: `max(min_edits, ⌈edit_rate · tokens⌉)`.
    pub min_edits: usize,
    pub edit_rate: f64,
    pub max_sentences: usize,
}

impl Default for SanityParams {
    fn default() -> Self {
        Self {
            min_edits: 2,
            edit_rate: 0.10,
            max_sentences: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedSummary {
    pub tag: PlantTag,
    /// Token strings, one list per sentence.
    pub sentences: Vec<Vec<String>>,
    pub text: String,
}

impl PlantedSummary {
    fn from_sentences(tag: PlantTag, sentences: Vec<Vec<String>>) -> Self {
        let text = sentences.iter().map(|s| detokenize(s)).collect::<Vec<_>>().join(" ");
        Self { tag, sentences, text }
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flatten().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SanityTriple {
    pub good: PlantedSummary,
    pub mediocre: PlantedSummary,
    pub bad: PlantedSummary,
}

impl SanityTriple {
    pub fn get(&self, tag: PlantTag) -> &PlantedSummary {
        match tag {
            PlantTag::Good => &self.good,
            PlantTag::Mediocre => &self.mediocre,
            PlantTag::Bad => &self.bad,
        }
    }
}

/// Joins tokens with spaces, attaching closing punctuation to the left.
fn detokenize(tokens: &[String]) -> String {
    let mut out = String::new();
    for t in tokens {
        let attach = matches!(t.as_str(), "." | "," | "!" | "?" | ";" | ":" | ")" | "'" | "%");
        if !out.is_empty() && !attach {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}

fn raw_sentences(text: &TokenizedText) -> Vec<Vec<String>> {
    text.sentence_bounds()
        .iter()
        .map(|r| r.clone().map(|i| text.raw_token(i).to_owned()).collect())
        .collect()
}

/// Changes a word's ending so that its inflection no longer fits.
fn break_inflection(word: &str) -> String {
    let lower = word.to_lowercase();
    let keep = |suffix: usize| &word[..word.len() - suffix];
    if lower.ends_with("ing") && word.len() > 4 {
        format!("{}ed", keep(3))
    } else if lower.ends_with("ed") && word.len() > 3 {
        format!("{}ing", keep(2))
    } else if lower.ends_with('s') && word.len() > 3 {
        keep(1).to_owned()
    } else {
        format!("{word}s")
    }
}

/// Builds the planted good/mediocre/bad summaries for one document.
///
/// `good` is the original summary verbatim. `mediocre` takes one or two
/// document sentences (chosen uniformly) and applies word edits that break
/// inflection or drop words. `bad` is `mediocre` with the tokens of each
/// sentence shuffled.
pub fn make_sanity_summaries(
    doc: &TokenizedText,
    original_summary: &TokenizedText,
    seed: u64,
    params: &SanityParams,
) -> Result<SanityTriple, ProtocolError> {
    let doc_sentences = raw_sentences(doc);
    if doc_sentences.len() < 2 {
        return Err(ProtocolError::DocumentTooShort {
            sentences: doc_sentences.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let good = PlantedSummary {
        tag: PlantTag::Good,
        sentences: raw_sentences(original_summary),
        text: original_summary.raw().to_owned(),
    };

    let take = rng.random_range(1..=params.max_sentences.max(1)).min(doc_sentences.len());
    let mut picked = index::sample(&mut rng, doc_sentences.len(), take).into_vec();
    picked.sort_unstable();
    let mut picked_tokens: Vec<Vec<(String, TokenKind)>> = Vec::with_capacity(take);
    for &si in &picked {
        let range = doc.sentence_bounds()[si].clone();
        picked_tokens.push(
            range
                .map(|i| (doc.raw_token(i).to_owned(), doc.tokens()[i].kind))
                .collect(),
        );
    }

    let total: usize = picked_tokens.iter().map(Vec::len).sum();
    let edits = params
        .min_edits
        .max((params.edit_rate * total as f64).ceil() as usize);
    let word_slots: Vec<(usize, usize)> = picked_tokens
        .iter()
        .enumerate()
        .flat_map(|(s, toks)| {
            toks.iter()
                .enumerate()
                .filter(|(_, (_, k))| *k == TokenKind::Word)
                .map(move |(i, _)| (s, i))
        })
        .collect();
    let mut targets: Vec<(usize, usize)> = index::sample(&mut rng, word_slots.len(), edits.min(word_slots.len()))
        .into_iter()
        .map(|k| word_slots[k])
        .collect();
    // Descending so deletions never shift a pending target.
    targets.sort_unstable_by(|a, b| b.cmp(a));
    for (s, i) in targets {
        let delete = rng.random_bool(0.5) && picked_tokens[s].len() > 1;
        if delete {
            picked_tokens[s].remove(i);
        } else {
            let w = &mut picked_tokens[s][i].0;
            *w = break_inflection(w);
        }
    }
    let mediocre_sentences: Vec<Vec<String>> = picked_tokens
        .into_iter()
        .map(|s| s.into_iter().map(|(t, _)| t).collect())
        .collect();

    let bad_sentences = mediocre_sentences
        .iter()
        .map(|s| {
            let mut shuffled = s.clone();
            shuffled.shuffle(&mut rng);
            if shuffled == *s && s.iter().any(|t| *t != s[0]) {
                shuffled.rotate_left(1);
            }
            shuffled
        })
        .collect();

    Ok(SanityTriple {
        good,
        mediocre: PlantedSummary::from_sentences(PlantTag::Mediocre, mediocre_sentences),
        bad: PlantedSummary::from_sentences(PlantTag::Bad, bad_sentences),
    })
}

/// Heuristic True/False question for documents that came without one: a
/// document sentence, either verbatim (True) or with one capitalized word
/// swapped for another capitalized word from the document (False).
pub fn heuristic_sanity_question(doc: &TokenizedText, seed: u64) -> Option<SanityQuestion> {
    let sentences = raw_sentences(doc);
    if sentences.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let si = rng.random_range(0..sentences.len());
    let sentence = &sentences[si];
    let capitalized = |t: &String| t.chars().next().is_some_and(char::is_uppercase);
    let doc_names: BTreeSet<&String> = sentences.iter().flatten().filter(|t| capitalized(t)).collect();
    let swappable: Vec<usize> = (1..sentence.len()).filter(|&i| capitalized(&sentence[i])).collect();

    let want_false = rng.random_bool(0.5);
    if want_false && !swappable.is_empty() {
        let i = swappable[rng.random_range(0..swappable.len())];
        let others: Vec<&String> = doc_names
            .iter()
            .copied()
            .filter(|n| **n != sentence[i] && !sentence.contains(n))
            .collect();
        if !others.is_empty() {
            let mut edited = sentence.clone();
            edited[i] = others[rng.random_range(0..others.len())].clone();
            return Some(SanityQuestion {
                statement: detokenize(&edited),
                answer: false,
                machine_made: true,
            });
        }
    }
    Some(SanityQuestion {
        statement: detokenize(sentence),
        answer: true,
        machine_made: true,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    SanityAnswerWrong,
    PlantedOrderViolated { bad: String, mediocre: String, good: String },
    InvalidHighlight { detail: String },
    ScoreOutOfRange { value: String },
    IncompleteBatch { missing: Vec<String> },
    UnknownItem { item_id: String },
    WrongPayload { expected: TaskKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Rejected(RejectReason),
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Self::Accepted)
    }
}

/// Accepts iff `bad < mediocre < good`, strictly.
pub fn validate_quality_batch(planted: &BTreeMap<PlantTag, f64>) -> Result<Verdict, ProtocolError> {
    let get = |tag| planted.get(&tag).copied().ok_or(ProtocolError::MissingPlantedScore(tag));
    let (bad, mediocre, good) = (get(PlantTag::Bad)?, get(PlantTag::Mediocre)?, get(PlantTag::Good)?);
    if bad < mediocre && mediocre < good {
        Ok(Verdict::Accepted)
    } else {
        Ok(Verdict::Rejected(RejectReason::PlantedOrderViolated {
            bad: bad.to_string(),
            mediocre: mediocre.to_string(),
            good: good.to_string(),
        }))
    }
}

/// Checks the True/False answer first; a wrong answer rejects the
/// submission whatever the highlight looks like. Otherwise the highlight
/// must have passed budget validation.
pub fn validate_annotation_submission(
    task: &AnnotationTask,
    answer: bool,
    highlight: Result<HighlightSet, HighlightError>,
) -> Result<HighlightSet, RejectReason> {
    if answer != task.sanity.answer {
        return Err(RejectReason::SanityAnswerWrong);
    }
    highlight.map_err(|e| RejectReason::InvalidHighlight { detail: e.to_string() })
}

pub fn check_score(value: f64) -> Result<(), RejectReason> {
    if (1.0..=100.0).contains(&value) {
        Ok(())
    } else {
        Err(RejectReason::ScoreOutOfRange {
            value: value.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub doc_id: String,
    pub budget: Budget,
    pub sanity: SanityQuestion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentJudgmentTask {
    pub task_id: String,
    pub doc_id: String,
    pub summary_id: String,
    /// Whether the judge sees the highlight heatmap.
    pub with_heatmap: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ItemSource {
    Summary { summary_id: String },
    Planted { tag: PlantTag },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchItem {
    /// Opaque to the judge; reveals neither system nor planted tag.
    pub item_id: String,
    #[serde(flatten)]
    pub source: ItemSource,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityBatch {
    pub task_id: String,
    pub doc_id: String,
    pub metric: QualityMetric,
    pub items: Vec<BatchItem>,
    pub seed: u64,
    pub generator: SanityParams,
}

impl QualityBatch {
    pub fn planted_item(&self, tag: PlantTag) -> Option<&BatchItem> {
        self.items
            .iter()
            .find(|i| i.source == ItemSource::Planted { tag })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Task {
    Annotation(AnnotationTask),
    Content(ContentJudgmentTask),
    Quality(QualityBatch),
}

impl Task {
    pub fn id(&self) -> &str {
        match self {
            Self::Annotation(t) => &t.task_id,
            Self::Content(t) => &t.task_id,
            Self::Quality(t) => &t.task_id,
        }
    }

    pub fn doc_id(&self) -> &str {
        match self {
            Self::Annotation(t) => &t.doc_id,
            Self::Content(t) => &t.doc_id,
            Self::Quality(t) => &t.doc_id,
        }
    }

    pub fn kind(&self) -> TaskKind {
        match self {
            Self::Annotation(_) => TaskKind::Highlight,
            Self::Content(t) if t.with_heatmap => TaskKind::Content,
            Self::Content(_) => TaskKind::ContentNoHighlight,
            Self::Quality(b) => b.metric.kind(),
        }
    }

    /// The unit a judge may work on at most once. Both content conditions
    /// share a key, so a judge never rates one summary under both.
    pub fn item_key(&self) -> String {
        match self {
            Self::Annotation(t) => format!("doc:{}", t.doc_id),
            Self::Content(t) => format!("summary:{}", t.summary_id),
            Self::Quality(b) => format!("quality:{}:{}", b.doc_id, b.metric.kind()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub seed: u64,
    pub annotators_per_doc: usize,
    pub judges_per_item: usize,
    pub budget: Budget,
    /// Also emit content tasks without the heatmap, as a control condition.
    pub no_highlight_control: bool,
    /// System label whose summary serves as the planted "good" summary.
    pub reference_system: String,
    pub sanity: SanityParams,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            annotators_per_doc: 10,
            judges_per_item: 3,
            budget: Budget::default(),
            no_highlight_control: false,
            reference_system: "reference".to_owned(),
            sanity: SanityParams::default(),
        }
    }
}

/// Every assignment slot of a campaign, in serving order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSet {
    pub config: CampaignConfig,
    pub tasks: Vec<Task>,
}

impl TaskSet {
    pub fn count(&self, kind: TaskKind) -> usize {
        self.tasks.iter().filter(|t| t.kind() == kind).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("task set serializes");
        s.push('\n');
        s
    }
}

/// Generates all annotation, content and quality assignments for a corpus.
pub fn build_tasks(corpus: &Corpus, config: &CampaignConfig) -> Result<TaskSet, ProtocolError> {
    if config.judges_per_item == 0 {
        return Err(ProtocolError::InvalidConfig("judges_per_item must be at least 1".into()));
    }
    if config.annotators_per_doc == 0 {
        return Err(ProtocolError::InvalidConfig("annotators_per_doc must be at least 1".into()));
    }
    if config.budget.limit == 0 {
        return Err(ProtocolError::InvalidConfig("budget must be at least 1".into()));
    }
    let systems = corpus.systems();
    for doc_id in corpus.documents.keys() {
        for system in &systems {
            if !corpus.summaries.contains_key(&crate::corpus::summary_id(doc_id, system)) {
                return Err(ProtocolError::MissingSummary {
                    doc_id: doc_id.clone(),
                    system: system.to_string(),
                });
            }
        }
    }

    let mut annotation = Vec::new();
    let mut content = Vec::new();
    let mut content_nohl = Vec::new();
    let mut fluency = Vec::new();
    let mut clarity = Vec::new();

    for (doc_id, doc) in &corpus.documents {
        let sanity = match &doc.sanity {
            Some(q) => q.clone(),
            None => heuristic_sanity_question(&doc.text, derive_seed(config.seed, &format!("question/{doc_id}")))
                .ok_or(ProtocolError::DocumentTooShort { sentences: 0 })?,
        };
        for slot in 0..config.annotators_per_doc {
            annotation.push(Task::Annotation(AnnotationTask {
                task_id: format!("hl/{doc_id}/{slot}"),
                doc_id: doc_id.clone(),
                budget: config.budget,
                sanity: sanity.clone(),
            }));
        }

        let summaries: Vec<_> = corpus.summaries_of(doc_id).collect();
        for s in &summaries {
            for slot in 0..config.judges_per_item {
                content.push(Task::Content(ContentJudgmentTask {
                    task_id: format!("ct/{}/{slot}", s.id),
                    doc_id: doc_id.clone(),
                    summary_id: s.id.clone(),
                    with_heatmap: true,
                }));
                if config.no_highlight_control {
                    content_nohl.push(Task::Content(ContentJudgmentTask {
                        task_id: format!("cn/{}/{slot}", s.id),
                        doc_id: doc_id.clone(),
                        summary_id: s.id.clone(),
                        with_heatmap: false,
                    }));
                }
            }
        }

        if summaries.is_empty() {
            continue;
        }
        let original = summaries
            .iter()
            .find(|s| s.system == config.reference_system)
            .unwrap_or(&summaries[0]);
        let triple_seed = derive_seed(config.seed, &format!("planted/{doc_id}"));
        let triple = make_sanity_summaries(&doc.text, &original.text, triple_seed, &config.sanity)?;

        for metric in [QualityMetric::Fluency, QualityMetric::Clarity] {
            for slot in 0..config.judges_per_item {
                let task_id = format!("{}/{doc_id}/{slot}", metric.kind());
                let seed = derive_seed(config.seed, &task_id);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut sources: Vec<(ItemSource, String)> = summaries
                    .iter()
                    .map(|s| {
                        (
                            ItemSource::Summary {
                                summary_id: s.id.clone(),
                            },
                            s.text.raw().to_owned(),
                        )
                    })
                    .chain([PlantTag::Good, PlantTag::Mediocre, PlantTag::Bad].map(|tag| {
                        (ItemSource::Planted { tag }, triple.get(tag).text.clone())
                    }))
                    .collect();
                sources.shuffle(&mut rng);
                let items = sources
                    .into_iter()
                    .enumerate()
                    .map(|(i, (source, text))| BatchItem {
                        item_id: format!("{task_id}#{i}"),
                        source,
                        text,
                    })
                    .collect();
                let batch = Task::Quality(QualityBatch {
                    task_id,
                    doc_id: doc_id.clone(),
                    metric,
                    items,
                    seed,
                    generator: config.sanity,
                });
                match metric {
                    QualityMetric::Fluency => fluency.push(batch),
                    QualityMetric::Clarity => clarity.push(batch),
                }
            }
        }
    }

    let mut tasks = Vec::new();
    for (label, mut group) in [
        ("highlight", annotation),
        ("content", content),
        ("content_nohl", content_nohl),
        ("fluency", fluency),
        ("clarity", clarity),
    ] {
        group.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &format!("order/{label}"))));
        tasks.extend(group);
    }
    Ok(TaskSet {
        config: config.clone(),
        tasks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SanityOutcome {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScore {
    pub item_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<PlantTag>,
    pub metric: Metric,
    pub value: f64,
}

/// One judge's accepted scores for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub task_id: String,
    pub judge_id: String,
    pub kind: TaskKind,
    pub doc_id: String,
    pub scores: Vec<ItemScore>,
    pub sanity: SanityOutcome,
    pub leased_at: DateTime<Utc>,
    pub submitted_at: DateTime<Utc>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_corpus, CorpusFile, DocumentRecord, SummaryRecord};
    use crate::text::{tokenize, TokenizerConfig};

    fn doc() -> TokenizedText {
        tokenize(
            "The council approved the new budget on Monday. Critics said the spending plans were reckless. \
             Officials expect the changes to take effect next year. London and Paris reacted calmly.",
            &TokenizerConfig::default(),
        )
    }

    fn summary() -> TokenizedText {
        tokenize("Council approves budget despite criticism.", &TokenizerConfig::default())
    }

    fn sorted(mut v: Vec<String>) -> Vec<String> {
        v.sort();
        v
    }

    #[test]
    fn planted_summaries() {
        let p = SanityParams::default();
        let t = make_sanity_summaries(&doc(), &summary(), 7, &p).unwrap();
        assert_eq!(t.good.text, summary().raw());
        assert_eq!(t, make_sanity_summaries(&doc(), &summary(), 7, &p).unwrap());
        assert_eq!(t.mediocre.sentences.len(), t.bad.sentences.len());
        for (m, b) in t.mediocre.sentences.iter().zip(&t.bad.sentences) {
            assert_eq!(sorted(m.clone()), sorted(b.clone()));
        }
        assert_ne!(t.mediocre.text, t.bad.text);
    }

    #[test]
    fn mediocre_differs_from_document_sentences() {
        let d = doc();
        let originals = raw_sentences(&d);
        for seed in 0..50 {
            let t = make_sanity_summaries(&d, &summary(), seed, &SanityParams::default()).unwrap();
            assert!((1..=2).contains(&t.mediocre.sentences.len()));
            assert!(
                t.mediocre.sentences.iter().any(|s| !originals.contains(s)),
                "seed {seed}: no edits applied"
            );
        }
    }

    #[test]
    fn too_short_document() {
        let one = tokenize("Only one sentence here.", &TokenizerConfig::default());
        assert_eq!(
            make_sanity_summaries(&one, &summary(), 1, &SanityParams::default()),
            Err(ProtocolError::DocumentTooShort { sentences: 1 })
        );
    }

    #[test]
    fn inflection_breaking() {
        assert_eq!(break_inflection("walking"), "walked");
        assert_eq!(break_inflection("approved"), "approving");
        assert_eq!(break_inflection("plans"), "plan");
        assert_eq!(break_inflection("new"), "news");
    }

    fn planted(bad: f64, mediocre: f64, good: f64) -> BTreeMap<PlantTag, f64> {
        [(PlantTag::Bad, bad), (PlantTag::Mediocre, mediocre), (PlantTag::Good, good)].into()
    }

    #[test]
    fn planted_order() {
        assert!(validate_quality_batch(&planted(20., 50., 80.)).unwrap().is_accepted());
        assert!(!validate_quality_batch(&planted(20., 85., 80.)).unwrap().is_accepted());
        assert!(!validate_quality_batch(&planted(50., 50., 80.)).unwrap().is_accepted());
        let mut missing = planted(1., 2., 3.);
        missing.remove(&PlantTag::Good);
        assert_eq!(
            validate_quality_batch(&missing),
            Err(ProtocolError::MissingPlantedScore(PlantTag::Good))
        );
    }

    #[test]
    fn sanity_answer_decides() {
        let d = doc();
        let task = AnnotationTask {
            task_id: "t".into(),
            doc_id: "d".into(),
            budget: Budget::tokens(30),
            sanity: SanityQuestion {
                statement: "s".into(),
                answer: true,
                machine_made: false,
            },
        };
        let h = |end| {
            HighlightSet::new(
                "j",
                "d",
                &d,
                &[crate::highlight::TokenSpan::new(0, end)],
                Budget::tokens(30),
                DateTime::UNIX_EPOCH,
            )
        };
        assert!(validate_annotation_submission(&task, true, h(30)).is_ok());
        assert_eq!(
            validate_annotation_submission(&task, false, h(30)),
            Err(RejectReason::SanityAnswerWrong)
        );
        assert!(matches!(
            validate_annotation_submission(&task, true, h(31)),
            Err(RejectReason::InvalidHighlight { .. })
        ));
        assert_eq!(
            validate_annotation_submission(&task, false, h(31)),
            Err(RejectReason::SanityAnswerWrong)
        );
    }

    #[test]
    fn heuristic_question_is_marked() {
        let mut answers = BTreeSet::new();
        for seed in 0..40 {
            let q = heuristic_sanity_question(&doc(), seed).unwrap();
            assert!(q.machine_made);
            answers.insert(q.answer);
        }
        assert_eq!(answers.len(), 2);
    }

    fn corpus(docs: usize, systems: &[&str]) -> Corpus {
        let documents = (0..docs)
            .map(|i| DocumentRecord {
                id: format!("d{i}"),
                text: doc().raw().to_owned(),
                sanity: None,
            })
            .collect();
        let summaries = (0..docs)
            .flat_map(|i| {
                systems.iter().map(move |s| SummaryRecord {
                    doc_id: format!("d{i}"),
                    system: s.to_string(),
                    text: format!("Summary {i} from {s}."),
                })
            })
            .collect();
        ingest_corpus(&CorpusFile::new(documents, summaries)).unwrap()
    }

    #[test]
    fn task_counts() {
        let c = corpus(50, &["a", "reference"]);
        let set = build_tasks(&c, &CampaignConfig::default()).unwrap();
        assert_eq!(set.count(TaskKind::Highlight), 500);

        let c = corpus(1, &["ptgen", "tconv", "reference"]);
        let set = build_tasks(&c, &CampaignConfig::default()).unwrap();
        assert_eq!(set.count(TaskKind::Content), 9);
        assert_eq!(set.count(TaskKind::ContentNoHighlight), 0);
        assert_eq!(set.count(TaskKind::Fluency), 3);
        assert_eq!(set.count(TaskKind::Clarity), 3);

        let cfg = CampaignConfig {
            no_highlight_control: true,
            ..Default::default()
        };
        assert_eq!(build_tasks(&c, &cfg).unwrap().count(TaskKind::ContentNoHighlight), 9);

        let cfg = CampaignConfig {
            judges_per_item: 0,
            ..Default::default()
        };
        assert!(matches!(build_tasks(&c, &cfg), Err(ProtocolError::InvalidConfig(_))));
    }

    #[test]
    fn missing_summary() {
        let mut file = corpus(2, &["a", "b"]).to_file();
        file.summaries.pop();
        let c = ingest_corpus(&file).unwrap();
        assert!(matches!(
            build_tasks(&c, &CampaignConfig::default()),
            Err(ProtocolError::MissingSummary { .. })
        ));
    }

    #[test]
    fn batches_are_single_metric_with_planted_trio() {
        let c = corpus(2, &["a", "reference"]);
        let set = build_tasks(&c, &CampaignConfig { seed: 3, ..Default::default() }).unwrap();
        for t in &set.tasks {
            if let Task::Quality(b) = t {
                for tag in [PlantTag::Good, PlantTag::Mediocre, PlantTag::Bad] {
                    assert!(b.planted_item(tag).is_some());
                }
                assert_eq!(b.items.len(), 5);
                for item in &b.items {
                    for word in ["good", "mediocre", "bad", "planted"] {
                        assert!(!item.item_id.contains(word) && !item.text.contains(word));
                    }
                }
            }
        }
        assert_eq!(set, build_tasks(&c, &CampaignConfig { seed: 3, ..Default::default() }).unwrap());
        assert_ne!(set, build_tasks(&c, &CampaignConfig { seed: 4, ..Default::default() }).unwrap());
    }

    #[test]
    fn task_kind_names() {
        for k in TaskKind::ALL {
            assert_eq!(k.as_str().parse::<TaskKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{k}\""));
        }
        assert!(matches!("bogus".parse::<TaskKind>(), Err(ProtocolError::UnknownTaskType(_))));
    }
}
