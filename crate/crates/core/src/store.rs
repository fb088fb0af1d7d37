//! Campaign state: task leasing, submissions, and the append-only event log
//! that makes the state reproducible.
//!
//! Every submission outcome (accepted highlight, accepted judgment, or
//! rejection) is appended to the log before it is applied to memory, and the
//! in-memory state is nothing more than the fold of the log. Leases are
//! transient and are not logged.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::highlight::{HighlightCorpusEntry, HighlightSet, TokenSpan};
use crate::protocol::{
    check_score, validate_annotation_submission, validate_quality_batch, ItemScore, ItemSource, JudgmentRecord, Metric,
    RejectReason, SanityOutcome, Task, TaskKind, TaskSet, Verdict,
};

pub const DEFAULT_LEASE_MINUTES: i64 = 30;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("task {task_id:?} is not leased to judge {judge_id:?}")]
    NotLeased { task_id: String, judge_id: String },
    #[error("lease on task {0:?} expired")]
    LeaseExpired(String),
    #[error("event log I/O: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt event log {file}:{line}: {detail}")]
    Corrupt { file: String, line: usize, detail: String },
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self(Mutex::new(start))
    }

    pub fn advance(&self, by: Duration) {
        *self.0.lock().unwrap() += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SubmissionBody {
    Highlight { spans: Vec<TokenSpan>, sanity_answer: bool },
    Content { precision: f64, recall: f64 },
    Quality { scores: BTreeMap<String, f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub judge_id: String,
    pub task_id: String,
    #[serde(flatten)]
    pub body: SubmissionBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    HighlightSubmitted {
        seq: u64,
        at: DateTime<Utc>,
        task_id: String,
        sanity_answer: bool,
        highlight: HighlightSet,
    },
    JudgmentSubmitted {
        seq: u64,
        at: DateTime<Utc>,
        record: JudgmentRecord,
    },
    SubmissionRejected {
        seq: u64,
        at: DateTime<Utc>,
        submission: Submission,
        #[serde(flatten)]
        reason: RejectReason,
    },
}

impl Event {
    pub fn seq(&self) -> u64 {
        match self {
            Self::HighlightSubmitted { seq, .. }
            | Self::JudgmentSubmitted { seq, .. }
            | Self::SubmissionRejected { seq, .. } => *seq,
        }
    }

    fn file_name(&self) -> &'static str {
        match self {
            Self::HighlightSubmitted { .. } => HIGHLIGHTS_FILE,
            Self::JudgmentSubmitted { .. } => JUDGMENTS_FILE,
            Self::SubmissionRejected { .. } => REJECTIONS_FILE,
        }
    }

    fn task_and_judge(&self) -> (&str, &str) {
        match self {
            Self::HighlightSubmitted { task_id, highlight, .. } => (task_id, &highlight.annotator_id),
            Self::JudgmentSubmitted { record, .. } => (&record.task_id, &record.judge_id),
            Self::SubmissionRejected { submission, .. } => (&submission.task_id, &submission.judge_id),
        }
    }
}

pub const HIGHLIGHTS_FILE: &str = "highlights.ndjson";
pub const JUDGMENTS_FILE: &str = "judgments.ndjson";
pub const REJECTIONS_FILE: &str = "rejections.ndjson";
const LOG_FILES: [&str; 3] = [HIGHLIGHTS_FILE, JUDGMENTS_FILE, REJECTIONS_FILE];

/// Newline-delimited event records, one file per record type. Records carry
/// a global sequence number so the three files can be merged on replay.
#[derive(Debug)]
pub struct EventLog {
    dir: Option<PathBuf>,
    files: HashMap<&'static str, File>,
    events: Vec<Event>,
}

impl EventLog {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            files: HashMap::new(),
            events: Vec::new(),
        }
    }

    /// Opens (creating if needed) a log directory and loads its records.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut events = Vec::new();
        let mut files = HashMap::new();
        for name in LOG_FILES {
            let path = dir.join(name);
            if path.exists() {
                let text = fs::read_to_string(&path)?;
                let complete = text.ends_with('\n');
                let lines: Vec<&str> = text.lines().collect();
                for (i, line) in lines.iter().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    match serde_json::from_str::<Event>(line) {
                        Ok(e) if e.file_name() == name => events.push(e),
                        Ok(_) => {
                            return Err(StoreError::Corrupt {
                                file: name.into(),
                                line: i + 1,
                                detail: "record type does not belong in this file".into(),
                            })
                        }
                        // A torn final write from a crash: the record was never acknowledged.
                        Err(_) if i + 1 == lines.len() && !complete => {
                            let keep = text.len() - line.len();
                            OpenOptions::new().write(true).open(&path)?.set_len(keep as u64)?;
                        }
                        Err(e) => {
                            return Err(StoreError::Corrupt {
                                file: name.into(),
                                line: i + 1,
                                detail: e.to_string(),
                            })
                        }
                    }
                }
            }
            files.insert(name, OpenOptions::new().create(true).append(true).open(&path)?);
        }
        events.sort_by_key(Event::seq);
        for pair in events.windows(2) {
            if pair[0].seq() == pair[1].seq() {
                return Err(StoreError::Corrupt {
                    file: dir.display().to_string(),
                    line: 0,
                    detail: format!("sequence number {} used twice", pair[0].seq()),
                });
            }
        }
        Ok(Self {
            dir: Some(dir),
            files,
            events,
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn next_seq(&self) -> u64 {
        self.events.last().map_or(0, |e| e.seq() + 1)
    }

    /// Writes and syncs the record, then keeps it in memory.
    pub fn append(&mut self, event: Event) -> Result<(), StoreError> {
        if let Some(file) = self.files.get_mut(event.file_name()) {
            let mut line = serde_json::to_string(&event).expect("event serializes");
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.sync_data()?;
        }
        self.events.push(event);
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Lease {
    judge_id: String,
    leased_at: DateTime<Utc>,
    expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TokenView {
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DocumentView {
    pub id: String,
    pub text: String,
    pub tokens: Vec<TokenView>,
    /// Share of annotators covering each token; absent before any highlight
    /// has been accepted.
    pub heatmap: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ItemView {
    pub item_id: String,
    pub text: String,
}

/// What a judge receives: everything needed to do the task, nothing that
/// reveals systems or planted summaries.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TaskView {
    Highlight {
        task_id: String,
        document: DocumentView,
        budget: usize,
        question: String,
        lease_expires_at: DateTime<Utc>,
    },
    Content {
        task_id: String,
        document: DocumentView,
        summary: String,
        lease_expires_at: DateTime<Utc>,
    },
    Quality {
        task_id: String,
        metric: TaskKind,
        items: Vec<ItemView>,
        lease_expires_at: DateTime<Utc>,
    },
}

impl TaskView {
    pub fn task_id(&self) -> &str {
        match self {
            Self::Highlight { task_id, .. } | Self::Content { task_id, .. } | Self::Quality { task_id, .. } => task_id,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextTask {
    Task { task: TaskView },
    /// Nothing left that this judge may ever take.
    Exhausted,
    /// Remaining tasks are leased to others or waiting on highlights.
    Pending,
}

/// A running campaign: corpus, tasks, leases and the fold of the event log.
#[derive(Debug)]
pub struct Campaign {
    corpus: Corpus,
    tasks: TaskSet,
    task_index: HashMap<String, usize>,
    lease_timeout: Duration,
    leases: HashMap<usize, Lease>,
    expired: HashSet<(usize, String)>,
    history: HashMap<String, HashSet<String>>,
    completed: Vec<bool>,
    highlights: BTreeMap<String, Vec<HighlightSet>>,
    judgments: Vec<JudgmentRecord>,
    log: EventLog,
}

impl Campaign {
    /// Builds campaign state and replays `log` into it.
    pub fn open(corpus: Corpus, tasks: TaskSet, log: EventLog) -> Result<Self, StoreError> {
        let task_index = tasks
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id().to_owned(), i))
            .collect();
        let completed = vec![false; tasks.tasks.len()];
        let mut campaign = Self {
            corpus,
            tasks,
            task_index,
            lease_timeout: Duration::minutes(DEFAULT_LEASE_MINUTES),
            leases: HashMap::new(),
            expired: HashSet::new(),
            history: HashMap::new(),
            completed,
            highlights: BTreeMap::new(),
            judgments: Vec::new(),
            log: EventLog::in_memory(),
        };
        for (line, event) in log.events().iter().enumerate() {
            campaign.apply(event).map_err(|detail| StoreError::Corrupt {
                file: "event log".into(),
                line: line + 1,
                detail,
            })?;
        }
        campaign.log = log;
        Ok(campaign)
    }

    pub fn set_lease_timeout(&mut self, timeout: Duration) {
        self.lease_timeout = timeout;
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn tasks(&self) -> &TaskSet {
        &self.tasks
    }

    pub fn events(&self) -> &[Event] {
        self.log.events()
    }

    /// Accepted highlights per document, in acceptance order.
    pub fn highlights(&self) -> &BTreeMap<String, Vec<HighlightSet>> {
        &self.highlights
    }

    /// Accepted judgments, in acceptance order.
    pub fn judgments(&self) -> &[JudgmentRecord] {
        &self.judgments
    }

    pub fn accepted_count(&self, kind: TaskKind) -> usize {
        self.tasks
            .tasks
            .iter()
            .zip(&self.completed)
            .filter(|(t, &done)| done && t.kind() == kind)
            .count()
    }

    fn apply(&mut self, event: &Event) -> Result<(), String> {
        let (task_id, judge_id) = event.task_and_judge();
        let &idx = self
            .task_index
            .get(task_id)
            .ok_or_else(|| format!("unknown task {task_id:?}"))?;
        let item = self.tasks.tasks[idx].item_key();
        match event {
            Event::HighlightSubmitted { highlight, .. } => {
                self.mark_completed(idx)?;
                self.highlights
                    .entry(highlight.doc_id.clone())
                    .or_default()
                    .push(highlight.clone());
            }
            Event::JudgmentSubmitted { record, .. } => {
                self.mark_completed(idx)?;
                self.judgments.push(record.clone());
            }
            Event::SubmissionRejected { .. } => {}
        }
        self.history.entry(judge_id.to_owned()).or_default().insert(item);
        Ok(())
    }

    fn mark_completed(&mut self, idx: usize) -> Result<(), String> {
        if std::mem::replace(&mut self.completed[idx], true) {
            Err(format!("task {:?} accepted twice", self.tasks.tasks[idx].id()))
        } else {
            Ok(())
        }
    }

    fn sweep_leases(&mut self, now: DateTime<Utc>) {
        let expired: Vec<usize> = self
            .leases
            .iter()
            .filter(|(_, l)| l.expires_at <= now)
            .map(|(&i, _)| i)
            .collect();
        for i in expired {
            let lease = self.leases.remove(&i).expect("present");
            self.expired.insert((i, lease.judge_id));
        }
    }

    fn entry(&self, doc_id: &str) -> Option<HighlightCorpusEntry> {
        let doc = self.corpus.documents.get(doc_id)?;
        let highlights = self.highlights.get(doc_id).cloned().unwrap_or_default();
        Some(HighlightCorpusEntry {
            doc_id: doc_id.to_owned(),
            doc: doc.text.clone(),
            highlights,
            budget: self.tasks.config.budget,
        })
    }

    /// Document tokens and current heatmap.
    pub fn document_view(&self, doc_id: &str) -> Option<DocumentView> {
        let entry = self.entry(doc_id)?;
        let tokens = entry
            .doc
            .tokens()
            .iter()
            .enumerate()
            .map(|(i, t)| TokenView {
                text: entry.doc.raw_token(i).to_owned(),
                char_start: t.char_start,
                char_end: t.char_end,
            })
            .collect();
        Some(DocumentView {
            id: doc_id.to_owned(),
            text: entry.doc.raw().to_owned(),
            tokens,
            heatmap: entry.heatmap_weights().ok(),
        })
    }

    fn view(&self, idx: usize, expires: DateTime<Utc>) -> TaskView {
        let task = &self.tasks.tasks[idx];
        let doc = || self.document_view(task.doc_id()).expect("tasks reference corpus documents");
        match task {
            Task::Annotation(t) => TaskView::Highlight {
                task_id: t.task_id.clone(),
                document: DocumentView { heatmap: None, ..doc() },
                budget: t.budget.limit,
                question: t.sanity.statement.clone(),
                lease_expires_at: expires,
            },
            Task::Content(t) => {
                let mut document = doc();
                if !t.with_heatmap {
                    document.heatmap = None;
                }
                TaskView::Content {
                    task_id: t.task_id.clone(),
                    document,
                    summary: self.corpus.summaries[&t.summary_id].text.raw().to_owned(),
                    lease_expires_at: expires,
                }
            }
            Task::Quality(b) => TaskView::Quality {
                task_id: b.task_id.clone(),
                metric: b.metric.kind(),
                items: b
                    .items
                    .iter()
                    .map(|i| ItemView {
                        item_id: i.item_id.clone(),
                        text: i.text.clone(),
                    })
                    .collect(),
                lease_expires_at: expires,
            },
        }
    }

    fn servable(&self, idx: usize) -> bool {
        match &self.tasks.tasks[idx] {
            Task::Content(t) if t.with_heatmap => self.highlights.get(&t.doc_id).is_some_and(|h| !h.is_empty()),
            _ => true,
        }
    }

    /// Leases the next task of `kind` to `judge_id`. A judge polling again
    /// while holding a live lease gets the same task back.
    pub fn serve_next_task(&mut self, judge_id: &str, kind: TaskKind, now: DateTime<Utc>) -> NextTask {
        self.sweep_leases(now);
        if let Some((&idx, lease)) = self
            .leases
            .iter()
            .filter(|(&i, l)| l.judge_id == judge_id && self.tasks.tasks[i].kind() == kind)
            .min_by_key(|(&i, _)| i)
        {
            let expires = lease.expires_at;
            return NextTask::Task {
                task: self.view(idx, expires),
            };
        }
        let done = self.history.get(judge_id);
        let mut pending = false;
        for idx in 0..self.tasks.tasks.len() {
            let task = &self.tasks.tasks[idx];
            if task.kind() != kind || self.completed[idx] {
                continue;
            }
            if done.is_some_and(|d| d.contains(&task.item_key())) {
                continue;
            }
            if self.leases.contains_key(&idx) || !self.servable(idx) {
                pending = true;
                continue;
            }
            let expires = now + self.lease_timeout;
            self.leases.insert(
                idx,
                Lease {
                    judge_id: judge_id.to_owned(),
                    leased_at: now,
                    expires_at: expires,
                },
            );
            self.expired.remove(&(idx, judge_id.to_owned()));
            self.history
                .entry(judge_id.to_owned())
                .or_default()
                .insert(task.item_key());
            return NextTask::Task {
                task: self.view(idx, expires),
            };
        }
        if pending {
            NextTask::Pending
        } else {
            NextTask::Exhausted
        }
    }

    /// Validates a submission against its leased task, logs the outcome, and
    /// applies it.
    pub fn submit(&mut self, submission: Submission, now: DateTime<Utc>) -> Result<Verdict, StoreError> {
        let &idx = self
            .task_index
            .get(&submission.task_id)
            .ok_or_else(|| StoreError::UnknownTask(submission.task_id.clone()))?;
        match self.leases.get(&idx) {
            Some(l) if l.judge_id == submission.judge_id && l.expires_at > now => {}
            Some(l) if l.judge_id == submission.judge_id => {
                self.leases.remove(&idx);
                return Err(StoreError::LeaseExpired(submission.task_id));
            }
            _ if self.expired.remove(&(idx, submission.judge_id.clone())) => {
                return Err(StoreError::LeaseExpired(submission.task_id));
            }
            _ => {
                return Err(StoreError::NotLeased {
                    task_id: submission.task_id,
                    judge_id: submission.judge_id,
                })
            }
        }
        let lease = self.leases[&idx].clone();
        let seq = self.log.next_seq();
        let event = match self.evaluate(idx, &submission, &lease, now) {
            Ok(accepted) => accepted(seq),
            Err(reason) => Event::SubmissionRejected {
                seq,
                at: now,
                submission,
                reason,
            },
        };
        let verdict = match &event {
            Event::SubmissionRejected { reason, .. } => Verdict::Rejected(reason.clone()),
            _ => Verdict::Accepted,
        };
        self.log.append(event.clone())?;
        self.apply(&event).expect("validated event applies");
        self.leases.remove(&idx);
        Ok(verdict)
    }

    #[allow(clippy::type_complexity)]
    fn evaluate(
        &self,
        idx: usize,
        submission: &Submission,
        lease: &Lease,
        now: DateTime<Utc>,
    ) -> Result<Box<dyn FnOnce(u64) -> Event>, RejectReason> {
        let task = &self.tasks.tasks[idx];
        let judge_id = submission.judge_id.clone();
        let leased_at = lease.leased_at;
        match (task, &submission.body) {
            (Task::Annotation(t), SubmissionBody::Highlight { spans, sanity_answer }) => {
                let doc = &self.corpus.documents[&t.doc_id].text;
                let highlight = validate_annotation_submission(
                    t,
                    *sanity_answer,
                    HighlightSet::new(judge_id, t.doc_id.clone(), doc, spans, t.budget, now),
                )?;
                let task_id = t.task_id.clone();
                let sanity_answer = *sanity_answer;
                Ok(Box::new(move |seq| Event::HighlightSubmitted {
                    seq,
                    at: now,
                    task_id,
                    sanity_answer,
                    highlight,
                }))
            }
            (Task::Content(t), SubmissionBody::Content { precision, recall }) => {
                check_score(*precision)?;
                check_score(*recall)?;
                let score = |metric, value| ItemScore {
                    item_id: t.summary_id.clone(),
                    summary_id: Some(t.summary_id.clone()),
                    planted: None,
                    metric,
                    value,
                };
                let record = JudgmentRecord {
                    task_id: t.task_id.clone(),
                    judge_id,
                    kind: task.kind(),
                    doc_id: t.doc_id.clone(),
                    scores: vec![
                        score(Metric::ContentPrecision, *precision),
                        score(Metric::ContentRecall, *recall),
                    ],
                    sanity: SanityOutcome::NotApplicable,
                    leased_at,
                    submitted_at: now,
                };
                Ok(Box::new(move |seq| Event::JudgmentSubmitted { seq, at: now, record }))
            }
            (Task::Quality(b), SubmissionBody::Quality { scores }) => {
                if let Some(unknown) = scores.keys().find(|k| !b.items.iter().any(|i| &i.item_id == *k)) {
                    return Err(RejectReason::UnknownItem {
                        item_id: unknown.clone(),
                    });
                }
                let missing: Vec<String> = b
                    .items
                    .iter()
                    .filter(|i| !scores.contains_key(&i.item_id))
                    .map(|i| i.item_id.clone())
                    .collect();
                if !missing.is_empty() {
                    return Err(RejectReason::IncompleteBatch { missing });
                }
                for v in scores.values() {
                    check_score(*v)?;
                }
                let mut planted = BTreeMap::new();
                let mut item_scores = Vec::with_capacity(b.items.len());
                for item in &b.items {
                    let value = scores[&item.item_id];
                    let (summary_id, tag) = match &item.source {
                        ItemSource::Summary { summary_id } => (Some(summary_id.clone()), None),
                        ItemSource::Planted { tag } => {
                            planted.insert(*tag, value);
                            (None, Some(*tag))
                        }
                    };
                    item_scores.push(ItemScore {
                        item_id: item.item_id.clone(),
                        summary_id,
                        planted: tag,
                        metric: b.metric.into(),
                        value,
                    });
                }
                match validate_quality_batch(&planted).expect("every batch carries the planted trio") {
                    Verdict::Accepted => {}
                    Verdict::Rejected(r) => return Err(r),
                }
                let record = JudgmentRecord {
                    task_id: b.task_id.clone(),
                    judge_id,
                    kind: task.kind(),
                    doc_id: b.doc_id.clone(),
                    scores: item_scores,
                    sanity: SanityOutcome::Pass,
                    leased_at,
                    submitted_at: now,
                };
                Ok(Box::new(move |seq| Event::JudgmentSubmitted { seq, at: now, record }))
            }
            _ => Err(RejectReason::WrongPayload { expected: task.kind() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_corpus, CorpusFile, DocumentRecord, SanityQuestion, SummaryRecord};
    use crate::protocol::{build_tasks, CampaignConfig, PlantTag};

    fn corpus() -> Corpus {
        let documents = (0..2)
            .map(|i| DocumentRecord {
                id: format!("d{i}"),
                text: "The mayor opened a bridge. Traffic fell sharply. Residents cheered the result.".into(),
                sanity: Some(SanityQuestion {
                    statement: "The mayor opened a bridge.".into(),
                    answer: true,
                    machine_made: false,
                }),
            })
            .collect();
        let summaries = (0..2)
            .flat_map(|i| {
                ["sys", "reference"].map(|s| SummaryRecord {
                    doc_id: format!("d{i}"),
                    system: s.into(),
                    text: format!("A bridge opened ({s})."),
                })
            })
            .collect();
        ingest_corpus(&CorpusFile::new(documents, summaries)).unwrap()
    }

    fn campaign(log: EventLog) -> Campaign {
        let c = corpus();
        let cfg = CampaignConfig {
            annotators_per_doc: 2,
            judges_per_item: 2,
            budget: crate::highlight::Budget::tokens(5),
            seed: 11,
            ..Default::default()
        };
        let tasks = build_tasks(&c, &cfg).unwrap();
        Campaign::open(c, tasks, log).unwrap()
    }

    fn t0() -> DateTime<Utc> {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    fn lease(c: &mut Campaign, judge: &str, kind: TaskKind, now: DateTime<Utc>) -> TaskView {
        match c.serve_next_task(judge, kind, now) {
            NextTask::Task { task } => task,
            other => panic!("expected a task, got {other:?}"),
        }
    }

    fn highlight(judge: &str, task: &TaskView, answer: bool, spans: Vec<TokenSpan>) -> Submission {
        Submission {
            judge_id: judge.into(),
            task_id: task.task_id().into(),
            body: SubmissionBody::Highlight {
                spans,
                sanity_answer: answer,
            },
        }
    }

    #[test]
    fn lease_is_sticky_and_expires() {
        let mut c = campaign(EventLog::in_memory());
        let a = lease(&mut c, "j1", TaskKind::Highlight, t0());
        let b = lease(&mut c, "j1", TaskKind::Highlight, t0() + Duration::minutes(5));
        assert_eq!(a.task_id(), b.task_id());

        let later = t0() + Duration::minutes(31);
        let sub = highlight("j1", &a, true, vec![TokenSpan::new(0, 2)]);
        assert!(matches!(c.submit(sub.clone(), later), Err(StoreError::LeaseExpired(_))));
        // the slot is back in the pool for another judge
        let other = lease(&mut c, "j2", TaskKind::Highlight, later);
        assert_eq!(other.task_id(), a.task_id());
    }

    #[test]
    fn expired_lease_reported_after_sweep() {
        let mut c = campaign(EventLog::in_memory());
        let a = lease(&mut c, "j1", TaskKind::Highlight, t0());
        let later = t0() + Duration::minutes(45);
        let _ = c.serve_next_task("j2", TaskKind::Highlight, later);
        let sub = highlight("j1", &a, true, vec![TokenSpan::new(0, 2)]);
        assert!(matches!(c.submit(sub, later), Err(StoreError::LeaseExpired(_))));
    }

    #[test]
    fn submission_errors() {
        let mut c = campaign(EventLog::in_memory());
        let a = lease(&mut c, "j1", TaskKind::Highlight, t0());
        let mut sub = highlight("j2", &a, true, vec![TokenSpan::new(0, 2)]);
        assert!(matches!(c.submit(sub.clone(), t0()), Err(StoreError::NotLeased { .. })));
        sub.task_id = "nope".into();
        assert!(matches!(c.submit(sub, t0()), Err(StoreError::UnknownTask(_))));
        assert!(c.events().is_empty());
    }

    #[test]
    fn accept_and_reject_are_logged() {
        let mut c = campaign(EventLog::in_memory());
        let a = lease(&mut c, "j1", TaskKind::Highlight, t0());
        let v = c.submit(highlight("j1", &a, false, vec![TokenSpan::new(0, 2)]), t0()).unwrap();
        assert_eq!(v, Verdict::Rejected(RejectReason::SanityAnswerWrong));
        let b = lease(&mut c, "j1", TaskKind::Highlight, t0());
        assert_ne!(a.task_id(), b.task_id(), "no repeat of the same document");
        let v = c.submit(highlight("j1", &b, true, vec![TokenSpan::new(0, 9)]), t0()).unwrap();
        assert!(matches!(v, Verdict::Rejected(RejectReason::InvalidHighlight { .. })));
        let c2 = lease(&mut c, "j3", TaskKind::Highlight, t0());
        assert!(c.submit(highlight("j3", &c2, true, vec![TokenSpan::new(0, 5)]), t0()).unwrap().is_accepted());
        assert_eq!(c.events().len(), 3);
        assert_eq!(c.accepted_count(TaskKind::Highlight), 1);
        // j1 has seen both documents
        assert!(matches!(c.serve_next_task("j1", TaskKind::Highlight, t0()), NextTask::Exhausted));
    }

    #[test]
    fn content_waits_for_highlights() {
        let mut c = campaign(EventLog::in_memory());
        assert!(matches!(c.serve_next_task("j", TaskKind::Content, t0()), NextTask::Pending));
        let a = lease(&mut c, "h", TaskKind::Highlight, t0());
        c.submit(highlight("h", &a, true, vec![TokenSpan::new(0, 3)]), t0()).unwrap();
        match lease(&mut c, "j", TaskKind::Content, t0()) {
            TaskView::Content { document, .. } => {
                let heat = document.heatmap.unwrap();
                assert_eq!(heat[0], 1.0);
                assert_eq!(heat[4], 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    fn planted_scores(c: &Campaign, task_id: &str, order: [f64; 3]) -> BTreeMap<String, f64> {
        let Task::Quality(b) = &c.tasks().tasks[c.task_index[task_id]] else { unreachable!() };
        b.items
            .iter()
            .map(|i| {
                let v = match &i.source {
                    ItemSource::Planted { tag: PlantTag::Bad } => order[0],
                    ItemSource::Planted { tag: PlantTag::Mediocre } => order[1],
                    ItemSource::Planted { tag: PlantTag::Good } => order[2],
                    ItemSource::Summary { .. } => 60.0,
                };
                (i.item_id.clone(), v)
            })
            .collect()
    }

    #[test]
    fn quality_batch_rules() {
        let mut c = campaign(EventLog::in_memory());
        let t = lease(&mut c, "q", TaskKind::Fluency, t0());
        let TaskView::Quality { items, metric, .. } = &t else { panic!() };
        assert_eq!(*metric, TaskKind::Fluency);
        assert_eq!(items.len(), 5);

        let mut partial = planted_scores(&c, t.task_id(), [20., 50., 80.]);
        let first = partial.keys().next().unwrap().clone();
        partial.remove(&first);
        let sub = |scores| Submission {
            judge_id: "q".into(),
            task_id: t.task_id().into(),
            body: SubmissionBody::Quality { scores },
        };
        let v = c.submit(sub(partial), t0()).unwrap();
        assert!(matches!(v, Verdict::Rejected(RejectReason::IncompleteBatch { .. })));

        let t = lease(&mut c, "q2", TaskKind::Fluency, t0());
        let sub = |scores| Submission {
            judge_id: "q2".into(),
            task_id: t.task_id().into(),
            body: SubmissionBody::Quality { scores },
        };
        let bad_order = planted_scores(&c, t.task_id(), [50., 50., 80.]);
        assert!(!c.submit(sub(bad_order), t0()).unwrap().is_accepted());

        let t = lease(&mut c, "q3", TaskKind::Fluency, t0());
        let good = planted_scores(&c, t.task_id(), [20., 50., 80.]);
        let v = c
            .submit(
                Submission {
                    judge_id: "q3".into(),
                    task_id: t.task_id().into(),
                    body: SubmissionBody::Quality { scores: good },
                },
                t0(),
            )
            .unwrap();
        assert!(v.is_accepted());
        let rec = c.judgments().last().unwrap();
        assert_eq!(rec.sanity, SanityOutcome::Pass);
        assert_eq!(rec.scores.iter().filter(|s| s.planted.is_some()).count(), 3);
    }

    #[test]
    fn wrong_payload_kind_is_rejected() {
        let mut c = campaign(EventLog::in_memory());
        let t = lease(&mut c, "q", TaskKind::Clarity, t0());
        let v = c
            .submit(
                Submission {
                    judge_id: "q".into(),
                    task_id: t.task_id().into(),
                    body: SubmissionBody::Content {
                        precision: 50.,
                        recall: 50.,
                    },
                },
                t0(),
            )
            .unwrap();
        assert_eq!(
            v,
            Verdict::Rejected(RejectReason::WrongPayload {
                expected: TaskKind::Clarity
            })
        );
    }

    #[test]
    fn file_log_replays_after_restart() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = campaign(EventLog::open(dir.path()).unwrap());
        for judge in ["a", "b", "c"] {
            let t = lease(&mut c, judge, TaskKind::Highlight, t0());
            c.submit(highlight(judge, &t, judge != "b", vec![TokenSpan::new(1, 4)]), t0())
                .unwrap();
        }
        let before = (c.highlights().clone(), c.judgments().to_vec(), c.completed.clone(), c.history.clone());
        drop(c);

        let reopened = campaign(EventLog::open(dir.path()).unwrap());
        let after = (
            reopened.highlights().clone(),
            reopened.judgments().to_vec(),
            reopened.completed.clone(),
            reopened.history.clone(),
        );
        assert_eq!(before, after);
        assert_eq!(reopened.events().len(), 3);
        assert_eq!(reopened.log.next_seq(), 3);
    }

    #[test]
    fn torn_trailing_record_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = campaign(EventLog::open(dir.path()).unwrap());
        let t = lease(&mut c, "a", TaskKind::Highlight, t0());
        c.submit(highlight("a", &t, true, vec![TokenSpan::new(0, 1)]), t0()).unwrap();
        drop(c);
        let path = dir.path().join(HIGHLIGHTS_FILE);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("{\"event\":\"highlight_sub");
        fs::write(&path, &text).unwrap();
        let log = EventLog::open(dir.path()).unwrap();
        assert_eq!(log.events().len(), 1);
        assert!(fs::read_to_string(&path).unwrap().ends_with('\n'));

        fs::write(&path, "garbage\n").unwrap();
        assert!(matches!(EventLog::open(dir.path()), Err(StoreError::Corrupt { .. })));
    }
}
