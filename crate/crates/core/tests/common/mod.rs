//! Toy corpus and scripted judges shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use highres::corpus::{ingest_corpus, Corpus, CorpusFile, DocumentRecord, SanityQuestion, SummaryRecord};
use highres::highlight::{Budget, TokenSpan};
use highres::protocol::{CampaignConfig, ItemSource, PlantTag, Task, TaskKind, TaskSet};
use highres::store::{Campaign, ManualClock, NextTask, Submission, SubmissionBody};

pub const JUDGES: [&str; 5] = ["j0", "j1", "j2", "j3", "liar"];

pub fn start_time() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2026-01-05T09:00:00Z").unwrap().to_utc()
}

pub fn toy_corpus() -> Corpus {
    let docs = [
        (
            "d1",
            "The river flooded the lower town on Monday. Rescue boats carried forty families to the school. \
             The mayor promised new walls before winter.",
        ),
        (
            "d2",
            "Orchard Lane bakery won the regional bread prize. Its owner, Ada Quince, baked through the night. \
             The shop will add a second oven in March.",
        ),
        (
            "d3",
            "A comet will pass close to Earth next week. Astronomers at Tarn Observatory expect it to be visible at dawn. \
             Clear skies are forecast for the north.",
        ),
    ];
    let summaries = [
        ("d1", "alpha", "The river flooded the lower town. Boats carried forty families to safety."),
        ("d1", "beta", "A mayor likes walls. The school is on Monday."),
        ("d2", "alpha", "Orchard Lane bakery won the regional bread prize. Ada Quince baked all night."),
        ("d2", "beta", "A bakery has an oven. March is a month."),
        ("d3", "alpha", "A comet passes close to Earth next week. It should be visible at dawn."),
        ("d3", "beta", "Skies are clear. Astronomers like the north."),
    ];
    let mut documents: Vec<DocumentRecord> = docs
        .iter()
        .map(|(id, text)| DocumentRecord {
            id: id.to_string(),
            text: text.to_string(),
            sanity: None,
        })
        .collect();
    documents[0].sanity = Some(SanityQuestion {
        statement: "Rescue boats carried families to the school.".into(),
        answer: true,
        machine_made: false,
    });
    let summaries = summaries
        .iter()
        .map(|(d, s, t)| SummaryRecord {
            doc_id: d.to_string(),
            system: s.to_string(),
            text: t.to_string(),
        })
        .collect();
    ingest_corpus(&CorpusFile::new(documents, summaries)).unwrap()
}

pub fn toy_config() -> CampaignConfig {
    CampaignConfig {
        seed: 7,
        annotators_per_doc: 3,
        judges_per_item: 2,
        budget: Budget::tokens(8),
        no_highlight_control: true,
        reference_system: "alpha".into(),
        ..Default::default()
    }
}

fn judge_index(judge: &str) -> usize {
    JUDGES.iter().position(|j| *j == judge).unwrap_or(0)
}

/// What the scripted `judge` submits for `task_id`. Honest judges answer
/// the sanity question correctly and keep planted summaries in order;
/// `liar` does neither.
pub fn respond(corpus: &Corpus, tasks: &TaskSet, judge: &str, task_id: &str) -> SubmissionBody {
    let i = judge_index(judge);
    let liar = judge == "liar";
    let task = tasks.tasks.iter().find(|t| t.id() == task_id).expect("served task exists");
    match task {
        Task::Annotation(t) => {
            let len = corpus.documents[&t.doc_id].text.len();
            let start = (3 * i) % (len - 5);
            SubmissionBody::Highlight {
                spans: vec![TokenSpan::new(start, start + 5)],
                sanity_answer: t.sanity.answer != liar,
            }
        }
        Task::Content(t) => {
            let good = corpus.summaries[&t.summary_id].system == "alpha";
            let shift = if t.with_heatmap { 0.0 } else { -5.0 };
            let base = if good { (80.0, 70.0) } else { (50.0, 40.0) };
            SubmissionBody::Content {
                precision: base.0 + i as f64 + shift,
                recall: base.1 + i as f64 + shift,
            }
        }
        Task::Quality(b) => {
            let scores: BTreeMap<String, f64> = b
                .items
                .iter()
                .map(|item| {
                    let v = match &item.source {
                        ItemSource::Planted { tag: PlantTag::Good } => 90.0,
                        ItemSource::Planted { tag: PlantTag::Mediocre } => 50.0,
                        ItemSource::Planted { tag: PlantTag::Bad } => {
                            if liar {
                                95.0
                            } else {
                                10.0
                            }
                        }
                        ItemSource::Summary { summary_id } => {
                            let good = corpus.summaries[summary_id].system == "alpha";
                            let base = if good { 75.0 } else { 45.0 };
                            base + (i * 2) as f64 + if b.metric.kind() == TaskKind::Clarity { 1.0 } else { 0.0 }
                        }
                    };
                    (item.item_id.clone(), v)
                })
                .collect();
            SubmissionBody::Quality { scores }
        }
    }
}

/// Drives every task of `campaign` to completion in-process. Returns
/// (accepted, rejected) submission counts.
pub fn run_scripted(campaign: &mut Campaign, clock: &ManualClock) -> (usize, usize) {
    use highres::store::Clock;
    let corpus = campaign.corpus().clone();
    let tasks = campaign.tasks().clone();
    let (mut accepted, mut rejected) = (0, 0);
    for kind in TaskKind::ALL {
        loop {
            let mut progressed = false;
            for judge in JUDGES {
                clock.advance(Duration::seconds(1));
                let NextTask::Task { task } = campaign.serve_next_task(judge, kind, clock.now()) else {
                    continue;
                };
                progressed = true;
                let body = respond(&corpus, &tasks, judge, task.task_id());
                let verdict = campaign
                    .submit(
                        Submission {
                            judge_id: judge.into(),
                            task_id: task.task_id().into(),
                            body,
                        },
                        clock.now(),
                    )
                    .unwrap();
                if verdict.is_accepted() {
                    accepted += 1;
                } else {
                    rejected += 1;
                }
            }
            if !progressed {
                break;
            }
        }
    }
    (accepted, rejected)
}
