//! A complete desk-scale campaign: generate tasks for the sample corpus,
//! let scripted judges work through them, and print the report tables.
//! Pass `--serve` to expose the same campaign over HTTP instead.
//!
//! ```text
//! cargo run --example desk_campaign
//! cargo run --example desk_campaign -- --serve 127.0.0.1:8080
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::Utc;
use highres::protocol::{build_tasks, CampaignConfig, ItemSource, PlantTag, Task, TaskKind};
use highres::report::{campaign_report, Format};
use highres::server::{serve, AppState};
use highres::store::{Campaign, EventLog, NextTask, Submission, SubmissionBody, SystemClock};
use highres::{Budget, Corpus, TokenSpan};

const CORPUS: &str = include_str!("data/news.json");

fn answer(corpus: &Corpus, task: &Task, judge: usize) -> SubmissionBody {
    let quality = |system: &str| match system {
        "reference" => 85.0,
        "ptgen" => 70.0,
        _ => 45.0,
    };
    match task {
        Task::Annotation(t) => {
            let len = corpus.documents[&t.doc_id].text.len();
            let start = (judge * 4) % (len - 10);
            SubmissionBody::Highlight {
                spans: vec![TokenSpan::new(start, start + 6), TokenSpan::new(start + 8, start + 10)],
                sanity_answer: t.sanity.answer,
            }
        }
        Task::Content(t) => {
            let q = quality(&corpus.summaries[&t.summary_id].system) + judge as f64;
            SubmissionBody::Content {
                precision: q,
                recall: q - 15.0,
            }
        }
        Task::Quality(b) => SubmissionBody::Quality {
            scores: b
                .items
                .iter()
                .map(|i| {
                    let v = match &i.source {
                        ItemSource::Planted { tag: PlantTag::Good } => 95.0,
                        ItemSource::Planted { tag: PlantTag::Mediocre } => 40.0,
                        ItemSource::Planted { tag: PlantTag::Bad } => 5.0,
                        ItemSource::Summary { summary_id } => quality(&corpus.summaries[summary_id].system),
                    };
                    (i.item_id.clone(), v - judge as f64)
                })
                .collect::<BTreeMap<_, _>>(),
        },
    }
}

fn main() {
    let corpus = Corpus::from_json(CORPUS.as_bytes()).unwrap();
    let config = CampaignConfig {
        seed: 1,
        annotators_per_doc: 4,
        judges_per_item: 3,
        budget: Budget::tokens(10),
        ..Default::default()
    };
    let tasks = build_tasks(&corpus, &config).unwrap();
    println!("{} tasks for {} documents", tasks.tasks.len(), corpus.documents.len());
    let mut campaign = Campaign::open(corpus.clone(), tasks.clone(), EventLog::in_memory()).unwrap();

    let args: Vec<String> = std::env::args().collect();
    if args.get(1).map(String::as_str) == Some("--serve") {
        let addr = args.get(2).map_or("127.0.0.1:8080", String::as_str).parse().unwrap();
        let state = AppState::new(campaign, Arc::new(SystemClock));
        tokio::runtime::Runtime::new().unwrap().block_on(serve(addr, state)).unwrap();
        return;
    }

    let judges: Vec<String> = (0..5).map(|i| format!("judge-{i}")).collect();
    for kind in TaskKind::ALL {
        loop {
            let mut progressed = false;
            for (j, judge) in judges.iter().enumerate() {
                let NextTask::Task { task } = campaign.serve_next_task(judge, kind, Utc::now()) else {
                    continue;
                };
                progressed = true;
                let full = tasks.tasks.iter().find(|t| t.id() == task.task_id()).unwrap();
                let submission = Submission {
                    judge_id: judge.clone(),
                    task_id: task.task_id().to_owned(),
                    body: answer(&corpus, full, j),
                };
                campaign.submit(submission, Utc::now()).unwrap();
            }
            if !progressed {
                break;
            }
        }
    }

    let report = campaign_report(&campaign).unwrap();
    for section in ["content", "quality", "hrouge", "agreement"] {
        println!("\n== {section}\n{}", report.render_section(section, Format::Csv).unwrap());
    }
    if let Some(q) = report.quality.present() {
        println!("fluency/clarity correlation: {:?}", q.fluency_clarity);
    }
}
