//! Command-line interface. Usage errors exit with status 2 (from clap);
//! data errors exit with status 1 and print a JSON error record on stderr.

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::corpus::{parse_summary_lines, summary_id, Corpus};
use crate::highlight::Budget;
use crate::protocol::{build_tasks, derive_seed, make_sanity_summaries, CampaignConfig, SanityTriple, TaskSet};
use crate::report::{
    agreement_csv, agreement_table, campaign_report, doc_rouge_table, entries_from_records, hrouge_table,
    parse_highlight_lines, score_records_csv, to_json, Format, ScoreScale, ScoreTable,
};
use crate::server::{serve, AppState};
use crate::store::{Campaign, EventLog, SystemClock};

#[derive(Debug, Parser)]
#[command(name = "highres", version, about = "Highlight-based summary evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus (plus optional summaries) and write it normalized.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        /// Newline-delimited summary records to merge in.
        #[arg(long)]
        summaries: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Generate the task set of a campaign.
    GenTasks {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        annotators: usize,
        #[arg(long, default_value_t = 3)]
        judges: usize,
        #[arg(long, default_value_t = Budget::DEFAULT_LIMIT)]
        budget: usize,
        /// Also emit content tasks shown without the heatmap.
        #[arg(long)]
        no_highlight_control: bool,
        #[arg(long, default_value = "reference")]
        reference_system: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// HROUGE of every summary against a highlights file.
    Hrouge {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        highlights: PathBuf,
        #[command(flatten)]
        score: ScoreArgs,
    },
    /// Plain document-ROUGE (every n-gram weighted 1).
    RougeDoc {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        score: ScoreArgs,
    },
    /// Fleiss kappa and coverage of a highlights file.
    Agreement {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        highlights: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Report tables from a campaign directory.
    Report {
        #[command(flatten)]
        campaign: CampaignArgs,
        /// One of content, quality, hrouge, doc_rouge, agreement; all when absent.
        #[arg(long)]
        section: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Records)]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Serve the campaign over HTTP.
    Serve {
        #[command(flatten)]
        campaign: CampaignArgs,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, default_value_t = crate::store::DEFAULT_LEASE_MINUTES)]
        lease_minutes: i64,
    },
    /// Print the planted good/mediocre/bad summaries of each document.
    MakeSanity {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "reference")]
        reference_system: String,
        /// Restrict to one document.
        #[arg(long)]
        doc: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output file (written atomically); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// N-gram order; repeat for several.
    #[arg(long = "n", default_values_t = [1, 2], value_parser = clap::value_parser!(u64).range(1..))]
    orders: Vec<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Print fractions in CSV instead of percentages with two decimals.
    #[arg(long)]
    raw: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Task set written by `gen-tasks`.
    #[arg(long)]
    tasks: PathBuf,
    /// Directory holding the event log.
    #[arg(long)]
    campaign: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Protocol(#[from] crate::protocol::ProtocolError),
    #[error(transparent)]
    Report(#[from] crate::report::ReportError),
    #[error(transparent)]
    Store(#[from] crate::store::StoreError),
    #[error("malformed task set: {0}")]
    Tasks(serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            Self::Io { .. } => "io",
            Self::Corpus(_) => "corpus",
            Self::Protocol(_) => "protocol",
            Self::Report(_) => "report",
            Self::Store(_) => "store",
            Self::Tasks(_) => "tasks",
            Self::Invalid(_) => "invalid",
        }
    }

    /// The JSON record printed on stderr.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            error: &'a str,
            message: String,
        }
        serde_json::to_string(&Record {
            error: self.kind(),
            message: self.to_string(),
        })
        .expect("error record serializes")
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_corpus(path: &Path) -> Result<Corpus, CliError> {
    Ok(Corpus::from_json(read(path)?.as_bytes())?)
}

/// Writes to `out` via a temporary file in the same directory, or to stdout.
fn emit(out: &OutArgs, body: &str) -> Result<(), CliError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    match &out.out {
        None => io::stdout().write_all(body.as_bytes()).map_err(io_err(Path::new("<stdout>"))),
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
            tmp.write_all(body.as_bytes()).map_err(io_err(path))?;
            tmp.as_file().sync_all().map_err(io_err(path))?;
            tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
            Ok(())
        }
    }
}

fn render_scores(table: &ScoreTable, args: &ScoreArgs) -> String {
    match args.format {
        Format::Records => to_json(table),
        Format::Csv => {
            let scale = if args.raw { ScoreScale::Fraction } else { ScoreScale::Percent };
            score_records_csv(&table.per_document, scale)
        }
    }
}

fn orders(args: &ScoreArgs) -> Vec<usize> {
    let mut o: Vec<usize> = args.orders.iter().map(|&n| n as usize).collect();
    o.sort_unstable();
    o.dedup();
    o
}

fn open_campaign(args: &CampaignArgs) -> Result<Campaign, CliError> {
    let corpus = load_corpus(&args.corpus)?;
    let tasks: TaskSet = serde_json::from_str(&read(&args.tasks)?).map_err(CliError::Tasks)?;
    fs::create_dir_all(&args.campaign).map_err(|source| CliError::Io {
        path: args.campaign.display().to_string(),
        source,
    })?;
    let log = EventLog::open(&args.campaign)?;
    Ok(Campaign::open(corpus, tasks, log)?)
}

#[derive(Serialize)]
struct PlantedRecord<'a> {
    doc_id: &'a str,
    seed: u64,
    #[serde(flatten)]
    triple: SanityTriple,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest { corpus, summaries, out } => {
            let mut c = load_corpus(&corpus)?;
            if let Some(path) = summaries {
                c = c.with_summaries(parse_summary_lines(&read(&path)?)?)?;
            }
            eprintln!("{} documents, {} summaries", c.documents.len(), c.summaries.len());
            emit(&out, &c.export())
        }
        Command::GenTasks {
            corpus,
            seed,
            annotators,
            judges,
            budget,
            no_highlight_control,
            reference_system,
            out,
        } => {
            let c = load_corpus(&corpus)?;
            let config = CampaignConfig {
                seed,
                annotators_per_doc: annotators,
                judges_per_item: judges,
                budget: Budget::tokens(budget),
                no_highlight_control,
                reference_system,
                ..Default::default()
            };
            let tasks = build_tasks(&c, &config)?;
            emit(&out, &tasks.to_json())
        }
        Command::Hrouge {
            corpus,
            highlights,
            score,
        } => {
            let c = load_corpus(&corpus)?;
            let entries = entries_from_records(&c, &parse_highlight_lines(&read(&highlights)?)?)?;
            let table = hrouge_table(&c, &entries, &orders(&score));
            emit(&score.out, &render_scores(&table, &score))
        }
        Command::RougeDoc { corpus, score } => {
            let c = load_corpus(&corpus)?;
            let table = doc_rouge_table(&c, &orders(&score));
            emit(&score.out, &render_scores(&table, &score))
        }
        Command::Agreement {
            corpus,
            highlights,
            format,
            out,
        } => {
            let c = load_corpus(&corpus)?;
            let entries = entries_from_records(&c, &parse_highlight_lines(&read(&highlights)?)?)?;
            let table = agreement_table(&entries);
            let body = match format {
                Format::Csv => agreement_csv(&table),
                Format::Records => to_json(&table),
            };
            emit(&out, &body)
        }
        Command::Report {
            campaign,
            section,
            format,
            out,
        } => {
            let report = campaign_report(&open_campaign(&campaign)?)?;
            let body = match (section, format) {
                (Some(s), f) => report.render_section(&s, f)?,
                (None, Format::Records) => report.to_json(),
                (None, Format::Csv) => ["content", "quality", "hrouge", "doc_rouge", "agreement"]
                    .iter()
                    .map(|s| Ok(format!("# {s}\n{}", report.render_section(s, Format::Csv)?)))
                    .collect::<Result<Vec<_>, CliError>>()?
                    .join("\n"),
            };
            emit(&out, &body)
        }
        Command::Serve {
            campaign,
            addr,
            lease_minutes,
        } => {
            if lease_minutes <= 0 {
                return Err(CliError::Invalid("--lease-minutes must be positive".into()));
            }
            let mut c = open_campaign(&campaign)?;
            c.set_lease_timeout(chrono::Duration::minutes(lease_minutes));
            let state = AppState::new(c, Arc::new(SystemClock));
            let runtime = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
                path: "<runtime>".into(),
                source,
            })?;
            runtime.block_on(serve(addr, state)).map_err(|source| CliError::Io {
                path: addr.to_string(),
                source,
            })
        }
        Command::MakeSanity {
            corpus,
            seed,
            reference_system,
            doc,
            out,
        } => {
            let c = load_corpus(&corpus)?;
            if let Some(id) = &doc {
                if !c.documents.contains_key(id) {
                    return Err(CliError::Invalid(format!("unknown document {id:?}")));
                }
            }
            let mut body = String::new();
            for (doc_id, d) in &c.documents {
                if doc.as_ref().is_some_and(|id| id != doc_id) {
                    continue;
                }
                let summary = c.summaries.get(&summary_id(doc_id, &reference_system)).ok_or_else(|| {
                    CliError::Invalid(format!("document {doc_id:?} has no {reference_system:?} summary"))
                })?;
                let planted_seed = derive_seed(seed, &format!("planted/{doc_id}"));
                let triple = make_sanity_summaries(&d.text, &summary.text, planted_seed, &Default::default())?;
                let record = PlantedRecord {
                    doc_id,
                    seed: planted_seed,
                    triple,
                };
                body.push_str(&serde_json::to_string(&record).expect("record serializes"));
                body.push('\n');
            }
            emit(&out, &body)
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.record());
            1
        }
    }
}
