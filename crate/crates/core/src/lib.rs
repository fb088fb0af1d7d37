//! Highlight-based reference-less evaluation of summaries.
//!
//! Annotators highlight up to `K` tokens of a source document. The
//! highlights weight document n-grams, and summaries are scored against the
//! weighted document (HROUGE). The crate also covers the judgment protocol
//! (tasks, planted sanity summaries, rejection rules), an append-only store
//! for a running campaign, agreement statistics, and report generation.

pub mod cli;
pub mod corpus;
pub mod highlight;
pub mod metrics;
pub mod protocol;
pub mod report;
pub mod server;
pub mod stats;
pub mod store;
pub mod text;

pub use corpus::{ingest_corpus, Corpus, CorpusFile};
pub use highlight::{Budget, HighlightCorpusEntry, HighlightSet, TokenSpan};
pub use metrics::{doc_rouge, hrouge, HrougeScore, NgramWeightTable};
pub use protocol::{build_tasks, make_sanity_summaries, CampaignConfig, Task, TaskKind};
pub use report::{build_report, EvalReport};
pub use stats::{coefficient_of_variation, fleiss_kappa, pearson, Kappa};
pub use store::{Campaign, EventLog};
pub use text::{tokenize, TokenizedText, TokenizerConfig};
