//! Corpus files: source documents, optional sanity questions, and the
//! summaries to evaluate. See `docs/formats.md` for the schema.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::text::{tokenize, TokenizedText, TokenizerConfig};

pub const CORPUS_VERSION: &str = "highres-corpus/1";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("unsupported corpus version {found:?}, expected {CORPUS_VERSION:?}")]
    SchemaMismatch { found: String },
    #[error("malformed corpus: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),
    #[error("summary by {system:?} references unknown document {doc_id:?}")]
    UnknownDocument { doc_id: String, system: String },
    #[error("document {doc_id:?} has two summaries from {system:?}")]
    DuplicateSummary { doc_id: String, system: String },
    #[error("identifier must be non-empty and must not contain '::' ({0:?})")]
    InvalidId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SanityQuestion {
    pub statement: String,
    pub answer: bool,
    /// Set when the question was produced by the heuristic generator rather
    /// than authored by a person.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub machine_made: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sanity: Option<SanityQuestion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub doc_id: String,
    pub system: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub version: String,
    #[serde(default)]
    pub tokenizer: TokenizerConfig,
    pub documents: Vec<DocumentRecord>,
    #[serde(default)]
    pub summaries: Vec<SummaryRecord>,
}

impl CorpusFile {
    pub fn new(documents: Vec<DocumentRecord>, summaries: Vec<SummaryRecord>) -> Self {
        Self {
            version: CORPUS_VERSION.to_owned(),
            tokenizer: TokenizerConfig::default(),
            documents,
            summaries,
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, CorpusError> {
        // Check the version before the full schema so old files get a clear error.
        #[derive(Deserialize)]
        struct Probe {
            version: Option<String>,
        }
        let probe: Probe = serde_json::from_slice(bytes)?;
        match probe.version {
            Some(v) if v == CORPUS_VERSION => Ok(serde_json::from_slice(bytes)?),
            other => Err(CorpusError::SchemaMismatch {
                found: other.unwrap_or_default(),
            }),
        }
    }
}

/// Parses newline-delimited summary records (`{"doc_id", "system", "text"}`).
pub fn parse_summary_lines(text: &str) -> Result<Vec<SummaryRecord>, CorpusError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(CorpusError::from))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    pub text: TokenizedText,
    pub sanity: Option<SanityQuestion>,
}

#[derive(Debug, Clone)]
pub struct Summary {
    /// `"{doc_id}::{system}"`.
    pub id: String,
    pub doc_id: String,
    pub system: String,
    pub text: TokenizedText,
}

pub fn summary_id(doc_id: &str, system: &str) -> String {
    format!("{doc_id}::{system}")
}

/// An ingested, tokenized corpus. Documents and summaries are kept in id
/// order.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub tokenizer: TokenizerConfig,
    pub documents: BTreeMap<String, Document>,
    pub summaries: BTreeMap<String, Summary>,
}

fn check_id(id: &str) -> Result<(), CorpusError> {
    if id.is_empty() || id.contains("::") {
        Err(CorpusError::InvalidId(id.to_owned()))
    } else {
        Ok(())
    }
}

pub fn ingest_corpus(file: &CorpusFile) -> Result<Corpus, CorpusError> {
    if file.version != CORPUS_VERSION {
        return Err(CorpusError::SchemaMismatch {
            found: file.version.clone(),
        });
    }
    let cfg = file.tokenizer;
    let mut documents = BTreeMap::new();
    for d in &file.documents {
        check_id(&d.id)?;
        let doc = Document {
            id: d.id.clone(),
            text: tokenize(&d.text, &cfg),
            sanity: d.sanity.clone(),
        };
        if documents.insert(d.id.clone(), doc).is_some() {
            return Err(CorpusError::DuplicateDocId(d.id.clone()));
        }
    }
    let mut summaries = BTreeMap::new();
    for s in &file.summaries {
        check_id(&s.system)?;
        if !documents.contains_key(&s.doc_id) {
            return Err(CorpusError::UnknownDocument {
                doc_id: s.doc_id.clone(),
                system: s.system.clone(),
            });
        }
        let id = summary_id(&s.doc_id, &s.system);
        let summary = Summary {
            id: id.clone(),
            doc_id: s.doc_id.clone(),
            system: s.system.clone(),
            text: tokenize(&s.text, &cfg),
        };
        if summaries.insert(id, summary).is_some() {
            return Err(CorpusError::DuplicateSummary {
                doc_id: s.doc_id.clone(),
                system: s.system.clone(),
            });
        }
    }
    Ok(Corpus {
        tokenizer: cfg,
        documents,
        summaries,
    })
}

impl Corpus {
    pub fn from_json(bytes: &[u8]) -> Result<Self, CorpusError> {
        ingest_corpus(&CorpusFile::from_json(bytes)?)
    }

    /// Appends summaries from a separate source and re-validates.
    pub fn with_summaries(&self, extra: Vec<SummaryRecord>) -> Result<Self, CorpusError> {
        let mut file = self.to_file();
        file.summaries.extend(extra);
        ingest_corpus(&file)
    }

    /// Normalized form: documents by id, summaries by `(doc_id, system)`.
    pub fn to_file(&self) -> CorpusFile {
        CorpusFile {
            version: CORPUS_VERSION.to_owned(),
            tokenizer: self.tokenizer,
            documents: self
                .documents
                .values()
                .map(|d| DocumentRecord {
                    id: d.id.clone(),
                    text: d.text.raw().to_owned(),
                    sanity: d.sanity.clone(),
                })
                .collect(),
            summaries: self
                .summaries
                .values()
                .map(|s| SummaryRecord {
                    doc_id: s.doc_id.clone(),
                    system: s.system.clone(),
                    text: s.text.raw().to_owned(),
                })
                .collect(),
        }
    }

    /// Pretty JSON of the normalized corpus with a trailing newline.
    pub fn export(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.to_file()).expect("corpus serializes");
        out.push('\n');
        out
    }

    pub fn systems(&self) -> BTreeSet<&str> {
        self.summaries.values().map(|s| s.system.as_str()).collect()
    }

    pub fn summaries_of<'a>(&'a self, doc_id: &'a str) -> impl Iterator<Item = &'a Summary> + 'a {
        self.summaries.values().filter(move |s| s.doc_id == doc_id)
    }
}
