//! The three entity-linking paradigms.
//!
//! Each paradigm maps a document plus an inference KB view to a list of
//! [`ScoredPrediction`]s whose concepts are guaranteed to lie inside the
//! view:
//!
//! - [`link_ner_ned`]: gazetteer mention detection, then nearest-neighbor
//!   disambiguation inside the view. Scores are cosines in `[-1, 1]`.
//! - [`link_ned_ner`]: retrieve top-K view concepts for the document, then
//!   locate a best span per concept. Scores are probabilities in `(0, 1]`.
//! - [`link_generative`]: trie-constrained beam decoding of a marked-up
//!   target sequence. Scores are mean token log-likelihoods, `≤ 0`.
//!
//! All linkers are pure per document; corpus-level runs fan out across
//! documents with [`link_corpus`] and the merged output is sorted so the job
//! count never changes results.

mod generative;
mod lm;
mod ned_ner;
mod ner_ned;
mod target;

pub use generative::{decode_document, link_generative, DecodedDocument, GenerativeParams};
pub use lm::{conditioning_pairs, train_lm, BigramLm, TrainedLm, SEQUENCE_START, UNKNOWN};
pub use ned_ner::{
    link_ned_ner, link_ned_ner_with_retrieval, retriever_reader_scores, RetrieverReaderScores,
    SPAN_TEMPERATURE,
};
pub use ner_ned::link_ner_ned;
pub use target::{
    build_target_sequence, is_marker, TargetBuild, TargetSequence, ENTITY_BEGIN, ENTITY_END,
    MARKERS, MENTION_BEGIN, MENTION_END,
};

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, Span};
use crate::embed::EmbedError;
use crate::kb::ConceptId;

#[derive(Debug, thiserror::Error)]
pub enum ParadigmError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("K must be at least 1")]
    InvalidK,
    #[error("document {doc_id:?}: gold spans {a:?} and {b:?} overlap after token snapping")]
    OverlappingGold { doc_id: String, a: Span, b: Span },
    #[error("gold concept {0} is not in the training KB")]
    UnknownConcept(ConceptId),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("predictions file {0:?} is missing its header line")]
    MissingHeader(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which paradigm produced a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paradigm {
    NerNed,
    NedNer,
    Generative,
}

impl std::fmt::Display for Paradigm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Paradigm::NerNed => "ner_ned",
            Paradigm::NedNer => "ned_ner",
            Paradigm::Generative => "generative",
        })
    }
}

/// One predicted mention-concept pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPrediction {
    pub doc_id: String,
    pub span: Span,
    pub concept: ConceptId,
    pub score: f64,
    pub paradigm: Paradigm,
}

/// Sort by (doc_id, span, concept); the canonical output order.
pub fn sort_predictions(predictions: &mut [ScoredPrediction]) {
    predictions.sort_by(|a, b| {
        a.doc_id
            .cmp(&b.doc_id)
            .then(a.span.cmp(&b.span))
            .then(a.concept.cmp(&b.concept))
    });
}

/// Paradigm block of the run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParadigmConfig {
    pub paradigm: Paradigm,
    /// Retriever depth for the NED-NER paradigm.
    #[serde(rename = "K", default = "default_k")]
    pub k: usize,
    /// Beam width for the generative paradigm.
    #[serde(default = "default_beam")]
    pub beam: usize,
    /// Mention token budget for span candidates and generative markup.
    #[serde(default = "default_max_span_tokens")]
    pub max_span_tokens: usize,
    /// Fixed score filter; `null` keeps everything.
    #[serde(default)]
    pub theta: Option<f64>,
    /// Restrict the generative trie to canonical names.
    #[serde(default)]
    pub canonical_only: bool,
}

fn default_k() -> usize {
    100
}

fn default_beam() -> usize {
    6
}

fn default_max_span_tokens() -> usize {
    8
}

impl ParadigmConfig {
    pub fn new(paradigm: Paradigm) -> Self {
        ParadigmConfig {
            paradigm,
            k: default_k(),
            beam: default_beam(),
            max_span_tokens: default_max_span_tokens(),
            theta: None,
            canonical_only: false,
        }
    }
}

/// Run a per-document linker over a whole corpus with `jobs` worker threads,
/// merging and sorting the results. Output is independent of `jobs`.
pub fn link_corpus<F>(
    corpus: &Corpus,
    jobs: usize,
    link_doc: F,
) -> Result<Vec<ScoredPrediction>, ParadigmError>
where
    F: Fn(&Document) -> Result<Vec<ScoredPrediction>, ParadigmError> + Sync,
{
    let documents: Vec<&Document> = corpus.documents().collect();
    let jobs = jobs.max(1).min(documents.len().max(1));
    let chunk_size = documents.len().div_ceil(jobs);
    let mut merged = Vec::new();
    if documents.is_empty() {
        return Ok(merged);
    }
    let chunks: Vec<&[&Document]> = documents.chunks(chunk_size).collect();
    let results: Vec<Result<Vec<ScoredPrediction>, ParadigmError>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| {
                    let link_doc = &link_doc;
                    scope.spawn(move || {
                        let mut out = Vec::new();
                        for doc in *chunk {
                            out.extend(link_doc(doc)?);
                        }
                        Ok(out)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("linker thread panicked"))
                .collect()
        });
    for result in results {
        merged.extend(result?);
    }
    sort_predictions(&mut merged);
    Ok(merged)
}

#[derive(Serialize, Deserialize)]
struct PredictionsHeader {
    view: String,
    paradigm: Paradigm,
}

#[derive(Serialize, Deserialize)]
struct PredictionLine {
    doc_id: String,
    start: usize,
    end: usize,
    concept: String,
    score: f64,
}

/// Predictions plus the inference view that produced them. The view is
/// recorded in the file so downstream steps can refuse mismatched gold or
/// mismatched pruning.
#[derive(Debug, Clone)]
pub struct PredictionsFile {
    pub view: String,
    pub paradigm: Paradigm,
    pub predictions: Vec<ScoredPrediction>,
}

impl PredictionsFile {
    /// Write as JSONL: a header line `{"view", "paradigm"}` followed by one
    /// `{"doc_id", "start", "end", "concept", "score"}` line per prediction,
    /// in canonical order.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ParadigmError> {
        let mut sorted = self.predictions.clone();
        sort_predictions(&mut sorted);
        let mut out = std::io::BufWriter::new(File::create(path)?);
        let header = PredictionsHeader {
            view: self.view.clone(),
            paradigm: self.paradigm,
        };
        writeln!(out, "{}", serde_json::to_string(&header).unwrap())?;
        for p in &sorted {
            let line = PredictionLine {
                doc_id: p.doc_id.clone(),
                start: p.span.start,
                end: p.span.end,
                concept: p.concept.to_string(),
                score: p.score,
            };
            writeln!(out, "{}", serde_json::to_string(&line).unwrap())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PredictionsFile, ParadigmError> {
        let path = path.as_ref();
        let mut lines = BufReader::new(File::open(path)?).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| ParadigmError::MissingHeader(path.to_path_buf()))??;
        let header: PredictionsHeader =
            serde_json::from_str(&header_line).map_err(|e| ParadigmError::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: e.to_string(),
            })?;
        let mut predictions = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: PredictionLine =
                serde_json::from_str(&line).map_err(|e| ParadigmError::Parse {
                    path: path.to_path_buf(),
                    line: idx + 2,
                    message: e.to_string(),
                })?;
            predictions.push(ScoredPrediction {
                doc_id: parsed.doc_id,
                span: Span {
                    start: parsed.start,
                    end: parsed.end,
                },
                concept: parsed.concept.parse().map_err(|e: crate::kb::KbError| {
                    ParadigmError::Parse {
                        path: path.to_path_buf(),
                        line: idx + 2,
                        message: e.to_string(),
                    }
                })?,
                score: parsed.score,
                paradigm: header.paradigm,
            });
        }
        Ok(PredictionsFile {
            view: header.view,
            paradigm: header.paradigm,
            predictions,
        })
    }
}
