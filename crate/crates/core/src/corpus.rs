//! Documents, gold annotations, tokenization, and gold restriction.
//!
//! All offsets are character offsets, half-open `[start, end)`, matching
//! PubTator-style conventions. Span equality in evaluation is exact-offset.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::kb::{ConceptId, KbView};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("document {0:?} appears twice")]
    DuplicateDocument(String),
    #[error("annotation references unknown document {0:?}")]
    DanglingDocument(String),
    #[error("span {start}..{end} out of range for document {doc_id:?} of length {len}")]
    SpanOutOfRange {
        doc_id: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("invalid span {start}..{end}: start must be < end")]
    InvalidSpan { start: usize, end: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Corpus split identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

/// Character span, 0-based, end exclusive.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Result<Self, CorpusError> {
        if start >= end {
            return Err(CorpusError::InvalidSpan { start, end });
        }
        Ok(Span { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        false // start < end is enforced at construction
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Slice `text` by character offsets. Returns `None` when the span exceeds
/// the text length.
pub fn char_slice(text: &str, span: Span) -> Option<&str> {
    let mut start_byte = None;
    let mut end_byte = None;
    let mut chars = 0usize;
    for (byte, _) in text.char_indices() {
        if chars == span.start {
            start_byte = Some(byte);
        }
        if chars == span.end {
            end_byte = Some(byte);
        }
        chars += 1;
    }
    if chars == span.start {
        start_byte = Some(text.len());
    }
    if chars == span.end {
        end_byte = Some(text.len());
    }
    Some(&text[start_byte?..end_byte?])
}

/// One text unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

impl Document {
    /// Length in characters.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// A gold mention-concept pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub doc_id: String,
    pub span: Span,
    pub concept: ConceptId,
}

/// Documents plus gold annotations for one split.
///
/// Annotations are sorted by (doc_id, start, end, concept); documents are kept
/// in doc_id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub split: Split,
    documents: BTreeMap<String, Document>,
    annotations: Vec<GoldAnnotation>,
}

impl Corpus {
    pub fn new(
        split: Split,
        documents: impl IntoIterator<Item = Document>,
        annotations: impl IntoIterator<Item = GoldAnnotation>,
    ) -> Result<Self, CorpusError> {
        let mut doc_map = BTreeMap::new();
        for doc in documents {
            let id = doc.doc_id.clone();
            if doc_map.insert(id.clone(), doc).is_some() {
                return Err(CorpusError::DuplicateDocument(id));
            }
        }
        let mut annotations: Vec<GoldAnnotation> = annotations.into_iter().collect();
        for ann in &annotations {
            let doc = doc_map
                .get(&ann.doc_id)
                .ok_or_else(|| CorpusError::DanglingDocument(ann.doc_id.clone()))?;
            let len = doc.char_len();
            if ann.span.end > len {
                return Err(CorpusError::SpanOutOfRange {
                    doc_id: ann.doc_id.clone(),
                    start: ann.span.start,
                    end: ann.span.end,
                    len,
                });
            }
        }
        annotations.sort();
        annotations.dedup();
        Ok(Corpus {
            split,
            documents: doc_map,
            annotations,
        })
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.values()
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.get(doc_id)
    }

    pub fn n_documents(&self) -> usize {
        self.documents.len()
    }

    pub fn annotations(&self) -> &[GoldAnnotation] {
        &self.annotations
    }

    /// Annotations of one document, in span order.
    pub fn annotations_of(&self, doc_id: &str) -> &[GoldAnnotation] {
        let lo = self.annotations.partition_point(|a| a.doc_id.as_str() < doc_id);
        let hi = self.annotations.partition_point(|a| a.doc_id.as_str() <= doc_id);
        &self.annotations[lo..hi]
    }
}

/// A token and its exact character extent in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpan {
    pub token: String,
    pub span: Span,
}

/// Split text into maximal alphanumeric runs, lowercased, with exact
/// character spans. Punctuation and whitespace separate tokens and are never
/// tokens themselves.
pub fn tokenize(text: &str) -> Vec<TokenSpan> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0usize;
    for (offset, ch) in text.chars().enumerate() {
        if ch.is_alphanumeric() {
            if current.is_empty() {
                start = offset;
            }
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(TokenSpan {
                token: std::mem::take(&mut current),
                span: Span { start, end: offset },
            });
        }
    }
    if !current.is_empty() {
        let end = text.chars().count();
        tokens.push(TokenSpan {
            token: current,
            span: Span { start, end },
        });
    }
    tokens
}

/// Keep only annotations whose concept is in `view`. Documents are kept even
/// when all their annotations are removed; gold mentions outside the view
/// become NIL and predicting them counts as a false positive downstream.
pub fn restrict_gold(corpus: &Corpus, view: KbView<'_>) -> Corpus {
    Corpus {
        split: corpus.split,
        documents: corpus.documents.clone(),
        annotations: corpus
            .annotations
            .iter()
            .filter(|a| view.contains(&a.concept))
            .cloned()
            .collect(),
    }
}

/// Per-split dataset statistics against a KB view.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsTable {
    pub split: Split,
    pub kb_view: String,
    /// Concepts in the view.
    pub concepts_in_view: usize,
    /// Annotations whose concept is in the view.
    pub annotations: usize,
    /// Distinct annotated concepts in the view.
    pub annotated_concepts: usize,
    /// Of the in-view annotations, how many have a concept that also appears
    /// in the training gold. `None` when no training corpus was supplied.
    pub annotations_in_train: Option<usize>,
    pub annotated_concepts_in_train: Option<usize>,
    /// Share of training annotations whose concept is in the view; the
    /// x-axis of the proportion report.
    pub annotation_proportion: Option<f64>,
    /// Spans carrying both an in-view and an out-of-view gold concept.
    pub mixed_spans: usize,
}

/// Compute [`StatsTable`] for `corpus` under `view`, optionally relating it
/// to a training corpus.
pub fn stats(corpus: &Corpus, view: KbView<'_>, train: Option<&Corpus>) -> StatsTable {
    let in_view: Vec<&GoldAnnotation> = corpus
        .annotations
        .iter()
        .filter(|a| view.contains(&a.concept))
        .collect();
    let annotated_concepts: BTreeSet<&ConceptId> = in_view.iter().map(|a| &a.concept).collect();

    let mut span_in: BTreeSet<(&str, Span)> = BTreeSet::new();
    let mut span_out: BTreeSet<(&str, Span)> = BTreeSet::new();
    for ann in &corpus.annotations {
        let key = (ann.doc_id.as_str(), ann.span);
        if view.contains(&ann.concept) {
            span_in.insert(key);
        } else {
            span_out.insert(key);
        }
    }
    let mixed_spans = span_in.intersection(&span_out).count();

    let (annotations_in_train, annotated_concepts_in_train, annotation_proportion) = match train {
        Some(train) => {
            let train_concepts: BTreeSet<&ConceptId> =
                train.annotations.iter().map(|a| &a.concept).collect();
            let in_train = in_view
                .iter()
                .filter(|a| train_concepts.contains(&a.concept))
                .count();
            let concepts_in_train = annotated_concepts
                .iter()
                .filter(|c| train_concepts.contains(*c))
                .count();
            let total_train = train.annotations.len();
            let proportion = if total_train > 0 {
                let in_view_train = train
                    .annotations
                    .iter()
                    .filter(|a| view.contains(&a.concept))
                    .count();
                Some(in_view_train as f64 / total_train as f64)
            } else {
                None
            };
            (Some(in_train), Some(concepts_in_train), proportion)
        }
        None => (None, None, None),
    };

    StatsTable {
        split: corpus.split,
        kb_view: view.name().to_string(),
        concepts_in_view: view.len(),
        annotations: in_view.len(),
        annotated_concepts: annotated_concepts.len(),
        annotations_in_train,
        annotated_concepts_in_train,
        annotation_proportion,
        mixed_spans,
    }
}

#[derive(Deserialize)]
struct AnnotationLine {
    start: usize,
    end: usize,
    concept: String,
}

#[derive(Deserialize)]
struct DocumentLine {
    doc_id: String,
    text: String,
    #[serde(default)]
    annotations: Vec<AnnotationLine>,
}

#[derive(Serialize)]
struct AnnotationLineOut<'a> {
    start: usize,
    end: usize,
    concept: &'a str,
}

#[derive(Serialize)]
struct DocumentLineOut<'a> {
    doc_id: &'a str,
    text: &'a str,
    annotations: Vec<AnnotationLineOut<'a>>,
}

/// Load a corpus split from JSONL, one document per line:
/// `{"doc_id": str, "text": str, "annotations": [{"start", "end", "concept"}]}`.
///
/// A `concept` field carrying several `|`-separated ids (composite mention)
/// is expanded into one annotation per id.
pub fn load_corpus(path: impl AsRef<Path>, split: Split) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut documents = Vec::new();
    let mut annotations = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: DocumentLine = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        for ann in parsed.annotations {
            let span = Span::new(ann.start, ann.end).map_err(|e| CorpusError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
            for raw_id in ann.concept.split('|') {
                let concept = ConceptId::new(raw_id).map_err(|e| CorpusError::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: e.to_string(),
                })?;
                annotations.push(GoldAnnotation {
                    doc_id: parsed.doc_id.clone(),
                    span,
                    concept,
                });
            }
        }
        documents.push(Document {
            doc_id: parsed.doc_id,
            text: parsed.text,
        });
    }
    Corpus::new(split, documents, annotations)
}

/// Write a corpus in the JSONL format read by [`load_corpus`], documents in
/// doc_id order.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let mut out = std::io::BufWriter::new(File::create(path)?);
    for doc in corpus.documents() {
        let line = DocumentLineOut {
            doc_id: &doc.doc_id,
            text: &doc.text,
            annotations: corpus
                .annotations_of(&doc.doc_id)
                .iter()
                .map(|a| AnnotationLineOut {
                    start: a.span.start,
                    end: a.span.end,
                    concept: a.concept.as_str(),
                })
                .collect(),
        };
        writeln!(out, "{}", serde_json::to_string(&line).unwrap())?;
    }
    out.flush()?;
    Ok(())
}
