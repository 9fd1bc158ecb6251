//! NED→NER: retrieve concepts for the document first, then locate a best
//! span per retrieved concept.
//!
//! Retrieval embeds the whole document text and takes the top-K view
//! concepts; `P_re` is the softmax of the K retrieval cosines. Reading
//! scores every token n-gram up to `max_span_tokens` against each retrieved
//! concept's synonym vectors and turns the affinities into a sharp span
//! distribution `P_span` (softmax at temperature [`SPAN_TEMPERATURE`]). A
//! prediction's score is `P_re(e) · P_span(span | e)`.
//!
//! Mention detection is driven entirely by retrieved concepts, so a view
//! that drops a concept also drops its spans — this paradigm has no
//! KB-oblivious mention detector to mislead. Thresholding is integral:
//! inference takes a score cutoff and emitting everything is just the cutoff
//! `-∞`.

use std::collections::BTreeMap;

use crate::corpus::{char_slice, tokenize, Document, Span};
use crate::embed::{cosine, embed_text, nearest, ConceptIndex, EmbeddingVector};
use crate::kb::ConceptId;

use super::{Paradigm, ParadigmError, ScoredPrediction};

/// Softmax temperature for span affinities; sharp so `P_span` peaks at the
/// best-matching span.
pub const SPAN_TEMPERATURE: f64 = 0.05;

/// Intermediate distributions of one document, exposed for inspection and
/// testing.
#[derive(Debug, Clone)]
pub struct RetrieverReaderScores {
    /// Top-K concepts with their raw retrieval cosines, rank order.
    pub retrieved: Vec<(ConceptId, f64)>,
    /// Softmax over the retrieval cosines; sums to 1.
    pub p_re: Vec<f64>,
    /// Candidate spans: token n-grams up to the configured length, ordered
    /// by (start, length).
    pub candidates: Vec<Span>,
    /// Per retrieved concept, the span distribution over `candidates`; each
    /// row sums to 1. Empty when the document has no tokens.
    pub p_span: Vec<Vec<f64>>,
}

fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Run retrieval and reading for one document.
pub fn retriever_reader_scores(
    doc: &Document,
    index: &ConceptIndex,
    k: usize,
    max_span_tokens: usize,
) -> Result<RetrieverReaderScores, ParadigmError> {
    if k < 1 {
        return Err(ParadigmError::InvalidK);
    }
    let document_vector = embed_text(&doc.text);
    let retrieved = nearest(index, &document_vector, k)?;
    let p_re = softmax(&retrieved.iter().map(|(_, s)| *s).collect::<Vec<_>>());

    let tokens = tokenize(&doc.text);
    let mut candidates = Vec::new();
    for start in 0..tokens.len() {
        for len in 1..=max_span_tokens.min(tokens.len() - start) {
            candidates.push(Span {
                start: tokens[start].span.start,
                end: tokens[start + len - 1].span.end,
            });
        }
    }
    let candidate_vectors: Vec<EmbeddingVector> = candidates
        .iter()
        .map(|span| embed_text(char_slice(&doc.text, *span).unwrap_or_default()))
        .collect();

    // Synonym vectors per retrieved concept, straight from the index.
    let mut synonyms_of: BTreeMap<&ConceptId, Vec<&EmbeddingVector>> = BTreeMap::new();
    for entry in index.entries() {
        synonyms_of.entry(&entry.concept).or_default().push(&entry.vector);
    }

    let mut p_span = Vec::with_capacity(retrieved.len());
    for (concept, _) in &retrieved {
        if candidates.is_empty() {
            p_span.push(Vec::new());
            continue;
        }
        let vectors = synonyms_of.get(concept).map(|v| v.as_slice()).unwrap_or(&[]);
        let affinities: Vec<f64> = candidate_vectors
            .iter()
            .map(|cv| {
                vectors
                    .iter()
                    .map(|sv| cosine(cv, sv))
                    .fold(f64::NEG_INFINITY, f64::max)
                    / SPAN_TEMPERATURE
            })
            .collect();
        p_span.push(softmax(&affinities));
    }

    Ok(RetrieverReaderScores {
        retrieved,
        p_re,
        candidates,
        p_span,
    })
}

/// Link one document: per retrieved concept, keep its best span scored
/// `P_re · P_span`, emit predictions scoring at least `theta`, and keep the
/// best concept per span.
pub fn link_ned_ner(
    doc: &Document,
    index: &ConceptIndex,
    k: usize,
    max_span_tokens: usize,
    theta: f64,
) -> Result<Vec<ScoredPrediction>, ParadigmError> {
    Ok(link_ned_ner_with_retrieval(doc, index, k, max_span_tokens, theta)?.0)
}

/// [`link_ned_ner`] plus the ranked retrieval list, for R@K reporting.
pub fn link_ned_ner_with_retrieval(
    doc: &Document,
    index: &ConceptIndex,
    k: usize,
    max_span_tokens: usize,
    theta: f64,
) -> Result<(Vec<ScoredPrediction>, Vec<ConceptId>), ParadigmError> {
    let scores = retriever_reader_scores(doc, index, k, max_span_tokens)?;
    let mut per_span: BTreeMap<Span, (ConceptId, f64)> = BTreeMap::new();
    for (idx, (concept, _)) in scores.retrieved.iter().enumerate() {
        let row = &scores.p_span[idx];
        if row.is_empty() {
            continue;
        }
        // Best candidate; ties resolve to the earliest (start, length) span.
        let (best_candidate, best_p) = row
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, bp), (i, &p)| {
                if p > bp {
                    (i, p)
                } else {
                    (bi, bp)
                }
            });
        let score = scores.p_re[idx] * best_p;
        if score < theta {
            continue;
        }
        let span = scores.candidates[best_candidate];
        match per_span.get(&span) {
            Some((held, held_score))
                if *held_score > score || (*held_score == score && held < concept) => {}
            _ => {
                per_span.insert(span, (concept.clone(), score));
            }
        }
    }
    let predictions = per_span
        .into_iter()
        .map(|(span, (concept, score))| ScoredPrediction {
            doc_id: doc.doc_id.clone(),
            span,
            concept,
            score,
            paradigm: Paradigm::NedNer,
        })
        .collect();
    let retrieved = scores.retrieved.into_iter().map(|(c, _)| c).collect();
    Ok((predictions, retrieved))
}
