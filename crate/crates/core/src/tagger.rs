//! Gazetteer mention detection.
//!
//! The detector is built from the training corpus only: the surface form of
//! every training gold mention plus the synonyms of every concept annotated
//! in training gold. Tagging takes no KB argument at all — the detector
//! cannot know that inference is restricted to a partial view, which is
//! exactly the failure mode under study: under a partial view it keeps
//! detecting mentions whose concept is out of the view.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{char_slice, tokenize, Corpus, Document, Span};
use crate::kb::{ConceptId, KnowledgeBase};

/// Surface dictionary mapping lowercase token sequences to the concepts that
/// contributed them.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: BTreeMap<Vec<String>, BTreeSet<ConceptId>>,
    max_len: usize,
}

impl Gazetteer {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest entry, in tokens.
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn contains(&self, tokens: &[String]) -> bool {
        self.entries.contains_key(tokens)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<String>, &BTreeSet<ConceptId>)> {
        self.entries.iter()
    }

    /// Add one lowercase-tokenized entry with its provenance concept.
    pub fn insert_entry(&mut self, tokens: Vec<String>, concept: &ConceptId) {
        if tokens.is_empty() {
            return;
        }
        self.max_len = self.max_len.max(tokens.len());
        self.entries
            .entry(tokens)
            .or_default()
            .insert(concept.clone());
    }
}

/// Build the gazetteer from training gold. Inserts (a) the tokenized surface
/// of every training mention and (b) the tokenized synonyms of every concept
/// annotated in training gold, with synonym records taken from the training
/// KB. Concepts never annotated in the training corpus contribute nothing.
pub fn build_gazetteer(train: &Corpus, training_kb: &KnowledgeBase) -> Gazetteer {
    let mut gazetteer = Gazetteer::default();
    let mut annotated: BTreeSet<&ConceptId> = BTreeSet::new();
    for ann in train.annotations() {
        annotated.insert(&ann.concept);
        if let Some(doc) = train.document(&ann.doc_id) {
            if let Some(surface) = char_slice(&doc.text, ann.span) {
                let tokens: Vec<String> =
                    tokenize(surface).into_iter().map(|t| t.token).collect();
                gazetteer.insert_entry(tokens, &ann.concept);
            }
        }
    }
    for concept_id in annotated {
        if let Some(concept) = training_kb.get(concept_id) {
            for synonym in &concept.synonyms {
                let tokens: Vec<String> =
                    tokenize(synonym).into_iter().map(|t| t.token).collect();
                gazetteer.insert_entry(tokens, concept_id);
            }
        }
    }
    gazetteer
}

/// Leftmost-longest non-overlapping dictionary matching over the document's
/// tokens. At each token position, match lengths are tried from
/// `min(max_len, remaining)` down to 1; on a match the covering character
/// span is emitted and scanning resumes past it.
pub fn tag(gazetteer: &Gazetteer, document: &Document) -> Vec<Span> {
    if gazetteer.is_empty() {
        return Vec::new();
    }
    let tokens = tokenize(&document.text);
    let token_strings: Vec<&String> = tokens.iter().map(|t| &t.token).collect();
    let mut spans = Vec::new();
    let mut i = 0usize;
    while i < tokens.len() {
        let longest = gazetteer.max_len.min(tokens.len() - i);
        let mut matched = None;
        for len in (1..=longest).rev() {
            let candidate: Vec<String> = token_strings[i..i + len]
                .iter()
                .map(|s| (*s).clone())
                .collect();
            if gazetteer.contains(&candidate) {
                matched = Some(len);
                break;
            }
        }
        match matched {
            Some(len) => {
                spans.push(Span {
                    start: tokens[i].span.start,
                    end: tokens[i + len - 1].span.end,
                });
                i += len;
            }
            None => i += 1,
        }
    }
    spans
}
