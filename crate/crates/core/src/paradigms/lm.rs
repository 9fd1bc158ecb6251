//! Add-k smoothed bigram language model over target sequences.
//!
//! `P(x | prev) = (count(prev, x) + k) / (count(prev) + k·|V|)` with
//! `k = 0.5`; the vocabulary is every token observed in the training target
//! sequences plus the four markers plus `<unk>`. Out-of-vocabulary tokens
//! are scored as `<unk>`; an unseen context falls back to the uniform
//! smoothed distribution.
//!
//! Conditioning contexts are the immediately preceding token, with one
//! exception: the first token of a concept-name block is conditioned on the
//! final mention token. The `<me>` and `<eb>` markers between them are
//! deterministic separators, and an order-1 model that conditioned the name
//! head on `<eb>` would choose concept names independently of the mention
//! being annotated. See [`conditioning_pairs`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::kb::KnowledgeBase;

use super::target::{build_target_sequence, ENTITY_BEGIN, MARKERS, MENTION_END};
use super::{ParadigmError, TargetSequence};

/// Placeholder for tokens outside the training vocabulary.
pub const UNKNOWN: &str = "<unk>";
/// Context of the first token of a sequence; not part of the vocabulary.
pub const SEQUENCE_START: &str = "<s>";

/// Smoothing constant.
const ADD_K: f64 = 0.5;

/// (context, token) pairs of a target sequence: each token is paired with
/// the token before it (`<s>` for the first), except that a token directly
/// after `<eb>` is paired with the last mention token instead.
pub fn conditioning_pairs(tokens: &[String]) -> Vec<(&str, &str)> {
    let mut pairs = Vec::with_capacity(tokens.len());
    let mut last_mention_token: Option<&str> = None;
    for (i, token) in tokens.iter().enumerate() {
        let natural = if i == 0 {
            SEQUENCE_START
        } else {
            tokens[i - 1].as_str()
        };
        let context = if natural == ENTITY_BEGIN {
            last_mention_token.unwrap_or(natural)
        } else {
            natural
        };
        pairs.push((context, token.as_str()));
        if token == MENTION_END && i > 0 {
            last_mention_token = Some(tokens[i - 1].as_str());
        }
    }
    pairs
}

/// Add-k smoothed bigram model.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramLm {
    vocab: BTreeSet<String>,
    context_counts: BTreeMap<String, u64>,
    bigram_counts: BTreeMap<(String, String), u64>,
    k: f64,
}

impl BigramLm {
    /// Count the conditioning pairs of the given target sequences.
    pub fn fit<'a>(sequences: impl IntoIterator<Item = &'a TargetSequence>) -> Self {
        let mut vocab: BTreeSet<String> = MARKERS.iter().map(|m| m.to_string()).collect();
        vocab.insert(UNKNOWN.to_string());
        let mut context_counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut bigram_counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for sequence in sequences {
            for token in &sequence.tokens {
                vocab.insert(token.clone());
            }
            for (context, token) in conditioning_pairs(&sequence.tokens) {
                *context_counts.entry(context.to_string()).or_insert(0) += 1;
                *bigram_counts
                    .entry((context.to_string(), token.to_string()))
                    .or_insert(0) += 1;
            }
        }
        BigramLm {
            vocab,
            context_counts,
            bigram_counts,
            k: ADD_K,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(|s| s.as_str())
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Total number of counted pairs.
    pub fn pair_count(&self) -> u64 {
        self.context_counts.values().sum()
    }

    /// `P(token | context)`. Out-of-vocabulary tokens are mapped to
    /// `<unk>`; the context is looked up as given.
    pub fn prob(&self, context: &str, token: &str) -> f64 {
        let token = if self.vocab.contains(token) {
            token
        } else {
            UNKNOWN
        };
        let context_count = self.context_counts.get(context).copied().unwrap_or(0) as f64;
        let pair_count = self
            .bigram_counts
            .get(&(context.to_string(), token.to_string()))
            .copied()
            .unwrap_or(0) as f64;
        (pair_count + self.k) / (context_count + self.k * self.vocab.len() as f64)
    }

    pub fn logp(&self, context: &str, token: &str) -> f64 {
        self.prob(context, token).ln()
    }

    /// Mean log-likelihood of a full token sequence under the conditioning
    /// scheme of [`conditioning_pairs`]. Empty sequences score 0.
    pub fn mean_logp(&self, tokens: &[String]) -> f64 {
        if tokens.is_empty() {
            return 0.0;
        }
        let sum: f64 = conditioning_pairs(tokens)
            .iter()
            .map(|(context, token)| self.logp(context, token))
            .sum();
        sum / tokens.len() as f64
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ParadigmError> {
        let file: LmFile = self.into();
        let json = serde_json::to_string(&file).unwrap();
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ParadigmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let file: LmFile = serde_json::from_str(&text).map_err(|e| ParadigmError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?;
        Ok(file.into())
    }
}

#[derive(Serialize, Deserialize)]
struct LmFile {
    k: f64,
    vocab: Vec<String>,
    contexts: BTreeMap<String, u64>,
    bigrams: BTreeMap<String, BTreeMap<String, u64>>,
}

impl From<&BigramLm> for LmFile {
    fn from(lm: &BigramLm) -> Self {
        let mut bigrams: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
        for ((context, token), count) in &lm.bigram_counts {
            bigrams
                .entry(context.clone())
                .or_default()
                .insert(token.clone(), *count);
        }
        LmFile {
            k: lm.k,
            vocab: lm.vocab.iter().cloned().collect(),
            contexts: lm.context_counts.clone(),
            bigrams,
        }
    }
}

impl From<LmFile> for BigramLm {
    fn from(file: LmFile) -> Self {
        let mut bigram_counts = BTreeMap::new();
        for (context, tokens) in file.bigrams {
            for (token, count) in tokens {
                bigram_counts.insert((context.clone(), token), count);
            }
        }
        BigramLm {
            vocab: file.vocab.into_iter().collect(),
            context_counts: file.contexts,
            bigram_counts,
            k: file.k,
        }
    }
}

/// A trained model plus counts of training documents that could not be
/// turned into target sequences.
#[derive(Debug, Clone)]
pub struct TrainedLm {
    pub lm: BigramLm,
    /// Documents skipped because their gold spans overlap even after
    /// same-span deduplication.
    pub skipped_docs: usize,
    /// Gold spans snapped outward to token boundaries across the corpus.
    pub snapped_spans: usize,
}

/// Build target sequences for every training document (gold against the
/// training KB) and fit the bigram model on them.
///
/// Same-span duplicate annotations (from composite-mention expansion) keep
/// the lexicographically smallest concept; documents whose spans still
/// overlap are skipped and counted.
pub fn train_lm(train: &Corpus, training_kb: &KnowledgeBase) -> Result<TrainedLm, ParadigmError> {
    let mut sequences = Vec::new();
    let mut skipped_docs = 0usize;
    let mut snapped_spans = 0usize;
    for doc in train.documents() {
        let mut annotations = train.annotations_of(&doc.doc_id).to_vec();
        annotations.sort();
        annotations.dedup_by(|b, a| a.span == b.span); // keeps smallest concept per span
        match build_target_sequence(doc, &annotations, training_kb) {
            Ok(build) => {
                snapped_spans += build.snapped;
                sequences.push(build.sequence);
            }
            Err(ParadigmError::OverlappingGold { .. }) => skipped_docs += 1,
            Err(other) => return Err(other),
        }
    }
    Ok(TrainedLm {
        lm: BigramLm::fit(&sequences),
        skipped_docs,
        snapped_spans,
    })
}
