//! Entity linking under partial knowledge-base inference.
//!
//! A training knowledge base `E1` labels the corpora, while inference is
//! restricted to a partial view `E2 ⊊ E1`. Mentions whose concept falls in
//! `E1 − E2` are NIL under the view: a correct system emits nothing for
//! them, and systems that keep detecting them lose precision.
//!
//! The crate provides:
//!
//! - [`kb`]: knowledge bases, partial views, subset/complement construction.
//! - [`corpus`]: documents, gold annotations, tokenization, gold restriction.
//! - [`embed`]: character-trigram hashed embeddings and exact nearest-neighbor
//!   search over concept synonyms.
//! - [`trie`]: a token prefix trie over concept names for constrained decoding.
//! - [`tagger`]: a gazetteer mention detector built from training data.
//! - [`paradigms`]: the three linking paradigms (NER→NED, NED→NER, and
//!   trie-constrained generation) producing [`paradigms::ScoredPrediction`]s.
//! - [`redemption`]: post-pruning and score thresholding with dev-set search.
//! - [`eval`]: span-exact precision/recall/F1, NED accuracy, R@K, and the
//!   annotation-proportion report.
//! - [`synth`]: a seeded synthetic KB + corpus generator for reproducible
//!   benchmarks.
//!
//! Everything is deterministic given its inputs; there is no hidden global
//! state and no system RNG.

pub mod corpus;
pub mod embed;
pub mod eval;
pub mod kb;
pub mod paradigms;
pub mod redemption;
pub mod rng;
pub mod synth;
pub mod tagger;
pub mod trie;

pub use corpus::{Corpus, Document, GoldAnnotation, Span, Split, TokenSpan};
pub use kb::{Concept, ConceptId, KbView, KnowledgeBase, PartialKb, Selector};
pub use paradigms::{Paradigm, ScoredPrediction};
