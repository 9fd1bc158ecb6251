//! Trie-constrained generative linking.
//!
//! Beam search over the target-sequence grammar:
//!
//! - outside markup: copy the next source token, or open a mention (`<mb>`);
//! - inside a mention: copy the next source token (budgeted by
//!   `max_span_tokens`), or close it (`<me>`) once at least one token was
//!   consumed;
//! - after `<me>`: `<eb>` is forced;
//! - inside the name block: exactly the trie continuations of the consumed
//!   name tokens, plus `<ee>` whenever the current trie node is terminal;
//! - after `<ee>`: resume copying.
//!
//! Names can only follow trie paths of the inference view, so every emitted
//! concept is in the view by construction. Hypotheses are ranked by mean
//! token log-likelihood under the bigram model and pruned to the beam width
//! at every decoding step; exact score ties are broken toward the
//! lexicographically smaller token sequence.
//!
//! Each completed markup segment `<mb> x_i .. x_j <me> <eb> name <ee>`
//! becomes a prediction: the concept is the lexicographically smallest id at
//! the trie terminal and the score is the mean log-likelihood over the
//! segment's own tokens.

use std::rc::Rc;

use crate::corpus::{tokenize, Document, Span, TokenSpan};
use crate::kb::ConceptId;
use crate::trie::{NameTrie, TrieCursor};

use super::lm::{BigramLm, SEQUENCE_START};
use super::target::{ENTITY_BEGIN, ENTITY_END, MENTION_BEGIN, MENTION_END};
use super::{Paradigm, ScoredPrediction};

/// Decoding parameters.
#[derive(Debug, Clone, Copy)]
pub struct GenerativeParams {
    pub beam: usize,
    pub max_span_tokens: usize,
}

impl Default for GenerativeParams {
    fn default() -> Self {
        GenerativeParams {
            beam: 6,
            max_span_tokens: 8,
        }
    }
}

/// Best hypothesis of one document.
#[derive(Debug, Clone)]
pub struct DecodedDocument {
    /// The winning target sequence.
    pub tokens: Vec<String>,
    /// Its mean token log-likelihood.
    pub mean_logp: f64,
    /// One prediction per markup segment, unfiltered.
    pub predictions: Vec<ScoredPrediction>,
    /// True when the winning hypothesis contains no markup at all.
    pub plain_copy: bool,
}

struct ChainNode<'a> {
    token: &'a str,
    prev: Option<Rc<ChainNode<'a>>>,
}

#[derive(Clone)]
struct Segment {
    span: Span,
    concept: ConceptId,
    score: f64,
}

#[derive(Clone)]
enum Mode<'a> {
    Copy,
    Mention { consumed: usize },
    ExpectEntityBegin,
    Entity { cursor: TrieCursor<'a>, consumed: usize },
}

#[derive(Clone)]
struct Hyp<'a> {
    chain: Option<Rc<ChainNode<'a>>>,
    len: usize,
    sum_logp: f64,
    /// Next source token to account for.
    src_pos: usize,
    mode: Mode<'a>,
    /// Last emitted token; context for the next natural emission.
    last: &'a str,
    /// Final token of the most recent mention; context for the name head.
    mention_last: &'a str,
    seg_sum: f64,
    seg_len: usize,
    seg_span: Span,
    segments: Rc<Vec<Segment>>,
}

impl<'a> Hyp<'a> {
    fn mean(&self) -> f64 {
        if self.len == 0 {
            0.0
        } else {
            self.sum_logp / self.len as f64
        }
    }

    fn sequence(&self) -> Vec<&'a str> {
        let mut out = Vec::with_capacity(self.len);
        let mut node = self.chain.clone();
        while let Some(n) = node {
            out.push(n.token);
            node = n.prev.clone();
        }
        out.reverse();
        out
    }

    fn emit(&self, token: &'a str, context: &'a str, lm: &BigramLm, in_segment: bool) -> Hyp<'a> {
        let logp = lm.logp(context, token);
        let mut child = self.clone();
        child.chain = Some(Rc::new(ChainNode {
            token,
            prev: self.chain.clone(),
        }));
        child.len += 1;
        child.sum_logp += logp;
        child.last = token;
        if in_segment {
            child.seg_sum += logp;
            child.seg_len += 1;
        }
        child
    }

    fn finished(&self, n_tokens: usize) -> bool {
        matches!(self.mode, Mode::Copy) && self.src_pos == n_tokens
    }
}

/// Higher mean first; exact ties toward the lexicographically smaller token
/// sequence.
fn better(a: &Hyp<'_>, b: &Hyp<'_>) -> std::cmp::Ordering {
    match b.mean().partial_cmp(&a.mean()) {
        Some(std::cmp::Ordering::Equal) | None => a.sequence().cmp(&b.sequence()),
        Some(order) => order,
    }
}

/// Decode one document and return its best hypothesis.
pub fn decode_document(
    doc: &Document,
    lm: &BigramLm,
    trie: &NameTrie,
    params: GenerativeParams,
) -> DecodedDocument {
    let tokens = tokenize(&doc.text);
    decode_with_tokens(doc, lm, trie, &tokens, params)
}

fn decode_with_tokens<'a>(
    doc: &Document,
    lm: &BigramLm,
    trie: &'a NameTrie,
    tokens: &'a [TokenSpan],
    params: GenerativeParams,
) -> DecodedDocument {
    let beam = params.beam.max(1);
    let n = tokens.len();
    let initial = Hyp {
        chain: None,
        len: 0,
        sum_logp: 0.0,
        src_pos: 0,
        mode: Mode::Copy,
        last: SEQUENCE_START,
        mention_last: SEQUENCE_START,
        seg_sum: 0.0,
        seg_len: 0,
        seg_span: Span { start: 0, end: 0 },
        segments: Rc::new(Vec::new()),
    };

    let mut active = vec![initial];
    let mut best_done: Option<Hyp<'a>> = None;
    // Longest legal sequence: every source token inside a mention plus its
    // name block; generous bound used purely as a loop guard.
    let max_steps = (n + 2) * (6 + trie.max_depth() + params.max_span_tokens);

    for _ in 0..max_steps {
        if active.is_empty() {
            break;
        }
        let mut candidates: Vec<Hyp<'a>> = Vec::new();
        for hyp in active.drain(..) {
            if hyp.finished(n) {
                let keep = match &best_done {
                    Some(done) => better(&hyp, done) == std::cmp::Ordering::Less,
                    None => true,
                };
                if keep {
                    best_done = Some(hyp);
                }
                continue;
            }
            match hyp.mode.clone() {
                Mode::Copy => {
                    // src_pos < n here; finished hypotheses were parked above.
                    let token = tokens[hyp.src_pos].token.as_str();
                    let mut copy = hyp.emit(token, hyp.last, lm, false);
                    copy.src_pos += 1;
                    candidates.push(copy);

                    let mut open = hyp.emit(MENTION_BEGIN, hyp.last, lm, true);
                    open.seg_sum = open.sum_logp - hyp.sum_logp;
                    open.seg_len = 1;
                    open.seg_span = Span {
                        start: tokens[hyp.src_pos].span.start,
                        end: tokens[hyp.src_pos].span.end,
                    };
                    open.mode = Mode::Mention { consumed: 0 };
                    candidates.push(open);
                }
                Mode::Mention { consumed } => {
                    if consumed < params.max_span_tokens && hyp.src_pos < n {
                        let token = tokens[hyp.src_pos].token.as_str();
                        let mut extend = hyp.emit(token, hyp.last, lm, true);
                        extend.seg_span.end = tokens[hyp.src_pos].span.end;
                        extend.src_pos += 1;
                        extend.mode = Mode::Mention {
                            consumed: consumed + 1,
                        };
                        candidates.push(extend);
                    }
                    if consumed >= 1 {
                        let mut close = hyp.emit(MENTION_END, hyp.last, lm, true);
                        close.mention_last = hyp.last;
                        close.mode = Mode::ExpectEntityBegin;
                        candidates.push(close);
                    }
                }
                Mode::ExpectEntityBegin => {
                    let mut begin = hyp.emit(ENTITY_BEGIN, hyp.last, lm, true);
                    begin.mode = Mode::Entity {
                        cursor: trie.cursor(),
                        consumed: 0,
                    };
                    candidates.push(begin);
                }
                Mode::Entity { cursor, consumed } => {
                    for (token, child_cursor) in cursor.children() {
                        let context = if consumed == 0 { hyp.mention_last } else { hyp.last };
                        let mut step = hyp.emit(token, context, lm, true);
                        step.mode = Mode::Entity {
                            cursor: child_cursor,
                            consumed: consumed + 1,
                        };
                        candidates.push(step);
                    }
                    if cursor.is_terminal() {
                        let mut end = hyp.emit(ENTITY_END, hyp.last, lm, true);
                        let concept = cursor
                            .min_concept()
                            .expect("terminal node owns a concept")
                            .clone();
                        let segment = Segment {
                            span: end.seg_span,
                            concept,
                            score: end.seg_sum / end.seg_len as f64,
                        };
                        Rc::make_mut(&mut end.segments).push(segment);
                        end.seg_sum = 0.0;
                        end.seg_len = 0;
                        end.mode = Mode::Copy;
                        candidates.push(end);
                    }
                }
            }
        }
        candidates.sort_by(better);
        candidates.truncate(beam);
        active = candidates;
    }

    let best = match best_done {
        Some(done) => done,
        // Unreachable for well-formed tries; fall back to the plain copy.
        None => {
            let mut hyp = Hyp {
                chain: None,
                len: 0,
                sum_logp: 0.0,
                src_pos: 0,
                mode: Mode::Copy,
                last: SEQUENCE_START,
                mention_last: SEQUENCE_START,
                seg_sum: 0.0,
                seg_len: 0,
                seg_span: Span { start: 0, end: 0 },
                segments: Rc::new(Vec::new()),
            };
            for token in tokens {
                hyp = hyp.emit(token.token.as_str(), hyp.last, lm, false);
                hyp.src_pos += 1;
            }
            hyp
        }
    };

    let predictions: Vec<ScoredPrediction> = best
        .segments
        .iter()
        .map(|segment| ScoredPrediction {
            doc_id: doc.doc_id.clone(),
            span: segment.span,
            concept: segment.concept.clone(),
            score: segment.score,
            paradigm: Paradigm::Generative,
        })
        .collect();
    DecodedDocument {
        tokens: best.sequence().iter().map(|t| t.to_string()).collect(),
        mean_logp: best.mean(),
        plain_copy: predictions.is_empty(),
        predictions,
    }
}

/// Decode and keep segment predictions scoring at least `theta`, best score
/// per span, in span order.
pub fn link_generative(
    doc: &Document,
    lm: &BigramLm,
    trie: &NameTrie,
    params: GenerativeParams,
    theta: f64,
) -> Vec<ScoredPrediction> {
    let decoded = decode_document(doc, lm, trie, params);
    let mut kept: Vec<ScoredPrediction> = decoded
        .predictions
        .into_iter()
        .filter(|p| p.score >= theta)
        .collect();
    // Segments of one hypothesis cannot share a span, so deduplication is a
    // plain sort here.
    kept.sort_by(|a, b| a.span.cmp(&b.span).then(a.concept.cmp(&b.concept)));
    kept
}
