//! Target sequences for the generative paradigm.
//!
//! A document with gold annotations becomes its token stream with every gold
//! mention wrapped in mention markers and followed by a marked block holding
//! the tokenized canonical name of the gold concept:
//!
//! ```text
//! ... <mb> x_i ... x_j <me> <eb> name tokens <ee> ...
//! ```
//!
//! Text tokens are lowercase alphanumeric runs, so the bracketed markers can
//! never collide with them.

use crate::corpus::{tokenize, Document, GoldAnnotation, Span};
use crate::kb::KnowledgeBase;

use super::ParadigmError;

pub const MENTION_BEGIN: &str = "<mb>";
pub const MENTION_END: &str = "<me>";
pub const ENTITY_BEGIN: &str = "<eb>";
pub const ENTITY_END: &str = "<ee>";
pub const MARKERS: [&str; 4] = [MENTION_BEGIN, MENTION_END, ENTITY_BEGIN, ENTITY_END];

pub fn is_marker(token: &str) -> bool {
    MARKERS.contains(&token)
}

/// A token list mixing source tokens and the four markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSequence {
    pub tokens: Vec<String>,
}

/// A built sequence plus counts of the adjustments that were needed.
#[derive(Debug, Clone)]
pub struct TargetBuild {
    pub sequence: TargetSequence,
    /// Gold spans that were not token-aligned and were snapped outward to
    /// the enclosing tokens.
    pub snapped: usize,
    /// Gold spans covering no token at all; they cannot be marked up and are
    /// left out of the sequence.
    pub skipped: usize,
}

/// Build the target sequence of one document. Annotations must be
/// non-overlapping after snapping; the gold concept's canonical name is
/// looked up in `kb`.
pub fn build_target_sequence(
    doc: &Document,
    annotations: &[GoldAnnotation],
    kb: &KnowledgeBase,
) -> Result<TargetBuild, ParadigmError> {
    let tokens = tokenize(&doc.text);
    let mut snapped = 0usize;
    let mut skipped = 0usize;

    // Token range covered by each annotation, snapped outward.
    let mut mentions: Vec<(usize, usize, &GoldAnnotation)> = Vec::new();
    for ann in annotations {
        let first = tokens.partition_point(|t| t.span.end <= ann.span.start);
        let last = tokens.partition_point(|t| t.span.start < ann.span.end);
        if first >= last {
            skipped += 1;
            continue;
        }
        let covered = Span {
            start: tokens[first].span.start,
            end: tokens[last - 1].span.end,
        };
        if covered != ann.span {
            snapped += 1;
        }
        mentions.push((first, last, ann));
    }
    mentions.sort_by_key(|(first, last, _)| (*first, *last));
    for pair in mentions.windows(2) {
        let (_, a_end, a) = pair[0];
        let (b_start, _, b) = pair[1];
        if b_start < a_end {
            return Err(ParadigmError::OverlappingGold {
                doc_id: doc.doc_id.clone(),
                a: a.span,
                b: b.span,
            });
        }
    }

    let mut out: Vec<String> = Vec::with_capacity(tokens.len() + mentions.len() * 6);
    let mut pos = 0usize;
    for (first, last, ann) in &mentions {
        while pos < *first {
            out.push(tokens[pos].token.clone());
            pos += 1;
        }
        let concept = kb
            .get(&ann.concept)
            .ok_or_else(|| ParadigmError::UnknownConcept(ann.concept.clone()))?;
        out.push(MENTION_BEGIN.to_string());
        while pos < *last {
            out.push(tokens[pos].token.clone());
            pos += 1;
        }
        out.push(MENTION_END.to_string());
        out.push(ENTITY_BEGIN.to_string());
        for name_token in tokenize(&concept.canonical_name) {
            out.push(name_token.token);
        }
        out.push(ENTITY_END.to_string());
    }
    while pos < tokens.len() {
        out.push(tokens[pos].token.clone());
        pos += 1;
    }

    Ok(TargetBuild {
        sequence: TargetSequence { tokens: out },
        snapped,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Span;
    use crate::kb::{Concept, KnowledgeBase};

    fn kb() -> KnowledgeBase {
        KnowledgeBase::new(
            "kb",
            vec![
                Concept::new("D007022".parse().unwrap(), "hypotension", [], []).unwrap(),
                Concept::new("D012964".parse().unwrap(), "sodium depletion", [], []).unwrap(),
            ],
        )
        .unwrap()
    }

    fn doc(text: &str) -> Document {
        Document {
            doc_id: "d".into(),
            text: text.into(),
        }
    }

    fn ann(start: usize, end: usize, concept: &str) -> GoldAnnotation {
        GoldAnnotation {
            doc_id: "d".into(),
            span: Span { start, end },
            concept: concept.parse().unwrap(),
        }
    }

    #[test]
    fn single_mention_markup() {
        let build =
            build_target_sequence(&doc("hypotension occurred"), &[ann(0, 11, "D007022")], &kb())
                .unwrap();
        assert_eq!(
            build.sequence.tokens,
            vec![
                MENTION_BEGIN,
                "hypotension",
                MENTION_END,
                ENTITY_BEGIN,
                "hypotension",
                ENTITY_END,
                "occurred"
            ]
        );
        assert_eq!(build.snapped, 0);
    }

    #[test]
    fn no_gold_is_plain_token_sequence() {
        let build = build_target_sequence(&doc("plain text here"), &[], &kb()).unwrap();
        assert_eq!(build.sequence.tokens, vec!["plain", "text", "here"]);
    }

    #[test]
    fn two_mentions_emit_two_marker_pairs() {
        let text = "hypotension after sodium depletion";
        let build = build_target_sequence(
            &doc(text),
            &[ann(0, 11, "D007022"), ann(18, 34, "D012964")],
            &kb(),
        )
        .unwrap();
        let tokens = &build.sequence.tokens;
        assert_eq!(tokens.iter().filter(|t| *t == MENTION_BEGIN).count(), 2);
        assert_eq!(tokens.iter().filter(|t| *t == ENTITY_END).count(), 2);
        // Markers appear in grammar order.
        let order: Vec<&str> = tokens
            .iter()
            .filter(|t| is_marker(t))
            .map(|t| t.as_str())
            .collect();
        assert_eq!(
            order,
            vec![
                MENTION_BEGIN,
                MENTION_END,
                ENTITY_BEGIN,
                ENTITY_END,
                MENTION_BEGIN,
                MENTION_END,
                ENTITY_BEGIN,
                ENTITY_END
            ]
        );
    }

    #[test]
    fn unaligned_span_is_snapped_outward() {
        let build =
            build_target_sequence(&doc("hypotension occurred"), &[ann(0, 5, "D007022")], &kb())
                .unwrap();
        assert_eq!(build.snapped, 1);
        assert_eq!(build.sequence.tokens[1], "hypotension");
    }

    #[test]
    fn overlapping_gold_is_an_error() {
        let err = build_target_sequence(
            &doc("sodium depletion happened"),
            &[ann(0, 16, "D012964"), ann(7, 16, "D007022")],
            &kb(),
        )
        .unwrap_err();
        assert!(matches!(err, ParadigmError::OverlappingGold { .. }));
    }

    #[test]
    fn span_over_separator_only_is_skipped() {
        let build = build_target_sequence(&doc("a - b"), &[ann(2, 3, "D007022")], &kb()).unwrap();
        assert_eq!(build.skipped, 1);
        assert_eq!(build.sequence.tokens, vec!["a", "b"]);
    }
}
