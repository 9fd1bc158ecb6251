//! NER→NED: detect mentions first, then disambiguate inside the view.
//!
//! The gazetteer knows only the training KB, so the detected span set is
//! identical whichever inference view is used; a smaller view can only
//! change concepts and scores. Mentions whose concept is outside the view
//! are still detected and get linked to the nearest in-view concept — the
//! precision failure this framework measures.

use crate::corpus::{char_slice, Document};
use crate::embed::{embed_text, nearest, ConceptIndex};
use crate::tagger::{tag, Gazetteer};

use super::{Paradigm, ParadigmError, ScoredPrediction};

/// Tag mentions with the gazetteer and link each to its nearest concept in
/// the index's view. The score is the maximum cosine over the view.
pub fn link_ner_ned(
    doc: &Document,
    gazetteer: &Gazetteer,
    index: &ConceptIndex,
) -> Result<Vec<ScoredPrediction>, ParadigmError> {
    let mut predictions = Vec::new();
    for span in tag(gazetteer, doc) {
        let surface = char_slice(&doc.text, span).unwrap_or_default();
        let query = embed_text(surface);
        let top = nearest(index, &query, 1)?;
        let (concept, score) = top
            .into_iter()
            .next()
            .expect("nearest over a non-empty index yields a hit");
        predictions.push(ScoredPrediction {
            doc_id: doc.doc_id.clone(),
            span,
            concept,
            score,
            paradigm: Paradigm::NerNed,
        });
    }
    Ok(predictions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, GoldAnnotation, Span, Split};
    use crate::embed::{build_index, cosine};
    use crate::kb::{complement, subset, Concept, KnowledgeBase, Selector};
    use crate::rng::Rng;
    use crate::tagger::build_gazetteer;

    fn kb() -> KnowledgeBase {
        KnowledgeBase::new(
            "kb",
            vec![
                Concept::new("D1".parse().unwrap(), "hypotension", [], []).unwrap(),
                Concept::new("D2".parse().unwrap(), "hypertension", [], []).unwrap(),
                Concept::new("D3".parse().unwrap(), "sodium", [], []).unwrap(),
            ],
        )
        .unwrap()
    }

    fn train() -> Corpus {
        Corpus::new(
            Split::Train,
            vec![Document {
                doc_id: "t".into(),
                text: "hypotension and hypertension and sodium".into(),
            }],
            vec![
                GoldAnnotation {
                    doc_id: "t".into(),
                    span: Span { start: 0, end: 11 },
                    concept: "D1".parse().unwrap(),
                },
                GoldAnnotation {
                    doc_id: "t".into(),
                    span: Span { start: 16, end: 28 },
                    concept: "D2".parse().unwrap(),
                },
                GoldAnnotation {
                    doc_id: "t".into(),
                    span: Span { start: 33, end: 39 },
                    concept: "D3".parse().unwrap(),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn exact_synonym_links_with_unit_score() {
        let kb = kb();
        let gazetteer = build_gazetteer(&train(), &kb);
        let index = build_index(kb.full_view());
        let doc = Document {
            doc_id: "d".into(),
            text: "severe hypotension".into(),
        };
        let preds = link_ner_ned(&doc, &gazetteer, &index).unwrap();
        assert_eq!(preds.len(), 1);
        assert_eq!(preds[0].concept.as_str(), "D1");
        assert!((preds[0].score - 1.0).abs() < 1e-9);
        assert_eq!(preds[0].span, Span { start: 7, end: 18 });
    }

    #[test]
    fn span_set_is_invariant_to_the_inference_view() {
        let kb = kb();
        let gazetteer = build_gazetteer(&train(), &kb);
        let full_index = build_index(kb.full_view());
        let without_d1 = subset(
            &kb,
            "no-d1",
            &Selector::Ids(vec!["D2".parse().unwrap(), "D3".parse().unwrap()]),
        )
        .unwrap()
        .partial;
        let partial_index = build_index(kb.view_of(&without_d1).unwrap());

        let doc = Document {
            doc_id: "d".into(),
            text: "hypotension then sodium".into(),
        };
        let full = link_ner_ned(&doc, &gazetteer, &full_index).unwrap();
        let partial = link_ner_ned(&doc, &gazetteer, &partial_index).unwrap();

        let full_spans: Vec<Span> = full.iter().map(|p| p.span).collect();
        let partial_spans: Vec<Span> = partial.iter().map(|p| p.span).collect();
        assert_eq!(full_spans, partial_spans);

        // The NIL mention is linked to the nearest remaining concept, with a
        // lower score than the exact match it had under the full view.
        assert_eq!(full[0].concept.as_str(), "D1");
        assert!(partial[0].concept.as_str() != "D1");
        assert!(partial[0].score < full[0].score);
        // Every emitted concept stays inside the view.
        for p in &partial {
            assert!(without_d1.contains(&p.concept));
        }
    }

    #[test]
    fn matches_independent_exhaustive_reimplementation() {
        // A 20-document fixture linked by an independent oracle that loops
        // over every index entry for each tagged span.
        let mut rng = Rng::new(99);
        let concepts: Vec<Concept> = (0..30)
            .map(|i| {
                let name: String = (0..rng.range(4, 9))
                    .map(|_| (b'a' + rng.below(26) as u8) as char)
                    .collect();
                Concept::new(format!("C{i:02}").parse().unwrap(), name, [], []).unwrap()
            })
            .collect();
        let kb = KnowledgeBase::new("kb", concepts).unwrap();

        let surfaces: Vec<String> = kb.concepts().map(|c| c.canonical_name.clone()).collect();
        let mut docs = Vec::new();
        let mut annotations = Vec::new();
        for d in 0..20 {
            let mut text = String::new();
            for m in 0..3 {
                if m > 0 {
                    text.push_str(" x ");
                }
                let concept = rng.below(surfaces.len() as u64) as usize;
                let start = text.chars().count();
                text.push_str(&surfaces[concept]);
                annotations.push(GoldAnnotation {
                    doc_id: format!("d{d}"),
                    span: Span {
                        start,
                        end: text.chars().count(),
                    },
                    concept: format!("C{concept:02}").parse().unwrap(),
                });
            }
            docs.push(Document {
                doc_id: format!("d{d}"),
                text,
            });
        }
        let train = Corpus::new(Split::Train, docs.clone(), annotations).unwrap();
        let gazetteer = build_gazetteer(&train, &kb);

        let half = subset(
            &kb,
            "half",
            &Selector::Ids((0..15).map(|i| format!("C{i:02}").parse().unwrap()).collect()),
        )
        .unwrap()
        .partial;
        let comp = complement(&kb, &half).unwrap();

        for partial in [&half, &comp] {
            let view = kb.view_of(partial).unwrap();
            let index = build_index(view);
            for doc in &docs {
                let preds = link_ner_ned(doc, &gazetteer, &index).unwrap();
                // Oracle: same tagging, but exhaustive search written directly
                // against the KB records.
                let spans = tag(&gazetteer, doc);
                assert_eq!(spans.len(), preds.len());
                for (span, pred) in spans.iter().zip(&preds) {
                    let query = embed_text(char_slice(&doc.text, *span).unwrap());
                    let mut best: Option<(&str, f64)> = None;
                    for concept in view.concepts() {
                        for synonym in &concept.synonyms {
                            let score = cosine(&query, &embed_text(synonym));
                            let better = match best {
                                None => true,
                                Some((bid, bs)) => {
                                    score > bs
                                        || (score == bs && concept.id.as_str() < bid)
                                }
                            };
                            if better {
                                best = Some((concept.id.as_str(), score));
                            }
                        }
                    }
                    let (oracle_id, oracle_score) = best.unwrap();
                    assert_eq!(pred.concept.as_str(), oracle_id);
                    assert!((pred.score - oracle_score).abs() < 1e-12);
                }
            }
        }
    }
}
