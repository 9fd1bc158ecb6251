// Scratch harness for inspecting decoded sequences; superseded by the
// acceptance suite.

use partial_el::corpus::{char_slice, restrict_gold};
use partial_el::paradigms::{decode_document, train_lm, GenerativeParams};
use partial_el::synth::{generate, SynthConfig};
use partial_el::trie::build_trie;

#[test]
#[ignore]
fn debug_decode() {
    let config = SynthConfig {
        seed: 42,
        n_concepts: 500,
        synonyms_per_concept: (1, 3),
        n_types: 5,
        docs_per_split: (2400, 120, 200),
        mentions_per_doc: (3, 6),
        filler_tokens_between: (4, 9),
        surface_noise_prob: 0.05,
        partial_fraction: 0.4,
        zipf_exponent: 1.0,
    };
    let out = generate(&config).unwrap();
    let sampled = out.partials.iter().find(|p| p.name() == "sampled").unwrap();
    let e2 = out.kb.view_of(sampled).unwrap();
    let train_restricted = restrict_gold(&out.train, e2);
    let lm_inkb = train_lm(&train_restricted, &out.kb).unwrap().lm;
    let lm_full = train_lm(&out.train, &out.kb).unwrap().lm;
    let trie_e2 = build_trie(e2, false);
    let gold_test = restrict_gold(&out.test, e2);

    let mut fp_nil = 0;
    let mut fp_overlap_gold = 0;
    let mut fp_phrase = 0;
    let mut tp = 0;
    for doc in out.test.documents().take(200) {
        let decoded = decode_document(doc, &lm_inkb, &trie_e2, GenerativeParams { beam: 16, max_span_tokens: 8 });
        for p in &decoded.predictions {
            let exact = gold_test
                .annotations_of(&doc.doc_id)
                .iter()
                .any(|g| g.span == p.span);
            if exact {
                tp += 1;
                continue;
            }
            // overlaps any gold mention (in-view or not)?
            let all = out.test.annotations_of(&doc.doc_id);
            let over_nil = all.iter().any(|g| {
                g.span.overlaps(&p.span) && !sampled.contains(&g.concept)
            });
            let over_gold = all.iter().any(|g| {
                g.span.overlaps(&p.span) && sampled.contains(&g.concept)
            });
            if over_nil && !over_gold {
                fp_nil += 1;
                if fp_nil <= 8 {
                    println!("FP-NIL  {:?} {:?} {} {:.3}", p.span, char_slice(&doc.text, p.span).unwrap(), p.concept, p.score);
                }
            } else if over_gold {
                fp_overlap_gold += 1;
                if fp_overlap_gold <= 8 {
                    println!("FP-GOLD {:?} {:?} {} {:.3}", p.span, char_slice(&doc.text, p.span).unwrap(), p.concept, p.score);
                }
            } else {
                fp_phrase += 1;
                if fp_phrase <= 8 {
                    println!("FP-PHR  {:?} {:?} {} {:.3}", p.span, char_slice(&doc.text, p.span).unwrap(), p.concept, p.score);
                }
            }
        }
    }
    println!("in-kb beam16: tp(span)={tp} fp_nil={fp_nil} fp_overlap_gold={fp_overlap_gold} fp_phrase={fp_phrase}");
}
