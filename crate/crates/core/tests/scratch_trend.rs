// Scratch harness for eyeballing benchmark dynamics; superseded by the
// acceptance suite.

use partial_el::corpus::restrict_gold;
use partial_el::embed::build_index;
use partial_el::eval::evaluate;
use partial_el::kb::KbView;
use partial_el::paradigms::{
    link_corpus, link_generative, link_ned_ner, link_ner_ned, train_lm, GenerativeParams,
};
use partial_el::redemption::{apply_threshold, post_prune, tune_threshold};
use partial_el::synth::{generate, SynthConfig};
use partial_el::tagger::build_gazetteer;
use partial_el::trie::build_trie;

#[test]
#[ignore]
fn trend_scratch() {
    let config = SynthConfig {
        seed: 42,
        n_concepts: 500,
        synonyms_per_concept: (1, 3),
        n_types: 5,
        docs_per_split: (4800, 150, 200),
        mentions_per_doc: (2, 5),
        filler_tokens_between: (5, 10),
        surface_noise_prob: 0.05,
        partial_fraction: 0.4,
        zipf_exponent: 1.0,
    };
    let start = std::time::Instant::now();
    let out = generate(&config).unwrap();
    let sampled = out.partials.iter().find(|p| p.name() == "sampled").unwrap();
    let e2 = out.kb.view_of(sampled).unwrap();
    let e1 = out.kb.full_view();
    let gold_test = restrict_gold(&out.test, e2);
    let gold_dev = restrict_gold(&out.dev, e2);
    let train_restricted = restrict_gold(&out.train, e2);
    println!("generate: {:?}", start.elapsed());
    println!(
        "test mentions {} -> in-view {}",
        out.test.annotations().len(),
        gold_test.annotations().len()
    );

    let report = |tag: &str, preds: &[partial_el::ScoredPrediction], gold: &partial_el::Corpus| {
        let m = evaluate(preds, gold.annotations());
        println!(
            "{tag}: n_pred={} EL P={:.3} R={:.3} F1={:.3} | NER P={:.3} R={:.3} F1={:.3} | NED {:?}",
            m.counts.n_pred,
            m.el.precision,
            m.el.recall,
            m.el.f1,
            m.ner.precision,
            m.ner.recall,
            m.ner.f1,
            m.ned_accuracy
        );
        m
    };

    // ---- NER-NED ----
    let t = std::time::Instant::now();
    let gaz_full = build_gazetteer(&out.train, &out.kb);
    let gaz_inkb = build_gazetteer(&train_restricted, &out.kb);
    let index_e2 = build_index(e2);
    let index_e1 = build_index(e1);
    let nn = |gaz: &partial_el::tagger::Gazetteer, index: &partial_el::embed::ConceptIndex, corpus: &partial_el::Corpus| {
        link_corpus(corpus, 4, |doc| link_ner_ned(doc, gaz, index)).unwrap()
    };
    let nn_direct = nn(&gaz_full, &index_e2, &out.test);
    let nn_inkb = nn(&gaz_inkb, &index_e2, &out.test);
    let nn_e1 = nn(&gaz_full, &index_e1, &out.test);
    let m_direct = report("ner_ned direct ", &nn_direct, &gold_test);
    let m_inkb = report("ner_ned in-kb  ", &nn_inkb, &gold_test);
    let m_prune = report(
        "ner_ned pruned ",
        &post_prune(&nn_e1, sampled),
        &gold_test,
    );
    let nn_dev = nn(&gaz_full, &index_e2, &out.dev);
    let th = tune_threshold(&nn_dev, gold_dev.annotations());
    println!("ner_ned theta = {:.4} dev_f1 {:.3}", th.value, th.dev_f1);
    let m_thresh = report(
        "ner_ned thresh ",
        &apply_threshold(&nn_direct, th.value),
        &gold_test,
    );
    println!(
        "NER-NED: precision drop {:.1}pp, recall change {:.1}pp, gap {:.3}, prune rec {:.2}, thresh rec {:.2}",
        100.0 * (m_inkb.ner.precision - m_direct.ner.precision),
        100.0 * (m_inkb.ner.recall - m_direct.ner.recall).abs(),
        m_inkb.el.f1 - m_direct.el.f1,
        (m_prune.el.f1 - m_direct.el.f1) / (m_inkb.el.f1 - m_direct.el.f1),
        (m_thresh.el.f1 - m_direct.el.f1) / (m_inkb.el.f1 - m_direct.el.f1),
    );
    println!("ner_ned time: {:?}", t.elapsed());

    // ---- generative ----
    let t = std::time::Instant::now();
    let lm_full = train_lm(&out.train, &out.kb).unwrap().lm;
    let lm_inkb = train_lm(&train_restricted, &out.kb).unwrap().lm;
    let trie_e2 = build_trie(e2, false);
    let trie_e1 = build_trie(e1, false);
    let params = GenerativeParams { beam: 16, max_span_tokens: 8 };
    let gen = |lm: &partial_el::paradigms::BigramLm, trie: &partial_el::trie::NameTrie, corpus: &partial_el::Corpus| {
        link_corpus(corpus, 4, |doc| {
            Ok(link_generative(doc, lm, trie, params, f64::NEG_INFINITY))
        })
        .unwrap()
    };
    let g_direct = gen(&lm_full, &trie_e2, &out.test);
    let g_inkb = gen(&lm_inkb, &trie_e2, &out.test);
    let g_e1 = gen(&lm_full, &trie_e1, &out.test);
    let gm_direct = report("gen direct ", &g_direct, &gold_test);
    let gm_inkb = report("gen in-kb  ", &g_inkb, &gold_test);
    let gm_prune = report("gen pruned ", &post_prune(&g_e1, sampled), &gold_test);
    let g_dev = gen(&lm_full, &trie_e2, &out.dev);
    let gth = tune_threshold(&g_dev, gold_dev.annotations());
    println!("gen theta = {:.4} dev_f1 {:.3}", gth.value, gth.dev_f1);
    let gm_thresh = report(
        "gen thresh ",
        &apply_threshold(&g_direct, gth.value),
        &gold_test,
    );
    println!(
        "GEN: precision drop {:.1}pp, recall change {:.1}pp, gap {:.3}, prune rec {:.2}, thresh rec {:.2}",
        100.0 * (gm_inkb.ner.precision - gm_direct.ner.precision),
        100.0 * (gm_inkb.ner.recall - gm_direct.ner.recall).abs(),
        gm_inkb.el.f1 - gm_direct.el.f1,
        (gm_prune.el.f1 - gm_direct.el.f1) / (gm_inkb.el.f1 - gm_direct.el.f1),
        (gm_thresh.el.f1 - gm_direct.el.f1) / (gm_inkb.el.f1 - gm_direct.el.f1),
    );
    println!("generative time: {:?}", t.elapsed());

    // ---- NED-NER ----
    let t = std::time::Instant::now();
    let ned = |view: KbView<'_>, corpus: &partial_el::Corpus| {
        let index = build_index(view);
        link_corpus(corpus, 4, |doc| {
            link_ned_ner(doc, &index, 100, 8, f64::NEG_INFINITY)
        })
        .unwrap()
    };
    let q_direct = ned(e2, &out.test);
    let qm_direct = report("ned_ner direct ", &q_direct, &gold_test);
    let q_dev = ned(e2, &out.dev);
    let qth = tune_threshold(&q_dev, gold_dev.annotations());
    println!("ned_ner theta = {:.6} dev_f1 {:.3}", qth.value, qth.dev_f1);
    let qm_thresh = report(
        "ned_ner thresh ",
        &apply_threshold(&q_direct, qth.value),
        &gold_test,
    );
    println!(
        "NED-NER: direct ner f1 {:.3}, thresholded ner f1 {:.3}",
        qm_direct.ner.f1, qm_thresh.ner.f1
    );
    println!("ned_ner time: {:?}", t.elapsed());
    println!("TOTAL: {:?}", start.elapsed());
}
