//! Subcommand implementations. Every step reads the shared config and works
//! off files in the output directory, so experiments compose: `train` then
//! `link` then `tune-threshold`/`prune` then `evaluate` reproduces what
//! `run` does in one shot.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use partial_el::corpus::{restrict_gold, Corpus};
use partial_el::embed::{build_index, ConceptIndex};
use partial_el::eval::{evaluate, proportion_report, recall_at_k, MetricsReport, ViewRun};
use partial_el::kb::{ConceptId, KbView, KnowledgeBase, PartialKb};
use partial_el::paradigms::{
    decode_document, link_corpus, link_ned_ner_with_retrieval, link_ner_ned, train_lm, BigramLm,
    GenerativeParams, Paradigm, PredictionsFile, ScoredPrediction,
};
use partial_el::redemption::{apply_threshold, post_prune, tune_threshold};
use partial_el::tagger::{build_gazetteer, Gazetteer};
use partial_el::trie::build_trie;
use partial_el::Split;

use crate::config::{Mode, RunConfig};
use crate::manifest::{sha256_file, Manifest};

/// Global flags shared by all subcommands.
#[derive(Debug, Clone, Copy)]
pub struct Ctx {
    pub jobs: usize,
    pub plot: bool,
    pub verbose: bool,
}

impl Ctx {
    fn log(&self, message: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", message.as_ref());
        }
    }
}

pub const GAZETTEER_FILE: &str = "gazetteer.json";
pub const LM_FILE: &str = "lm.json";
pub const PREDICTIONS_TEST: &str = "predictions-test.jsonl";
pub const PREDICTIONS_DEV: &str = "predictions-dev.jsonl";
pub const PREDICTIONS_FINAL: &str = "predictions-final.jsonl";
pub const RETRIEVED_TEST: &str = "retrieved-test.jsonl";
pub const THRESHOLD_FILE: &str = "threshold.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// metrics.json wrapper: the report plus run identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsFile {
    pub view: String,
    pub paradigm: Paradigm,
    pub mode: Mode,
    pub metrics: MetricsReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_at_k: Option<f64>,
}

fn view_of<'a>(kb: &'a KnowledgeBase, partial: Option<&'a PartialKb>) -> Result<KbView<'a>> {
    Ok(match partial {
        Some(p) => kb.view_of(p)?,
        None => kb.full_view(),
    })
}

/// Build the partial view named in the config, if any.
fn configured_partial(config: &RunConfig, kb: &KnowledgeBase, ctx: Ctx) -> Result<Option<PartialKb>> {
    config
        .partial
        .as_ref()
        .map(|spec| spec.build(kb, ctx.verbose))
        .transpose()
}

/// Generate the synthetic benchmark into the directory named by the synth
/// block.
pub fn cmd_synth(config: &RunConfig, ctx: Ctx) -> Result<()> {
    let block = config.synth.as_ref().context("config has no synth block")?;
    let output = partial_el::synth::generate(&block.config)?;
    output.write_to_dir(&block.dir)?;
    ctx.log(format!(
        "wrote synthetic benchmark to {}: {} concepts, {} partial views, {}/{}/{} docs",
        block.dir.display(),
        output.kb.len(),
        output.partials.len(),
        output.train.n_documents(),
        output.dev.n_documents(),
        output.test.n_documents(),
    ));
    Ok(())
}

/// Materialize the configured partial view as an id-per-line file.
pub fn cmd_kb_subset(config: &RunConfig, ctx: Ctx) -> Result<Vec<PathBuf>> {
    let kb = config.load_kb()?;
    let partial = configured_partial(config, &kb, ctx)?
        .context("kb-subset needs a partial block in the config")?;
    std::fs::create_dir_all(&config.output_dir)?;
    let path = config
        .output_dir
        .join(format!("{}.ids", sanitize(partial.name())));
    partial.save_ids(&path)?;
    ctx.log(format!(
        "view {:?}: {} of {} concepts -> {}",
        partial.name(),
        partial.len(),
        kb.len(),
        path.display()
    ));
    Ok(vec![path])
}

/// Materialize the complement of the configured partial view.
pub fn cmd_kb_complement(config: &RunConfig, ctx: Ctx) -> Result<Vec<PathBuf>> {
    let kb = config.load_kb()?;
    let partial = configured_partial(config, &kb, ctx)?
        .context("kb-complement needs a partial block in the config")?;
    let complement = partial_el::kb::complement(&kb, &partial)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let path = config
        .output_dir
        .join(format!("{}.ids", sanitize(complement.name())));
    complement.save_ids(&path)?;
    ctx.log(format!(
        "view {:?}: {} of {} concepts -> {}",
        complement.name(),
        complement.len(),
        kb.len(),
        path.display()
    ));
    Ok(vec![path])
}

fn sanitize(name: &str) -> String {
    name.replace('∁', "-complement")
        .replace(['/', '\\'], "_")
}

/// Train the detector and the language model. Under `in_kb_train` the
/// training gold is first restricted to the partial view.
pub fn cmd_train(config: &RunConfig, ctx: Ctx) -> Result<Vec<PathBuf>> {
    let kb = config.load_kb()?;
    let partial = configured_partial(config, &kb, ctx)?;
    let train = config.corpus(Split::Train)?;
    let train = match config.mode {
        Mode::InKbTrain => {
            let view = view_of(&kb, partial.as_ref())?;
            restrict_gold(&train, view)
        }
        _ => train,
    };
    let gazetteer = build_gazetteer(&train, &kb);
    let trained = train_lm(&train, &kb)?;
    if trained.skipped_docs > 0 {
        ctx.log(format!(
            "{} training documents had overlapping gold markup and were skipped",
            trained.skipped_docs
        ));
    }
    std::fs::create_dir_all(&config.output_dir)?;
    let gazetteer_path = config.output_dir.join(GAZETTEER_FILE);
    let lm_path = config.output_dir.join(LM_FILE);
    save_gazetteer(&gazetteer, &gazetteer_path)?;
    trained.lm.save(&lm_path)?;
    ctx.log(format!(
        "trained on {} annotations: {} dictionary entries, {} LM vocabulary",
        train.annotations().len(),
        gazetteer.len(),
        trained.lm.vocab_size(),
    ));
    Ok(vec![gazetteer_path, lm_path])
}

#[derive(Serialize, Deserialize)]
struct GazetteerFile {
    max_len: usize,
    entries: BTreeMap<String, Vec<String>>,
}

fn save_gazetteer(gazetteer: &Gazetteer, path: &Path) -> Result<()> {
    let entries = gazetteer
        .entries()
        .map(|(tokens, concepts)| {
            (
                tokens.join(" "),
                concepts.iter().map(|c| c.to_string()).collect(),
            )
        })
        .collect();
    let file = GazetteerFile {
        max_len: gazetteer.max_len(),
        entries,
    };
    std::fs::write(path, serde_json::to_string(&file)?)?;
    Ok(())
}

fn load_gazetteer(path: &Path) -> Result<Gazetteer> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {} (run `train` first)", path.display()))?;
    let file: GazetteerFile = serde_json::from_str(&text)?;
    let mut gazetteer = Gazetteer::default();
    for (tokens, concepts) in file.entries {
        let tokens: Vec<String> = tokens.split(' ').map(|t| t.to_string()).collect();
        for concept in concepts {
            gazetteer.insert_entry(tokens.clone(), &concept.parse::<ConceptId>()?);
        }
    }
    Ok(gazetteer)
}

/// Build the synonym index for a view, going through the cache directory
/// named by `PARTIAL_EL_CACHE_DIR` when it is set.
fn index_for(view: KbView<'_>, ctx: Ctx) -> ConceptIndex {
    let cache_dir = match std::env::var_os("PARTIAL_EL_CACHE_DIR") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => return build_index(view),
    };
    let key = format!(
        "{}-{:016x}-v1.idx",
        sanitize(view.name()),
        ConceptIndex::fingerprint(view)
    );
    let path = cache_dir.join(key);
    if path.is_file() {
        match ConceptIndex::read_cache(&path) {
            Ok(index) => {
                ctx.log(format!("index cache hit: {}", path.display()));
                return index;
            }
            Err(err) => ctx.log(format!("index cache unreadable ({err}); rebuilding")),
        }
    }
    let index = build_index(view);
    if std::fs::create_dir_all(&cache_dir).is_ok() {
        match index.write_cache(&path) {
            Ok(()) => ctx.log(format!("index cache write: {}", path.display())),
            Err(err) => ctx.log(format!("index cache write failed: {err}")),
        }
    }
    index
}

/// Per-run linking state: trained models, plus counters.
struct Linker<'a> {
    config: &'a RunConfig,
    ctx: Ctx,
    gazetteer: Option<Gazetteer>,
    lm: Option<BigramLm>,
    index: Option<ConceptIndex>,
    trie: Option<partial_el::trie::NameTrie>,
}

impl<'a> Linker<'a> {
    fn prepare(
        config: &'a RunConfig,
        ctx: Ctx,
        link_view: KbView<'_>,
        gazetteer: Option<Gazetteer>,
        lm: Option<BigramLm>,
    ) -> Result<Self> {
        let mut linker = Linker {
            config,
            ctx,
            gazetteer: None,
            lm: None,
            index: None,
            trie: None,
        };
        match config.paradigm.paradigm {
            Paradigm::NerNed => {
                linker.gazetteer = Some(gazetteer.context("NER-NED needs a trained gazetteer")?);
                linker.index = Some(index_for(link_view, ctx));
            }
            Paradigm::NedNer => {
                linker.index = Some(index_for(link_view, ctx));
            }
            Paradigm::Generative => {
                linker.lm = Some(lm.context("generative linking needs a trained LM")?);
                linker.trie = Some(build_trie(link_view, config.paradigm.canonical_only));
            }
        }
        Ok(linker)
    }

    /// Link one split. Returns predictions plus, for the NED-NER paradigm,
    /// the per-document retrieval lists, plus the count of documents decoded
    /// as plain copies (generative only).
    fn link(
        &self,
        corpus: &Corpus,
        theta: f64,
    ) -> Result<(
        Vec<ScoredPrediction>,
        Option<BTreeMap<String, Vec<ConceptId>>>,
        usize,
    )> {
        let jobs = self.ctx.jobs;
        let k = self.config.paradigm.k;
        let max_span_tokens = self.config.paradigm.max_span_tokens;
        match self.config.paradigm.paradigm {
            Paradigm::NerNed => {
                let gazetteer = self.gazetteer.as_ref().expect("prepared");
                let index = self.index.as_ref().expect("prepared");
                let predictions = link_corpus(corpus, jobs, |doc| {
                    let preds = link_ner_ned(doc, gazetteer, index)?;
                    Ok(apply_threshold(&preds, theta))
                })?;
                Ok((predictions, None, 0))
            }
            Paradigm::NedNer => {
                let index = self.index.as_ref().expect("prepared");
                let retrieved = Mutex::new(BTreeMap::new());
                let predictions = link_corpus(corpus, jobs, |doc| {
                    let (preds, ranked) =
                        link_ned_ner_with_retrieval(doc, index, k, max_span_tokens, theta)?;
                    retrieved
                        .lock()
                        .expect("retrieval map lock")
                        .insert(doc.doc_id.clone(), ranked);
                    Ok(preds)
                })?;
                Ok((predictions, Some(retrieved.into_inner().unwrap()), 0))
            }
            Paradigm::Generative => {
                let lm = self.lm.as_ref().expect("prepared");
                let trie = self.trie.as_ref().expect("prepared");
                let params = GenerativeParams {
                    beam: self.config.paradigm.beam,
                    max_span_tokens,
                };
                let plain_copies = AtomicUsize::new(0);
                let predictions = link_corpus(corpus, jobs, |doc| {
                    let decoded = decode_document(doc, lm, trie, params);
                    if decoded.plain_copy {
                        plain_copies.fetch_add(1, Ordering::Relaxed);
                    }
                    Ok(apply_threshold(&decoded.predictions, theta))
                })?;
                Ok((predictions, None, plain_copies.into_inner()))
            }
        }
    }
}

fn save_retrieved(map: &BTreeMap<String, Vec<ConceptId>>, path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Line<'a> {
        doc_id: &'a str,
        concepts: Vec<&'a str>,
    }
    let mut out = String::new();
    for (doc_id, concepts) in map {
        let line = Line {
            doc_id,
            concepts: concepts.iter().map(|c| c.as_str()).collect(),
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn load_retrieved(path: &Path) -> Result<BTreeMap<String, Vec<ConceptId>>> {
    #[derive(Deserialize)]
    struct Line {
        doc_id: String,
        concepts: Vec<String>,
    }
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(line)?;
        map.insert(
            parsed.doc_id,
            parsed
                .concepts
                .into_iter()
                .map(|c| c.parse::<ConceptId>())
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Ok(map)
}

/// The θ used at link time: thresholding links unfiltered (the tuner needs
/// every scored prediction); other modes apply the configured fixed cutoff.
fn link_theta(config: &RunConfig) -> f64 {
    match config.mode {
        Mode::Threshold => f64::NEG_INFINITY,
        _ => config.paradigm.theta.unwrap_or(f64::NEG_INFINITY),
    }
}

/// Link the test split (and the dev split under `threshold` mode) against
/// the inference view and write the prediction files.
pub fn cmd_link(config: &RunConfig, ctx: Ctx) -> Result<Vec<PathBuf>> {
    let kb = config.load_kb()?;
    let partial = configured_partial(config, &kb, ctx)?;
    if config.mode == Mode::PostPrune && partial.is_none() {
        bail!("post_prune mode needs a partial view to prune to");
    }
    let final_view = view_of(&kb, partial.as_ref())?;
    let link_view = match config.mode {
        Mode::PostPrune => kb.full_view(),
        _ => final_view,
    };
    let gazetteer = match config.paradigm.paradigm {
        Paradigm::NerNed => Some(load_gazetteer(&config.output_dir.join(GAZETTEER_FILE))?),
        _ => None,
    };
    let lm = match config.paradigm.paradigm {
        Paradigm::Generative => Some(
            BigramLm::load(config.output_dir.join(LM_FILE))
                .context("loading lm.json (run `train` first)")?,
        ),
        _ => None,
    };
    let linker = Linker::prepare(config, ctx, link_view, gazetteer, lm)?;
    let theta = link_theta(config);
    let mut written = Vec::new();

    let test = config.corpus(Split::Test)?;
    let (predictions, retrieved, plain_copies) = linker.link(&test, theta)?;
    ctx.log(format!(
        "linked test: {} predictions over {} documents{}",
        predictions.len(),
        test.n_documents(),
        if config.paradigm.paradigm == Paradigm::Generative {
            format!(" ({plain_copies} plain-copy documents)")
        } else {
            String::new()
        }
    ));
    std::fs::create_dir_all(&config.output_dir)?;
    let test_path = config.output_dir.join(PREDICTIONS_TEST);
    PredictionsFile {
        view: link_view.name().to_string(),
        paradigm: config.paradigm.paradigm,
        predictions: predictions.clone(),
    }
    .save(&test_path)?;
    written.push(test_path);
    if let Some(map) = &retrieved {
        let path = config.output_dir.join(RETRIEVED_TEST);
        save_retrieved(map, &path)?;
        written.push(path);
    }

    if config.mode == Mode::Threshold {
        let dev = config.corpus(Split::Dev)?;
        let (dev_predictions, _, _) = linker.link(&dev, theta)?;
        let dev_path = config.output_dir.join(PREDICTIONS_DEV);
        PredictionsFile {
            view: link_view.name().to_string(),
            paradigm: config.paradigm.paradigm,
            predictions: dev_predictions,
        }
        .save(&dev_path)?;
        written.push(dev_path);
    } else {
        // No redemption step follows in direct and in-KB-train modes; the
        // linked output is final.
        if config.mode != Mode::PostPrune {
            let final_path = config.output_dir.join(PREDICTIONS_FINAL);
            PredictionsFile {
                view: final_view.name().to_string(),
                paradigm: config.paradigm.paradigm,
                predictions,
            }
            .save(&final_path)?;
            written.push(final_path);
        }
    }
    Ok(written)
}

/// Tune θ on the dev predictions and apply it to the test predictions.
pub fn cmd_tune_threshold(config: &RunConfig, ctx: Ctx) -> Result<Vec<PathBuf>> {
    let kb = config.load_kb()?;
    let partial = configured_partial(config, &kb, ctx)?;
    let view = view_of(&kb, partial.as_ref())?;
    let dev_file = PredictionsFile::load(config.output_dir.join(PREDICTIONS_DEV))
        .context("loading dev predictions (run `link` in threshold mode first)")?;
    if dev_file.view != view.name() {
        bail!(
            "dev predictions were produced against view {:?}, config names {:?}",
            dev_file.view,
            view.name()
        );
    }
    let dev_gold = restrict_gold(&config.corpus(Split::Dev)?, view);
    let threshold = tune_threshold(&dev_file.predictions, dev_gold.annotations());
    ctx.log(format!(
        "tuned theta = {} with dev F1 {:.4}",
        threshold.value, threshold.dev_f1
    ));
    let threshold_path = config.output_dir.join(THRESHOLD_FILE);
    threshold.save(&threshold_path)?;

    let test_file = PredictionsFile::load(config.output_dir.join(PREDICTIONS_TEST))?;
    let kept = apply_threshold(&test_file.predictions, threshold.value);
    let final_path = config.output_dir.join(PREDICTIONS_FINAL);
    PredictionsFile {
        view: test_file.view,
        paradigm: test_file.paradigm,
        predictions: kept,
    }
    .save(&final_path)?;
    Ok(vec![threshold_path, final_path])
}

/// Prune full-KB test predictions down to the partial view. Refuses
/// prediction files that were not produced against the full training KB.
pub fn cmd_prune(config: &RunConfig, ctx: Ctx) -> Result<Vec<PathBuf>> {
    let kb = config.load_kb()?;
    let partial = configured_partial(config, &kb, ctx)?
        .context("prune needs a partial block in the config")?;
    let test_file = PredictionsFile::load(config.output_dir.join(PREDICTIONS_TEST))?;
    if test_file.view != kb.name() {
        bail!(
            "post-pruning needs predictions inferred with the full KB {:?}, \
             but {} records view {:?}",
            kb.name(),
            PREDICTIONS_TEST,
            test_file.view
        );
    }
    let kept = post_prune(&test_file.predictions, &partial);
    ctx.log(format!(
        "pruned {} -> {} predictions inside {:?}",
        test_file.predictions.len(),
        kept.len(),
        partial.name()
    ));
    let final_path = config.output_dir.join(PREDICTIONS_FINAL);
    PredictionsFile {
        view: partial.name().to_string(),
        paradigm: test_file.paradigm,
        predictions: kept,
    }
    .save(&final_path)?;
    Ok(vec![final_path])
}

/// Evaluate the final predictions against the view-restricted test gold.
pub fn cmd_evaluate(config: &RunConfig, ctx: Ctx) -> Result<Vec<PathBuf>> {
    let kb = config.load_kb()?;
    let partial = configured_partial(config, &kb, ctx)?;
    let view = view_of(&kb, partial.as_ref())?;
    let final_file = PredictionsFile::load(config.output_dir.join(PREDICTIONS_FINAL))
        .context("loading final predictions (run `link` and any redemption step first)")?;
    if final_file.view != view.name() {
        bail!(
            "predictions were produced against view {:?} but the config names {:?}; \
             refusing to evaluate against mismatched gold",
            final_file.view,
            view.name()
        );
    }
    let gold = restrict_gold(&config.corpus(Split::Test)?, view);
    let metrics = evaluate(&final_file.predictions, gold.annotations());
    let retrieved_path = config.output_dir.join(RETRIEVED_TEST);
    let r_at_k = if final_file.paradigm == Paradigm::NedNer && retrieved_path.is_file() {
        let retrieved = load_retrieved(&retrieved_path)?;
        Some(recall_at_k(&retrieved, gold.annotations(), config.paradigm.k))
    } else {
        None
    };
    let wrapper = MetricsFile {
        view: view.name().to_string(),
        paradigm: final_file.paradigm,
        mode: config.mode,
        metrics,
        r_at_k,
    };
    let path = config.output_dir.join(METRICS_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&wrapper)?)?;
    ctx.log(format!(
        "EL F1 {:.4}, NER F1 {:.4}, NED {:?}",
        wrapper.metrics.el.f1, wrapper.metrics.ner.f1, wrapper.metrics.ned_accuracy
    ));
    Ok(vec![path])
}

/// Build the annotation-proportion report from per-view metrics files.
pub fn cmd_report(config: &RunConfig, ctx: Ctx) -> Result<Vec<PathBuf>> {
    let block = config.report.as_ref().context("config has no report block")?;
    let kb = config.load_kb()?;
    let train = config.corpus(Split::Train)?;
    let total_train = train.annotations().len();
    if total_train == 0 {
        bail!("the training corpus has no annotations; proportions are undefined");
    }
    let baseline: MetricsFile = serde_json::from_str(
        &std::fs::read_to_string(&block.baseline_metrics)
            .with_context(|| format!("reading {}", block.baseline_metrics.display()))?,
    )?;
    let mut runs = Vec::new();
    for entry in &block.entries {
        let partial = entry.view.build(&kb, ctx.verbose)?;
        let in_view = train
            .annotations()
            .iter()
            .filter(|a| partial.contains(&a.concept))
            .count();
        let metrics: MetricsFile = serde_json::from_str(
            &std::fs::read_to_string(&entry.metrics)
                .with_context(|| format!("reading {}", entry.metrics.display()))?,
        )?;
        runs.push(ViewRun {
            view: partial.name().to_string(),
            annotation_proportion: in_view as f64 / total_train as f64,
            full: baseline.metrics.clone(),
            partial: metrics.metrics,
        });
    }
    let report = proportion_report(&runs)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let tsv_path = block
        .output
        .clone()
        .unwrap_or_else(|| config.output_dir.join("proportion-report.tsv"));
    std::fs::write(&tsv_path, report.to_tsv())?;
    let mut written = vec![tsv_path.clone()];
    if ctx.plot {
        let svg_path = tsv_path.with_extension("svg");
        std::fs::write(&svg_path, report.to_svg())?;
        written.push(svg_path);
    }
    ctx.log(format!("proportion report -> {}", tsv_path.display()));
    Ok(written)
}

/// Execute the full pipeline for the configured mode: train, link, the
/// mode's redemption step, evaluate, and write the run manifest. On failure
/// every file written by this run is removed.
pub fn cmd_run(config: &RunConfig, config_bytes: &[u8], ctx: Ctx) -> Result<Vec<PathBuf>> {
    let mut written: Vec<PathBuf> = Vec::new();
    let result = run_pipeline(config, config_bytes, ctx, &mut written);
    if result.is_err() {
        for path in &written {
            let _ = std::fs::remove_file(path);
        }
    }
    result?;
    Ok(written)
}

fn run_pipeline(
    config: &RunConfig,
    config_bytes: &[u8],
    ctx: Ctx,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    written.extend(cmd_train(config, ctx)?);
    written.extend(cmd_link(config, ctx)?);
    match config.mode {
        Mode::Threshold => written.extend(cmd_tune_threshold(config, ctx)?),
        Mode::PostPrune => written.extend(cmd_prune(config, ctx)?),
        Mode::Direct | Mode::InKbTrain => {}
    }
    written.extend(cmd_evaluate(config, ctx)?);

    let kb = config.load_kb()?;
    let partial = configured_partial(config, &kb, ctx)?;
    let final_view = view_of(&kb, partial.as_ref())?;
    let link_view_name = match config.mode {
        Mode::PostPrune => kb.name().to_string(),
        _ => final_view.name().to_string(),
    };
    let mut outputs = BTreeMap::new();
    for path in written.iter() {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        outputs.insert(name, sha256_file(path)?);
    }
    let manifest = Manifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: crate::manifest::sha256_bytes(config_bytes),
        kb_view: final_view.name().to_string(),
        link_view: link_view_name,
        mode: config.mode,
        paradigm: config.paradigm.paradigm,
        seed: config.seed,
        outputs,
    };
    let manifest_path = config.output_dir.join(MANIFEST_FILE);
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    written.push(manifest_path);
    Ok(())
}
