//! Run configuration: one JSON file drives every subcommand.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use partial_el::kb::{ConceptId, KnowledgeBase, PartialKb, Selector};
use partial_el::paradigms::ParadigmConfig;
use partial_el::synth::SynthConfig;

/// Inference setting, mirroring the experiment matrix: naive partial-KB
/// inference, the two redemptions, and retraining on the restricted gold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Direct,
    Threshold,
    PostPrune,
    InKbTrain,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Direct => "direct",
            Mode::Threshold => "threshold",
            Mode::PostPrune => "post_prune",
            Mode::InKbTrain => "in_kb_train",
        })
    }
}

/// A named partial view plus how to select its members. Exactly one of
/// `ids`, `selector_file`, `semantic_type` must be given; `complement`
/// swaps the selection for its complement in the parent KB.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selector_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semantic_type: Option<String>,
    #[serde(default)]
    pub complement: bool,
}

impl PartialSpec {
    pub fn build(&self, kb: &KnowledgeBase, verbose: bool) -> Result<PartialKb> {
        let selector = match (&self.ids, &self.selector_file, &self.semantic_type) {
            (Some(ids), None, None) => Selector::Ids(
                ids.iter()
                    .map(|id| id.parse::<ConceptId>())
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            (None, Some(path), None) => Selector::from_file(path)
                .with_context(|| format!("reading selector file {}", path.display()))?,
            (None, None, Some(code)) => Selector::SemanticType(code.clone()),
            _ => bail!(
                "partial view {:?} must set exactly one of ids, selector_file, semantic_type",
                self.name
            ),
        };
        let outcome = partial_el::kb::subset(kb, &self.name, &selector)?;
        if verbose && outcome.dropped > 0 {
            eprintln!(
                "partial view {:?}: {} selector entries matched nothing and were dropped",
                self.name, outcome.dropped
            );
        }
        let partial = if self.complement {
            partial_el::kb::complement(kb, &outcome.partial)?
        } else {
            outcome.partial
        };
        if !partial.is_proper_subset_of(kb) && verbose {
            eprintln!(
                "partial view {:?} equals the full KB (not a proper subset)",
                partial.name()
            );
        }
        Ok(partial)
    }
}

/// Synth block: generator settings plus the dataset directory to write.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthBlock {
    pub dir: PathBuf,
    pub config: SynthConfig,
}

/// One row of the report block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportEntry {
    pub view: PartialSpec,
    /// metrics.json of the partial-view run.
    pub metrics: PathBuf,
}

/// Report block: a baseline full-KB metrics file plus per-view runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportBlock {
    pub baseline_metrics: PathBuf,
    pub entries: Vec<ReportEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// The configuration file. Paths are resolved relative to the process
/// working directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kb: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kb_name: Option<String>,
    /// Inference view; omitted means the full training KB.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial: Option<PartialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub paradigm: ParadigmConfig,
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportBlock>,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<(RunConfig, Vec<u8>)> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok((config, bytes))
    }

    pub fn load_kb(&self) -> Result<KnowledgeBase> {
        let kb = match &self.kb_name {
            Some(name) => partial_el::kb::load_kb_named(&self.kb, name)?,
            None => partial_el::kb::load_kb(&self.kb)?,
        };
        Ok(kb)
    }

    pub fn corpus(&self, split: partial_el::Split) -> Result<partial_el::Corpus> {
        let path = match split {
            partial_el::Split::Train => self.train.as_ref().context("config has no train path")?,
            partial_el::Split::Dev => self.dev.as_ref().context("config has no dev path")?,
            partial_el::Split::Test => self.test.as_ref().context("config has no test path")?,
        };
        Ok(partial_el::corpus::load_corpus(path, split)?)
    }
}
