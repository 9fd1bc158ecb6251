//! Run manifests: enough identity to prove two runs produced the same bytes.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use partial_el::paradigms::Paradigm;

use crate::config::Mode;

/// Written at the end of a successful `run`. Contains no timestamps or
/// host-specific data, so reruns with identical config and inputs produce
/// identical manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub config_sha256: String,
    /// View the final predictions and the evaluation gold refer to.
    pub kb_view: String,
    /// View used at link time (the full KB under post-pruning).
    pub link_view: String,
    pub mode: Mode,
    pub paradigm: Paradigm,
    pub seed: u64,
    /// sha256 of every file the run wrote, by file name.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    Ok(sha256_bytes(&std::fs::read(path)?))
}
