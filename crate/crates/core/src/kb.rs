//! Knowledge bases and partial views.
//!
//! A [`KnowledgeBase`] is the training inventory `E1`. A [`PartialKb`] names a
//! subset of its concept ids (`E2`) without copying any concept records, so a
//! single training KB backs any number of partial views. [`KbView`] is the
//! read-side abstraction the rest of the crate consumes: either the full KB or
//! one of its partial views.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Errors raised while loading or deriving knowledge bases.
#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate concept id {0:?}")]
    DuplicateId(String),
    #[error("concept id must be a non-empty string")]
    EmptyId,
    #[error("concept {0:?} has an empty canonical name")]
    EmptyName(String),
    #[error("concept {0:?} has an empty synonym")]
    EmptySynonym(String),
    #[error("knowledge base {0:?} contains no concepts")]
    EmptyKb(String),
    #[error("selector matched no concepts in {0:?}")]
    EmptySelection(String),
    #[error("complement of {0:?} within {1:?} is empty")]
    EmptyComplement(String, String),
    #[error("partial kb {partial:?} belongs to {expected:?}, not {actual:?}")]
    ParentMismatch {
        partial: String,
        expected: String,
        actual: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Identifier of a concept, e.g. `"D007022"`. Ordering is lexicographic on
/// the raw bytes and is used for deterministic tie-breaks throughout.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(String);

impl ConceptId {
    pub fn new(value: impl Into<String>) -> Result<Self, KbError> {
        let value = value.into();
        if value.is_empty() {
            return Err(KbError::EmptyId);
        }
        Ok(ConceptId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ConceptId {
    type Err = KbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConceptId::new(s)
    }
}

/// One KB entry: id, canonical name, synonyms, semantic types.
///
/// The canonical name is always the first synonym. Synonyms are deduplicated
/// after simple Unicode lowercasing, keeping the first spelling seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub id: ConceptId,
    pub canonical_name: String,
    pub synonyms: Vec<String>,
    pub semantic_types: BTreeSet<String>,
}

impl Concept {
    pub fn new(
        id: ConceptId,
        canonical_name: impl Into<String>,
        synonyms: impl IntoIterator<Item = String>,
        semantic_types: impl IntoIterator<Item = String>,
    ) -> Result<Self, KbError> {
        let canonical_name = canonical_name.into();
        if canonical_name.is_empty() {
            return Err(KbError::EmptyName(id.to_string()));
        }
        let mut seen = BTreeSet::new();
        let mut deduped = Vec::new();
        for synonym in std::iter::once(canonical_name.clone()).chain(synonyms) {
            if synonym.is_empty() {
                return Err(KbError::EmptySynonym(id.to_string()));
            }
            if seen.insert(synonym.to_lowercase()) {
                deduped.push(synonym);
            }
        }
        Ok(Concept {
            id,
            canonical_name,
            synonyms: deduped,
            semantic_types: semantic_types.into_iter().collect(),
        })
    }
}

/// A validated training knowledge base (`E1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    name: String,
    concepts: BTreeMap<ConceptId, Concept>,
}

impl KnowledgeBase {
    pub fn new(
        name: impl Into<String>,
        concepts: impl IntoIterator<Item = Concept>,
    ) -> Result<Self, KbError> {
        let name = name.into();
        let mut map = BTreeMap::new();
        for concept in concepts {
            let id = concept.id.clone();
            if map.insert(id.clone(), concept).is_some() {
                return Err(KbError::DuplicateId(id.to_string()));
            }
        }
        if map.is_empty() {
            return Err(KbError::EmptyKb(name));
        }
        Ok(KnowledgeBase {
            name,
            concepts: map,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn get(&self, id: &ConceptId) -> Option<&Concept> {
        self.concepts.get(id)
    }

    pub fn contains(&self, id: &ConceptId) -> bool {
        self.concepts.contains_key(id)
    }

    /// Concepts in id order.
    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &ConceptId> {
        self.concepts.keys()
    }

    /// View over the whole KB.
    pub fn full_view(&self) -> KbView<'_> {
        KbView {
            kb: self,
            partial: None,
        }
    }

    /// View over one of this KB's partial views. Fails if the partial names a
    /// different parent.
    pub fn view_of<'a>(&'a self, partial: &'a PartialKb) -> Result<KbView<'a>, KbError> {
        if partial.parent != self.name {
            return Err(KbError::ParentMismatch {
                partial: partial.name.clone(),
                expected: partial.parent.clone(),
                actual: self.name.clone(),
            });
        }
        Ok(KbView {
            kb: self,
            partial: Some(partial),
        })
    }
}

/// A named subset of a parent KB, stored as ids only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialKb {
    name: String,
    parent: String,
    member_ids: BTreeSet<ConceptId>,
}

impl PartialKb {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parent(&self) -> &str {
        &self.parent
    }

    pub fn len(&self) -> usize {
        self.member_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_ids.is_empty()
    }

    pub fn contains(&self, id: &ConceptId) -> bool {
        self.member_ids.contains(id)
    }

    pub fn member_ids(&self) -> impl Iterator<Item = &ConceptId> {
        self.member_ids.iter()
    }

    /// Whether the view is a proper subset of its parent. Views equal to the
    /// parent are valid objects but do not exercise the partial scenario.
    pub fn is_proper_subset_of(&self, kb: &KnowledgeBase) -> bool {
        self.parent == kb.name() && self.member_ids.len() < kb.len()
    }

    /// Write the member ids, one per line, in id order.
    pub fn save_ids(&self, path: impl AsRef<Path>) -> Result<(), KbError> {
        let mut out = std::io::BufWriter::new(File::create(path)?);
        for id in &self.member_ids {
            writeln!(out, "{id}")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Read side of either a full KB or a partial view.
#[derive(Debug, Clone, Copy)]
pub struct KbView<'a> {
    kb: &'a KnowledgeBase,
    partial: Option<&'a PartialKb>,
}

impl<'a> KbView<'a> {
    /// Name of the view: the partial's name, or the KB name for a full view.
    pub fn name(&self) -> &str {
        match self.partial {
            Some(p) => p.name(),
            None => self.kb.name(),
        }
    }

    pub fn parent_kb(&self) -> &'a KnowledgeBase {
        self.kb
    }

    pub fn contains(&self, id: &ConceptId) -> bool {
        match self.partial {
            Some(p) => p.contains(id),
            None => self.kb.contains(id),
        }
    }

    pub fn len(&self) -> usize {
        match self.partial {
            Some(p) => p.len(),
            None => self.kb.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Member concepts in id order.
    pub fn concepts(&self) -> impl Iterator<Item = &'a Concept> + '_ {
        self.kb
            .concepts()
            .filter(move |c| self.partial.map_or(true, |p| p.contains(&c.id)))
    }

    pub fn get(&self, id: &ConceptId) -> Option<&'a Concept> {
        if self.contains(id) {
            self.kb.get(id)
        } else {
            None
        }
    }
}

/// How a partial KB picks its members.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    /// Explicit concept ids; ids absent from the KB are dropped and counted.
    Ids(Vec<ConceptId>),
    /// Concepts whose semantic type set contains the code.
    SemanticType(String),
    /// Free-form entries from a selector file: each entry matches a concept
    /// by exact id or by case-folded synonym. Unmatched entries are dropped
    /// and counted.
    Entries(Vec<String>),
}

impl Selector {
    /// Parse a selector file: one id or name per line, `#` starts a comment,
    /// blank lines ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, KbError> {
        let reader = BufReader::new(File::open(path)?);
        let mut entries = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let entry = match line.find('#') {
                Some(pos) => &line[..pos],
                None => &line[..],
            }
            .trim();
            if !entry.is_empty() {
                entries.push(entry.to_string());
            }
        }
        Ok(Selector::Entries(entries))
    }
}

/// Result of [`subset`]: the view plus how many selector entries matched
/// nothing in the parent KB.
#[derive(Debug, Clone)]
pub struct SubsetOutcome {
    pub partial: PartialKb,
    pub dropped: usize,
}

/// Build a partial view of `kb` from a selector. Selector entries absent from
/// the KB are silently dropped; the count is reported in the outcome.
pub fn subset(kb: &KnowledgeBase, name: &str, selector: &Selector) -> Result<SubsetOutcome, KbError> {
    let mut members = BTreeSet::new();
    let mut dropped = 0usize;
    match selector {
        Selector::Ids(ids) => {
            for id in ids {
                if kb.contains(id) {
                    members.insert(id.clone());
                } else {
                    dropped += 1;
                }
            }
        }
        Selector::SemanticType(code) => {
            for concept in kb.concepts() {
                if concept.semantic_types.contains(code) {
                    members.insert(concept.id.clone());
                }
            }
        }
        Selector::Entries(entries) => {
            // Name lookup is case-folded; build it once.
            let mut by_name: BTreeMap<String, Vec<&ConceptId>> = BTreeMap::new();
            for concept in kb.concepts() {
                for synonym in &concept.synonyms {
                    by_name
                        .entry(synonym.to_lowercase())
                        .or_default()
                        .push(&concept.id);
                }
            }
            for entry in entries {
                let as_id = ConceptId::new(entry.clone())?;
                if kb.contains(&as_id) {
                    members.insert(as_id);
                } else if let Some(ids) = by_name.get(&entry.to_lowercase()) {
                    members.extend(ids.iter().map(|id| (*id).clone()));
                } else {
                    dropped += 1;
                }
            }
        }
    }
    if members.is_empty() {
        return Err(KbError::EmptySelection(kb.name().to_string()));
    }
    Ok(SubsetOutcome {
        partial: PartialKb {
            name: name.to_string(),
            parent: kb.name().to_string(),
            member_ids: members,
        },
        dropped,
    })
}

/// Complement view `kb − partial`, named `{partial}∁`.
pub fn complement(kb: &KnowledgeBase, partial: &PartialKb) -> Result<PartialKb, KbError> {
    if partial.parent != kb.name() {
        return Err(KbError::ParentMismatch {
            partial: partial.name.clone(),
            expected: partial.parent.clone(),
            actual: kb.name().to_string(),
        });
    }
    let member_ids: BTreeSet<ConceptId> = kb
        .ids()
        .filter(|id| !partial.contains(id))
        .cloned()
        .collect();
    if member_ids.is_empty() {
        return Err(KbError::EmptyComplement(
            partial.name.clone(),
            kb.name().to_string(),
        ));
    }
    Ok(PartialKb {
        name: format!("{}∁", partial.name),
        parent: partial.parent.clone(),
        member_ids,
    })
}

#[derive(Deserialize)]
struct ConceptLine {
    id: String,
    name: String,
    #[serde(default)]
    synonyms: Vec<String>,
    #[serde(default)]
    types: Vec<String>,
}

#[derive(Serialize)]
struct ConceptLineOut<'a> {
    id: &'a str,
    name: &'a str,
    synonyms: &'a [String],
    types: Vec<&'a str>,
}

/// Load a KB from JSONL, one concept per line:
/// `{"id": str, "name": str, "synonyms": [str], "types": [str]}`.
///
/// The KB is named after the file stem. The canonical name is injected into
/// the synonym list when absent.
pub fn load_kb(path: impl AsRef<Path>) -> Result<KnowledgeBase, KbError> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "kb".to_string());
    load_kb_named(path, &name)
}

/// Same as [`load_kb`] with an explicit KB name.
pub fn load_kb_named(path: impl AsRef<Path>, name: &str) -> Result<KnowledgeBase, KbError> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut concepts = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ConceptLine =
            serde_json::from_str(&line).map_err(|e| KbError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        let id = ConceptId::new(parsed.id).map_err(|e| KbError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        let concept = Concept::new(id, parsed.name, parsed.synonyms, parsed.types).map_err(
            |e| KbError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            },
        )?;
        concepts.push(concept);
    }
    if concepts.is_empty() {
        return Err(KbError::EmptyKb(name.to_string()));
    }
    KnowledgeBase::new(name, concepts)
}

/// Write a KB in the JSONL format read by [`load_kb`], concepts in id order.
pub fn save_kb(kb: &KnowledgeBase, path: impl AsRef<Path>) -> Result<(), KbError> {
    let mut out = std::io::BufWriter::new(File::create(path)?);
    for concept in kb.concepts() {
        let line = ConceptLineOut {
            id: concept.id.as_str(),
            name: &concept.canonical_name,
            synonyms: &concept.synonyms,
            types: concept.semantic_types.iter().map(|s| s.as_str()).collect(),
        };
        // Struct serialization to a string cannot fail.
        writeln!(out, "{}", serde_json::to_string(&line).unwrap())?;
    }
    out.flush()?;
    Ok(())
}
