//! Deterministic text embeddings and exact nearest-neighbor search.
//!
//! Texts are embedded as L2-normalized bags of character trigrams hashed
//! into a fixed bucket space (FNV-1a 64 modulo 2^18). With unit vectors,
//! maximum inner product search is exactly maximum cosine similarity, and
//! the search here is brute force, so results are exact by construction.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::kb::{ConceptId, KbView};

/// Embedding dimensionality (hash bucket count).
pub const DIMENSION: u32 = 1 << 18;
/// Character n-gram order.
pub const NGRAM: usize = 3;
/// Boundary marker padded around the lowercased text before extracting
/// trigrams.
pub const BOUNDARY: char = '#';

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("concept index over {0:?} is empty")]
    EmptyIndex(String),
    #[error("index cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Sparse unit vector over trigram hash buckets. The empty text embeds to
/// the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    // (bucket, weight), sorted by bucket.
    entries: Vec<(u32, f64)>,
}

impl EmbeddingVector {
    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of occupied buckets.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }
}

/// Embed a text: lowercase, pad with [`BOUNDARY`] on both ends, hash every
/// character trigram, accumulate counts, L2-normalize.
pub fn embed_text(text: &str) -> EmbeddingVector {
    if text.is_empty() {
        return EmbeddingVector { entries: vec![] };
    }
    let mut chars: Vec<char> = Vec::with_capacity(text.len() + 2);
    chars.push(BOUNDARY);
    for ch in text.chars() {
        chars.extend(ch.to_lowercase());
    }
    chars.push(BOUNDARY);

    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    let mut buf = String::new();
    for window in chars.windows(NGRAM) {
        buf.clear();
        buf.extend(window.iter());
        let bucket = (fnv1a64(buf.as_bytes()) % DIMENSION as u64) as u32;
        *counts.entry(bucket).or_insert(0.0) += 1.0;
    }
    let norm = counts.values().map(|w| w * w).sum::<f64>().sqrt();
    let entries = counts
        .into_iter()
        .map(|(bucket, w)| (bucket, w / norm))
        .collect();
    EmbeddingVector { entries }
}

/// Cosine similarity of two embeddings. Both are unit vectors, so this is
/// their dot product; the zero vector scores 0 against anything.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    let mut dot = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.entries.len() && j < b.entries.len() {
        match a.entries[i].0.cmp(&b.entries[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a.entries[i].1 * b.entries[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot
}

/// One synonym entry of the index.
#[derive(Debug, Clone)]
pub struct IndexEntry {
    pub concept: ConceptId,
    pub synonym: String,
    pub vector: EmbeddingVector,
}

/// Dense-vector synonym index over a KB view: one entry per
/// (concept, distinct synonym).
#[derive(Debug, Clone)]
pub struct ConceptIndex {
    view_name: String,
    entries: Vec<IndexEntry>,
}

impl ConceptIndex {
    pub fn view_name(&self) -> &str {
        &self.view_name
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Embed every synonym of every member concept of the view.
pub fn build_index(view: KbView<'_>) -> ConceptIndex {
    let mut entries = Vec::new();
    for concept in view.concepts() {
        for synonym in &concept.synonyms {
            entries.push(IndexEntry {
                concept: concept.id.clone(),
                synonym: synonym.clone(),
                vector: embed_text(synonym),
            });
        }
    }
    ConceptIndex {
        view_name: view.name().to_string(),
        entries,
    }
}

/// Exact top-k search. A concept's score is the maximum cosine over its
/// synonym entries; concepts are ranked by (score desc, id asc) and
/// deduplicated, returning at most `k` results.
pub fn nearest(
    index: &ConceptIndex,
    query: &EmbeddingVector,
    k: usize,
) -> Result<Vec<(ConceptId, f64)>, EmbedError> {
    if index.entries.is_empty() {
        return Err(EmbedError::EmptyIndex(index.view_name.clone()));
    }
    let mut best: BTreeMap<&ConceptId, f64> = BTreeMap::new();
    for entry in &index.entries {
        let score = cosine(query, &entry.vector);
        let slot = best.entry(&entry.concept).or_insert(f64::NEG_INFINITY);
        if score > *slot {
            *slot = score;
        }
    }
    let mut ranked: Vec<(ConceptId, f64)> =
        best.into_iter().map(|(id, s)| (id.clone(), s)).collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.truncate(k);
    Ok(ranked)
}

// ---------------------------------------------------------------------------
// Binary index cache (version 1)
//
// Layout, little-endian:
//   magic  b"PELX"
//   u32    version
//   u32    dimension, u32 ngram
//   str    view name          (str = u32 length + utf-8 bytes)
//   u64    entry count
//   entry* { str concept; str synonym; u64 nnz; (u32 bucket, f64 weight)* }

const CACHE_MAGIC: &[u8; 4] = b"PELX";
const CACHE_VERSION: u32 = 1;

fn write_str(out: &mut impl Write, s: &str) -> std::io::Result<()> {
    out.write_all(&(s.len() as u32).to_le_bytes())?;
    out.write_all(s.as_bytes())
}

fn read_exact_vec(input: &mut impl Read, len: usize) -> std::io::Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32(input: &mut impl Read) -> std::io::Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(input: &mut impl Read) -> std::io::Result<u64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_str(input: &mut impl Read) -> Result<String, EmbedError> {
    let len = read_u32(input)? as usize;
    let bytes = read_exact_vec(input, len)?;
    String::from_utf8(bytes).map_err(|e| EmbedError::Cache(e.to_string()))
}

impl ConceptIndex {
    /// Fingerprint of the indexed content, used in cache file names so a
    /// changed KB never reads a stale cache.
    pub fn fingerprint(view: KbView<'_>) -> u64 {
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
            hash ^= 0xff;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        };
        feed(view.name().as_bytes());
        for concept in view.concepts() {
            feed(concept.id.as_str().as_bytes());
            for synonym in &concept.synonyms {
                feed(synonym.as_bytes());
            }
        }
        hash
    }

    pub fn write_cache(&self, path: impl AsRef<Path>) -> Result<(), EmbedError> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(CACHE_MAGIC)?;
        out.write_all(&CACHE_VERSION.to_le_bytes())?;
        out.write_all(&DIMENSION.to_le_bytes())?;
        out.write_all(&(NGRAM as u32).to_le_bytes())?;
        write_str(&mut out, &self.view_name)?;
        out.write_all(&(self.entries.len() as u64).to_le_bytes())?;
        for entry in &self.entries {
            write_str(&mut out, entry.concept.as_str())?;
            write_str(&mut out, &entry.synonym)?;
            out.write_all(&(entry.vector.entries.len() as u64).to_le_bytes())?;
            for (bucket, weight) in &entry.vector.entries {
                out.write_all(&bucket.to_le_bytes())?;
                out.write_all(&weight.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_cache(path: impl AsRef<Path>) -> Result<ConceptIndex, EmbedError> {
        let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
        let magic = read_exact_vec(&mut input, 4)?;
        if magic != CACHE_MAGIC {
            return Err(EmbedError::Cache("bad magic".into()));
        }
        let version = read_u32(&mut input)?;
        if version != CACHE_VERSION {
            return Err(EmbedError::Cache(format!("unsupported version {version}")));
        }
        let dimension = read_u32(&mut input)?;
        let ngram = read_u32(&mut input)? as usize;
        if dimension != DIMENSION || ngram != NGRAM {
            return Err(EmbedError::Cache("hash parameters differ".into()));
        }
        let view_name = read_str(&mut input)?;
        let count = read_u64(&mut input)? as usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let concept = ConceptId::new(read_str(&mut input)?)
                .map_err(|e| EmbedError::Cache(e.to_string()))?;
            let synonym = read_str(&mut input)?;
            let nnz = read_u64(&mut input)? as usize;
            let mut vec_entries = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                let bucket = read_u32(&mut input)?;
                let mut wbuf = [0u8; 8];
                input.read_exact(&mut wbuf)?;
                vec_entries.push((bucket, f64::from_le_bytes(wbuf)));
            }
            entries.push(IndexEntry {
                concept,
                synonym,
                vector: EmbeddingVector {
                    entries: vec_entries,
                },
            });
        }
        Ok(ConceptIndex { view_name, entries })
    }
}
