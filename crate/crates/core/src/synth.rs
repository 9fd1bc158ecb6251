//! Seeded synthetic KB and corpus generator.
//!
//! Everything is drawn from the pinned [`crate::rng::Rng`] stream, so equal
//! configurations generate byte-identical datasets on any platform.
//!
//! Concept names are pronounceable consonant-vowel strings of 2–3 tokens;
//! synonyms are edit-distance-1 variants of the canonical name. Documents
//! interleave filler tokens (drawn from a fixed-size filler vocabulary) with
//! mention surfaces, each surface a uniformly chosen synonym corrupted per
//! character with the configured noise probability. Gold spans are the exact
//! generated surface extents, so they always align with token boundaries.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, GoldAnnotation, Span, Split};
use crate::kb::{complement, subset, Concept, ConceptId, KnowledgeBase, PartialKb, Selector};
use crate::rng::Rng;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Kb(#[from] crate::kb::KbError),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Filler text is built from a fixed pool of phrases with mutually disjoint
/// token sets. Whole phrases keep filler-to-filler transitions learnable by
/// an order-1 model, which is what lets trained linkers tell connective text
/// from mention surfaces.
const FILLER_PHRASES: usize = 8;
/// Tokens per filler phrase, inclusive.
const PHRASE_TOKENS: (usize, usize) = (3, 5);

/// Generator configuration; see the field docs for the constraints checked
/// by [`SynthConfig::validate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    /// Concepts in the generated KB; at least 2.
    pub n_concepts: usize,
    /// Inclusive range of synonyms per concept, canonical name excluded.
    pub synonyms_per_concept: (usize, usize),
    /// Semantic types, assigned to concepts in contiguous blocks.
    pub n_types: usize,
    /// Documents in (train, dev, test).
    pub docs_per_split: (usize, usize, usize),
    /// Inclusive range of mentions per document.
    pub mentions_per_doc: (usize, usize),
    /// Inclusive range of filler tokens before each mention and after the
    /// last one.
    pub filler_tokens_between: (usize, usize),
    /// Per-character corruption probability of mention surfaces.
    pub surface_noise_prob: f64,
    /// Fraction of concept ids sampled into the "sampled" partial view.
    pub partial_fraction: f64,
    /// Zipf exponent for concept usage; 0 is uniform.
    pub zipf_exponent: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            n_concepts: 100,
            synonyms_per_concept: (1, 3),
            n_types: 4,
            docs_per_split: (60, 20, 30),
            mentions_per_doc: (2, 5),
            filler_tokens_between: (2, 5),
            surface_noise_prob: 0.0,
            partial_fraction: 0.5,
            zipf_exponent: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let err = |msg: &str| Err(SynthError::InvalidConfig(msg.to_string()));
        if self.n_concepts < 2 {
            return err("n_concepts must be at least 2");
        }
        if self.n_types < 1 || self.n_types > self.n_concepts {
            return err("n_types must be in 1..=n_concepts");
        }
        let ranges = [
            ("synonyms_per_concept", self.synonyms_per_concept),
            ("mentions_per_doc", self.mentions_per_doc),
            ("filler_tokens_between", self.filler_tokens_between),
        ];
        for (name, (lo, hi)) in ranges {
            if lo < 1 || lo > hi {
                return Err(SynthError::InvalidConfig(format!(
                    "{name} must be an inclusive range with 1 <= lo <= hi"
                )));
            }
        }
        let (train, dev, test) = self.docs_per_split;
        if train < 1 || dev < 1 || test < 1 {
            return err("docs_per_split entries must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.surface_noise_prob) {
            return err("surface_noise_prob must be in [0, 1]");
        }
        if !(self.partial_fraction > 0.0 && self.partial_fraction < 1.0) {
            return err("partial_fraction must be in (0, 1)");
        }
        if self.zipf_exponent < 0.0 {
            return err("zipf_exponent must be non-negative");
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path)?;
        let config: SynthConfig = serde_json::from_str(&text)
            .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

/// A generated benchmark: the training KB, its partial views (the sampled
/// view, one per semantic type, and all their complements), and the three
/// corpus splits.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub kb: KnowledgeBase,
    pub partials: Vec<PartialKb>,
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
}

const CONSONANTS: &[u8] = b"bcdfghjklmnpqrstvwz";
const VOWELS: &[u8] = b"aeiou";

fn syllable(rng: &mut Rng) -> [char; 2] {
    [
        *rng.choose(CONSONANTS) as char,
        *rng.choose(VOWELS) as char,
    ]
}

fn pronounceable_token(rng: &mut Rng) -> String {
    let syllables = rng.range(2, 4);
    let mut token = String::with_capacity(syllables * 2);
    for _ in 0..syllables {
        let [c, v] = syllable(rng);
        token.push(c);
        token.push(v);
    }
    token
}

fn pronounceable_name(rng: &mut Rng) -> String {
    let tokens = rng.range(2, 3);
    (0..tokens)
        .map(|_| pronounceable_token(rng))
        .collect::<Vec<_>>()
        .join(" ")
}

/// One random letter edit (substitute, insert, or delete) applied to a
/// letter position; spaces are never touched, so token counts are stable.
fn edit_distance_one(rng: &mut Rng, name: &str) -> String {
    let chars: Vec<char> = name.chars().collect();
    let letter_positions: Vec<usize> = chars
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_ascii_lowercase())
        .map(|(i, _)| i)
        .collect();
    let pos = *rng.choose(&letter_positions);
    let mut out = chars.clone();
    match rng.below(3) {
        0 => {
            // substitute with a different letter
            let mut replacement = (b'a' + rng.below(26) as u8) as char;
            while replacement == chars[pos] {
                replacement = (b'a' + rng.below(26) as u8) as char;
            }
            out[pos] = replacement;
        }
        1 => {
            out.insert(pos, (b'a' + rng.below(26) as u8) as char);
        }
        _ => {
            // delete, unless it would empty a token
            let lone = (pos == 0 || chars[pos - 1] == ' ')
                && (pos + 1 == chars.len() || chars[pos + 1] == ' ');
            if lone {
                out.insert(pos, (b'a' + rng.below(26) as u8) as char);
            } else {
                out.remove(pos);
            }
        }
    }
    out.into_iter().collect()
}

fn corrupt_surface(rng: &mut Rng, surface: &str, p: f64) -> String {
    surface
        .chars()
        .map(|c| {
            if c.is_ascii_lowercase() && rng.chance(p) {
                (b'a' + rng.below(26) as u8) as char
            } else {
                c
            }
        })
        .collect()
}

/// Cumulative Zipf weights over ranks `0..n`: weight of rank `i` is
/// `1 / (i + 1)^s`.
fn zipf_cumulative(n: usize, s: f64) -> Vec<f64> {
    let mut cumulative = Vec::with_capacity(n);
    let mut total = 0.0;
    for i in 0..n {
        total += 1.0 / ((i + 1) as f64).powf(s);
        cumulative.push(total);
    }
    cumulative
}

fn sample_rank(rng: &mut Rng, cumulative: &[f64]) -> usize {
    let total = *cumulative.last().expect("non-empty weights");
    let draw = rng.f64() * total;
    cumulative.partition_point(|&c| c <= draw).min(cumulative.len() - 1)
}

/// Generate the benchmark. Deterministic in the config.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    config.validate()?;
    let mut rng = Rng::new(config.seed);

    // Concepts: ids in rank order (C000000 is the most frequent under Zipf),
    // globally distinct canonical names, edit-1 synonym variants.
    let mut used_names: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    let mut concepts = Vec::with_capacity(config.n_concepts);
    for i in 0..config.n_concepts {
        let canonical = loop {
            let candidate = pronounceable_name(&mut rng);
            if used_names.insert(candidate.clone()) {
                break candidate;
            }
        };
        let n_synonyms = rng.range(config.synonyms_per_concept.0, config.synonyms_per_concept.1);
        let mut synonyms = Vec::with_capacity(n_synonyms);
        for _ in 0..n_synonyms {
            synonyms.push(edit_distance_one(&mut rng, &canonical));
        }
        let type_code = format!("T{:03}", i * config.n_types / config.n_concepts + 1);
        concepts.push(Concept::new(
            ConceptId::new(format!("C{i:06}"))?,
            canonical,
            synonyms,
            [type_code],
        )?);
    }
    let kb = KnowledgeBase::new("synth", concepts)?;

    // Filler phrases, token-disjoint from synonyms and from each other.
    let mut used_tokens: std::collections::BTreeSet<String> = kb
        .concepts()
        .flat_map(|c| c.synonyms.iter())
        .flat_map(|s| crate::corpus::tokenize(s))
        .map(|t| t.token)
        .collect();
    let mut phrases: Vec<Vec<String>> = Vec::with_capacity(FILLER_PHRASES);
    while phrases.len() < FILLER_PHRASES {
        let len = rng.range(PHRASE_TOKENS.0, PHRASE_TOKENS.1);
        let mut phrase = Vec::with_capacity(len);
        while phrase.len() < len {
            let token = pronounceable_token(&mut rng);
            if used_tokens.insert(token.clone()) {
                phrase.push(token);
            }
        }
        phrases.push(phrase);
    }

    let cumulative = zipf_cumulative(config.n_concepts, config.zipf_exponent);
    let concept_list: Vec<&Concept> = kb.concepts().collect();

    let make_split = |split: Split, n_docs: usize, rng: &mut Rng| -> Corpus {
        let mut documents = Vec::with_capacity(n_docs);
        let mut annotations = Vec::new();
        for d in 0..n_docs {
            let doc_id = format!("{split}-{d:04}");
            let mut text = String::new();
            let push_token = |text: &mut String, token: &str| {
                if !text.is_empty() {
                    text.push(' ');
                }
                text.push_str(token);
            };
            // Emit whole phrases until the drawn filler token budget is met.
            let push_fillers = |text: &mut String, rng: &mut Rng| {
                let budget =
                    rng.range(config.filler_tokens_between.0, config.filler_tokens_between.1);
                let mut emitted = 0usize;
                while emitted < budget {
                    let phrase = rng.choose(&phrases);
                    for token in phrase {
                        push_token(text, token);
                    }
                    emitted += phrase.len();
                }
            };
            let n_mentions = rng.range(config.mentions_per_doc.0, config.mentions_per_doc.1);
            for _ in 0..n_mentions {
                push_fillers(&mut text, rng);
                let concept = concept_list[sample_rank(rng, &cumulative)];
                let surface = rng.choose(&concept.synonyms).clone();
                let surface = corrupt_surface(rng, &surface, config.surface_noise_prob);
                if !text.is_empty() {
                    text.push(' ');
                }
                let start = text.chars().count();
                text.push_str(&surface);
                annotations.push(GoldAnnotation {
                    doc_id: doc_id.clone(),
                    span: Span {
                        start,
                        end: text.chars().count(),
                    },
                    concept: concept.id.clone(),
                });
            }
            push_fillers(&mut text, rng);
            documents.push(Document { doc_id, text });
        }
        Corpus::new(split, documents, annotations).expect("generated spans are in range")
    };

    let train = make_split(Split::Train, config.docs_per_split.0, &mut rng);
    let dev = make_split(Split::Dev, config.docs_per_split.1, &mut rng);
    let test = make_split(Split::Test, config.docs_per_split.2, &mut rng);

    // Partial views: an id sample at the configured fraction, one view per
    // semantic type, and all their complements.
    let mut partials = Vec::new();
    let sample_size = ((config.n_concepts as f64 * config.partial_fraction).round() as usize)
        .clamp(1, config.n_concepts - 1);
    let mut ids: Vec<ConceptId> = kb.ids().cloned().collect();
    for i in (1..ids.len()).rev() {
        ids.swap(i, rng.range(0, i));
    }
    ids.truncate(sample_size);
    let sampled = subset(&kb, "sampled", &Selector::Ids(ids))?.partial;
    partials.push(complement(&kb, &sampled)?);
    partials.push(sampled);
    for t in 1..=config.n_types {
        let code = format!("T{t:03}");
        let typed = subset(&kb, &format!("type-{code}"), &Selector::SemanticType(code))?.partial;
        if typed.len() < kb.len() {
            partials.push(complement(&kb, &typed)?);
        }
        partials.push(typed);
    }
    partials.sort_by(|a, b| a.name().cmp(b.name()));

    Ok(SynthOutput {
        kb,
        partials,
        train,
        dev,
        test,
    })
}

impl SynthOutput {
    /// Write the benchmark in the standard formats: `kb.jsonl`, one JSONL
    /// file per split, and one id-per-line selector file per partial view
    /// under `selectors/`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<(), SynthError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir.join("selectors"))?;
        crate::kb::save_kb(&self.kb, dir.join("kb.jsonl"))?;
        crate::corpus::save_corpus(&self.train, dir.join("train.jsonl"))?;
        crate::corpus::save_corpus(&self.dev, dir.join("dev.jsonl"))?;
        crate::corpus::save_corpus(&self.test, dir.join("test.jsonl"))?;
        for partial in &self.partials {
            let file = format!("{}.ids", partial.name().replace('∁', "-complement"));
            partial.save_ids(dir.join("selectors").join(file))?;
        }
        Ok(())
    }
}
