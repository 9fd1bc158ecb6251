//! Token prefix trie over concept names for constrained decoding.
//!
//! Every root-to-terminal path is the tokenization of some member concept's
//! name; terminals carry the set of concepts sharing that name. A decoder
//! restricted to trie continuations can only ever emit names of the view.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::tokenize;
use crate::kb::{ConceptId, KbView};

#[derive(Debug, Default)]
struct Node {
    children: BTreeMap<String, usize>,
    concepts: BTreeSet<ConceptId>,
}

/// Token prefix trie over the names of a KB view.
#[derive(Debug)]
pub struct NameTrie {
    nodes: Vec<Node>,
    view_name: String,
    paths: usize,
    max_depth: usize,
}

/// What may follow a prefix: the child tokens, whether the prefix itself is a
/// complete name, and the concepts owning that name.
#[derive(Debug, Clone, PartialEq)]
pub struct Continuations<'a> {
    pub tokens: Vec<&'a str>,
    pub is_terminal: bool,
    pub concepts: Vec<&'a ConceptId>,
}

/// Build the trie from the tokenized canonical names — and, unless
/// `canonical_only` is set, all synonyms — of the view's member concepts.
pub fn build_trie(view: KbView<'_>, canonical_only: bool) -> NameTrie {
    let mut trie = NameTrie {
        nodes: vec![Node::default()],
        view_name: view.name().to_string(),
        paths: 0,
        max_depth: 0,
    };
    for concept in view.concepts() {
        let names: &[String] = if canonical_only {
            std::slice::from_ref(&concept.canonical_name)
        } else {
            &concept.synonyms
        };
        for name in names {
            let tokens = tokenize(name);
            if tokens.is_empty() {
                continue;
            }
            trie.insert(tokens.iter().map(|t| t.token.as_str()), &concept.id);
        }
    }
    trie
}

impl NameTrie {
    fn insert<'a>(&mut self, tokens: impl Iterator<Item = &'a str>, concept: &ConceptId) {
        let mut node = 0usize;
        let mut depth = 0usize;
        for token in tokens {
            depth += 1;
            node = match self.nodes[node].children.get(token) {
                Some(&child) => child,
                None => {
                    let child = self.nodes.len();
                    self.nodes.push(Node::default());
                    self.nodes[node].children.insert(token.to_string(), child);
                    child
                }
            };
        }
        if self.nodes[node].concepts.is_empty() {
            self.paths += 1;
        }
        self.nodes[node].concepts.insert(concept.clone());
        self.max_depth = self.max_depth.max(depth);
    }

    pub fn view_name(&self) -> &str {
        &self.view_name
    }

    /// Number of distinct tokenized name sequences in the trie.
    pub fn path_count(&self) -> usize {
        self.paths
    }

    /// Length in tokens of the longest name.
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    fn walk<S: AsRef<str>>(&self, prefix: &[S]) -> Option<usize> {
        let mut node = 0usize;
        for token in prefix {
            node = *self.nodes[node].children.get(token.as_ref())?;
        }
        Some(node)
    }

    /// Continuations of a token prefix. A prefix not present in the trie gets
    /// no tokens, is non-terminal, and owns no concepts.
    pub fn allowed_continuations<S: AsRef<str>>(&self, prefix: &[S]) -> Continuations<'_> {
        match self.walk(prefix) {
            Some(node) => Continuations {
                tokens: self.nodes[node].children.keys().map(|s| s.as_str()).collect(),
                is_terminal: !self.nodes[node].concepts.is_empty(),
                concepts: self.nodes[node].concepts.iter().collect(),
            },
            None => Continuations {
                tokens: vec![],
                is_terminal: false,
                concepts: vec![],
            },
        }
    }

    /// Whether the exact token sequence is a complete name of the view.
    pub fn is_terminal<S: AsRef<str>>(&self, tokens: &[S]) -> bool {
        self.allowed_continuations(tokens).is_terminal
    }

    /// Cursor at the trie root, for incremental decoding.
    pub fn cursor(&self) -> TrieCursor<'_> {
        TrieCursor { trie: self, node: 0 }
    }
}

/// A position inside the trie; stepping it never allocates.
#[derive(Debug, Clone, Copy)]
pub struct TrieCursor<'a> {
    trie: &'a NameTrie,
    node: usize,
}

impl<'a> TrieCursor<'a> {
    /// Advance along `token`, if such a child exists.
    pub fn step(&self, token: &str) -> Option<TrieCursor<'a>> {
        self.trie.nodes[self.node]
            .children
            .get(token)
            .map(|&node| TrieCursor {
                trie: self.trie,
                node,
            })
    }

    /// Child tokens with their cursors, in token order.
    pub fn children(&self) -> impl Iterator<Item = (&'a str, TrieCursor<'a>)> + '_ {
        self.trie.nodes[self.node]
            .children
            .iter()
            .map(|(token, &node)| {
                (
                    token.as_str(),
                    TrieCursor {
                        trie: self.trie,
                        node,
                    },
                )
            })
    }

    pub fn is_terminal(&self) -> bool {
        !self.trie.nodes[self.node].concepts.is_empty()
    }

    /// Lexicographically smallest concept owning the name at this node.
    pub fn min_concept(&self) -> Option<&'a ConceptId> {
        self.trie.nodes[self.node].concepts.iter().next()
    }

    pub fn concepts(&self) -> impl Iterator<Item = &'a ConceptId> + '_ {
        self.trie.nodes[self.node].concepts.iter()
    }
}
