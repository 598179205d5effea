//! Closed word list stored as a prefix trie, with box-range restriction and
//! nearest-match correction.

use std::cmp::Ordering;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alphabet::{Alphabet, AlphabetError};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error("lexicon is empty")]
    Empty,
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path} line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
}

/// Index of a trie node.
pub type NodeId = u32;

pub const ROOT: NodeId = 0;

#[derive(Debug, Clone, Default)]
struct Node {
    // (class index, child) sorted by collation rank of the class.
    children: Vec<(u16, NodeId)>,
    word: Option<u32>,
}

/// Case-folded, deduplicated word set over an alphabet.
#[derive(Debug, Clone)]
pub struct Lexicon {
    alphabet: Arc<Alphabet>,
    nodes: Vec<Node>,
    // Collation order; `Node::word` indexes into this.
    words: Vec<String>,
}

/// Alphabetical span of one archive box, inclusive at both ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxRange {
    pub box_id: String,
    pub lo: String,
    pub hi: String,
}

impl BoxRange {
    pub fn new(box_id: impl Into<String>, lo: impl Into<String>, hi: impl Into<String>) -> Self {
        Self {
            box_id: box_id.into(),
            lo: lo.into(),
            hi: hi.into(),
        }
    }

    pub fn contains(&self, word: &str, alphabet: &Alphabet) -> Result<bool, AlphabetError> {
        alphabet.in_range(word, &self.lo, &self.hi)
    }

    pub fn check(&self, alphabet: &Alphabet) -> Result<(), AlphabetError> {
        alphabet.in_range(&self.lo, &self.lo, &self.hi).map(|_| ())
    }
}

/// Result of [`Lexicon::nearest_match`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub word: String,
    pub distance: usize,
}

impl Lexicon {
    /// Folds, validates and deduplicates `words`. Empty entries are skipped.
    pub fn build<I, S>(words: I, alphabet: Arc<Alphabet>) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut keyed = Vec::new();
        for w in words {
            let w = w.as_ref();
            if w.is_empty() {
                continue;
            }
            let folded = alphabet.fold(w);
            let classes = alphabet.encode(&folded).map_err(|e| match e {
                AlphabetError::OutOfAlphabet { pos, ch, .. } => AlphabetError::OutOfAlphabet {
                    word: w.to_string(),
                    pos,
                    ch,
                },
                other => other,
            })?;
            let key = alphabet.collation_key(&folded)?;
            keyed.push((key, classes, folded));
        }
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.dedup_by(|a, b| a.0 == b.0);

        let mut lex = Self {
            alphabet,
            nodes: vec![Node::default()],
            words: Vec::with_capacity(keyed.len()),
        };
        for (_, classes, word) in keyed {
            let id = lex.words.len() as u32;
            lex.insert(&classes, id);
            lex.words.push(word);
        }
        Ok(lex)
    }

    fn insert(&mut self, classes: &[usize], id: u32) {
        let mut node = ROOT;
        for &c in classes {
            let rank = self.alphabet.class_rank(c).unwrap_or(u32::MAX);
            let alphabet = &self.alphabet;
            let children = &self.nodes[node as usize].children;
            let pos = children.partition_point(|&(k, _)| {
                alphabet.class_rank(k as usize).unwrap_or(u32::MAX) < rank
            });
            node = match children.get(pos) {
                Some(&(k, child)) if k as usize == c => child,
                _ => {
                    let child = self.nodes.len() as NodeId;
                    self.nodes.push(Node::default());
                    self.nodes[node as usize]
                        .children
                        .insert(pos, (c as u16, child));
                    child
                }
            };
        }
        self.nodes[node as usize].word = Some(id);
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in collation order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn children(&self, node: NodeId) -> &[(u16, NodeId)] {
        &self.nodes[node as usize].children
    }

    pub fn child(&self, node: NodeId, class: usize) -> Option<NodeId> {
        self.children(node)
            .iter()
            .find(|&&(k, _)| k as usize == class)
            .map(|&(_, n)| n)
    }

    pub fn is_word(&self, node: NodeId) -> bool {
        self.nodes[node as usize].word.is_some()
    }

    /// Word ending at `node`, if any.
    pub fn word_at(&self, node: NodeId) -> Option<&str> {
        self.nodes[node as usize]
            .word
            .map(|i| self.words[i as usize].as_str())
    }

    /// Trie node reached by spelling the folded `prefix`.
    pub fn find(&self, prefix: &str) -> Option<NodeId> {
        let folded = self.alphabet.fold(prefix);
        let mut node = ROOT;
        for ch in folded.chars() {
            node = self.child(node, self.alphabet.class_of(ch)?)?;
        }
        Some(node)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.find(word).is_some_and(|n| self.is_word(n))
    }

    /// Words beginning with `prefix`, in collation order.
    pub fn completions(&self, prefix: &str) -> Vec<&str> {
        let mut out = Vec::new();
        if let Some(start) = self.find(prefix) {
            let mut stack = vec![start];
            while let Some(n) = stack.pop() {
                if let Some(w) = self.word_at(n) {
                    out.push(w);
                }
                stack.extend(self.children(n).iter().rev().map(|&(_, c)| c));
            }
        }
        out
    }

    /// Sub-lexicon of the words inside `range`.
    pub fn restrict_range(&self, range: &BoxRange) -> Result<Lexicon, LexiconError> {
        let lo = self.alphabet.collation_key(&range.lo)?;
        let hi = self.alphabet.collation_key(&range.hi)?;
        if lo > hi {
            return Err(AlphabetError::InvertedRange {
                lo: range.lo.clone(),
                hi: range.hi.clone(),
            }
            .into());
        }
        let mut kept = Vec::new();
        for w in &self.words {
            let key = self.alphabet.collation_key(w)?;
            match key.cmp(&hi) {
                Ordering::Greater => break,
                _ if key >= lo => kept.push(w.as_str()),
                _ => {}
            }
        }
        Lexicon::build(kept, Arc::clone(&self.alphabet))
    }

    /// Closest word by Levenshtein distance to the folded query. Ties go to
    /// the word that sorts first. Returns `None` only when `max_dist` is set
    /// and every word is farther than it.
    ///
    /// Query symbols outside the alphabet never match any trie edge.
    pub fn nearest_match(
        &self,
        query: &str,
        max_dist: Option<usize>,
    ) -> Result<Option<Match>, LexiconError> {
        if self.is_empty() {
            return Err(LexiconError::Empty);
        }
        let folded = self.alphabet.fold(query);
        let q: Vec<Option<usize>> = folded.chars().map(|c| self.alphabet.class_of(c)).collect();

        let mut search = NearestSearch {
            lex: self,
            query: &q,
            max_dist,
            best: None,
        };
        let first_row: Vec<usize> = (0..=q.len()).collect();
        search.visit(ROOT, &first_row);

        Ok(search.best.map(|(distance, id)| Match {
            word: self.words[id as usize].clone(),
            distance,
        }))
    }
}

struct NearestSearch<'a> {
    lex: &'a Lexicon,
    query: &'a [Option<usize>],
    max_dist: Option<usize>,
    best: Option<(usize, u32)>,
}

impl NearestSearch<'_> {
    // Depth-first in collation order, so the first word found at a given
    // distance is also the smallest one.
    fn visit(&mut self, node: NodeId, row: &[usize]) {
        let here = row[row.len() - 1];
        if let Some(id) = self.lex.nodes[node as usize].word {
            let within = self.max_dist.is_none_or(|m| here <= m);
            if within && self.best.is_none_or(|(d, _)| here < d) {
                self.best = Some((here, id));
            }
        }
        let floor = *row.iter().min().unwrap();
        if self.best.is_some_and(|(d, _)| floor >= d) || self.max_dist.is_some_and(|m| floor > m) {
            return;
        }
        let mut next = vec![0; row.len()];
        for &(class, child) in self.lex.children(node) {
            next[0] = row[0] + 1;
            for (j, q) in self.query.iter().enumerate() {
                let cost = usize::from(*q != Some(class as usize));
                next[j + 1] = (row[j] + cost).min(row[j + 1] + 1).min(next[j] + 1);
            }
            self.visit(child, &next);
        }
    }
}

/// Reads a one-word-per-line file, skipping blank lines.
pub fn read_word_list(path: &Path) -> Result<Vec<String>, LexiconError> {
    let io = |source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::open(path).map_err(io)?;
    let mut words = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io)?;
        let w = line.trim();
        if !w.is_empty() {
            words.push(w.to_string());
        }
    }
    Ok(words)
}

pub fn load_lexicon(path: &Path, alphabet: Arc<Alphabet>) -> Result<Lexicon, LexiconError> {
    Lexicon::build(read_word_list(path)?, alphabet)
}

/// Reads a JSON-lines box file.
pub fn load_boxes(path: &Path) -> Result<Vec<BoxRange>, LexiconError> {
    let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let b: BoxRange = serde_json::from_str(line).map_err(|e| LexiconError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        boxes.push(b);
    }
    Ok(boxes)
}

pub fn boxes_to_jsonl(boxes: &[BoxRange]) -> String {
    let mut out = String::new();
    for b in boxes {
        out.push_str(&serde_json::to_string(b).expect("box serializes"));
        out.push('\n');
    }
    out
}
