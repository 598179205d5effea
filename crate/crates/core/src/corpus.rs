//! Text-level synthetic corpora: frequency-weighted word samples and
//! uniform random strings over the diacritic letters.

use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::alphabet::{Alphabet, AlphabetError};

pub const DEFAULT_NATURAL_WORDS: usize = 5_000;
pub const DEFAULT_DIACRITIC_STRINGS: usize = 300;
pub const DEFAULT_LENGTH_RANGE: (usize, usize) = (2, 8);

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("frequency list is empty")]
    EmptyFrequencyList,
    #[error("diacritic subset is empty")]
    EmptySubset,
    #[error("sample size must be at least 1")]
    ZeroCount,
    #[error("invalid length range [{0}, {1}]")]
    LengthRange(usize, usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Word counts from some source corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrequencyList {
    entries: Vec<(String, u64)>,
}

impl FrequencyList {
    pub fn new(entries: Vec<(String, u64)>) -> Result<Self, CorpusError> {
        if let Some((i, _)) = entries.iter().enumerate().find(|(_, e)| e.1 == 0) {
            return Err(CorpusError::Parse {
                line: i + 1,
                msg: "count must be positive".into(),
            });
        }
        Ok(Self { entries })
    }

    /// Parses `word<TAB>count` lines.
    pub fn parse_tsv(text: &str) -> Result<Self, CorpusError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse = |msg: String| CorpusError::Parse { line: i + 1, msg };
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| parse("expected word<TAB>count".into()))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| parse(format!("bad count {count:?}")))?;
            if count == 0 {
                return Err(parse("count must be positive".into()));
            }
            entries.push((word.trim().to_string(), count));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_tsv(&text)
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks that every word is spelled in `alphabet` after folding.
    pub fn check(&self, alphabet: &Alphabet) -> Result<(), CorpusError> {
        for (w, _) in &self.entries {
            alphabet.collation_key(w)?;
        }
        Ok(())
    }
}

/// Draws `n` words with replacement, proportionally to their counts.
pub fn sample_words(freq: &FrequencyList, n: usize, seed: u64) -> Result<Vec<String>, CorpusError> {
    if freq.is_empty() {
        return Err(CorpusError::EmptyFrequencyList);
    }
    if n == 0 {
        return Err(CorpusError::ZeroCount);
    }
    let weights = WeightedIndex::new(freq.entries.iter().map(|e| e.1))
        .map_err(|_| CorpusError::EmptyFrequencyList)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| freq.entries[weights.sample(&mut rng)].0.clone())
        .collect())
}

/// `n` strings with lengths uniform in `[min, max]` and characters uniform
/// over `subset`.
pub fn gen_diacritic_strings(
    subset: &[char],
    n: usize,
    (min, max): (usize, usize),
    seed: u64,
) -> Result<Vec<String>, CorpusError> {
    if subset.is_empty() {
        return Err(CorpusError::EmptySubset);
    }
    if min == 0 || min > max {
        return Err(CorpusError::LengthRange(min, max));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let len = rng.random_range(min..=max);
            (0..len)
                .map(|_| subset[rng.random_range(0..subset.len())])
                .collect()
        })
        .collect())
}

/// [`gen_diacritic_strings`] over the alphabet's diacritic letters.
pub fn gen_alphabet_diacritic_strings(
    alphabet: &Alphabet,
    n: usize,
    length_range: (usize, usize),
    seed: u64,
) -> Result<Vec<String>, CorpusError> {
    gen_diacritic_strings(&alphabet.diacritics(), n, length_range, seed)
}
