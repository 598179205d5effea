//! Symbol inventory, case folding and collation order.
//!
//! Column 0 of every emission matrix is the CTC blank. Non-blank symbols
//! occupy columns `1..len()` in inventory order. Collation ranks are defined
//! only over case-folded symbols; words are compared after folding.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs;
use std::path::Path;

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Marker used for the blank in alphabet files and EMAT headers.
pub const BLANK_MARKER: char = '-';

/// Class index of the blank.
pub const BLANK: usize = 0;

const POLISH_LOWER: &str = "aąbcćdeęfghijklłmnńoópqrsśtuvwxyzźż";
const POLISH_UPPER: &str = "AĄBCĆDEĘFGHIJKLŁMNŃOÓPQRSŚTUVWXYZŹŻ";

// Letters whose diacritic is not a combining mark under NFD.
const STROKE_BASES: &[(char, char)] = &[
    ('ł', 'l'),
    ('Ł', 'L'),
    ('đ', 'd'),
    ('Đ', 'D'),
    ('ø', 'o'),
    ('Ø', 'O'),
    ('ħ', 'h'),
    ('Ħ', 'H'),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("alphabet has no symbols")]
    Empty,
    #[error("duplicate symbol {0:?}")]
    DuplicateSymbol(char),
    #[error("symbol {0:?} is reserved")]
    ReservedSymbol(char),
    #[error("collation list is missing symbol {0:?}")]
    CollationIncomplete(char),
    #[error("collation list entry {0:?} is not a lowercase symbol of the alphabet")]
    CollationUnknown(char),
    #[error("uppercase symbol {0:?} has no lowercase counterpart in the alphabet")]
    MissingLowercase(char),
    #[error("character {ch:?} at position {pos} of {word:?} is not in the alphabet")]
    OutOfAlphabet { word: String, pos: usize, ch: char },
    #[error("inverted range: {lo:?} sorts after {hi:?}")]
    InvertedRange { lo: String, hi: String },
    #[error("alphabet file: {0}")]
    File(String),
}

/// Ordered symbol inventory with a blank at class index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<char>,
    index: HashMap<char, usize>,
    fold: HashMap<char, char>,
    rank: HashMap<char, u32>,
    bases: HashMap<char, char>,
}

impl Alphabet {
    /// Builds an alphabet from its non-blank symbols (in column order) and the
    /// collation order of its lowercase symbols.
    pub fn new(symbols: &[char], collation: &[char]) -> Result<Self, AlphabetError> {
        if symbols.is_empty() {
            return Err(AlphabetError::Empty);
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, &c) in symbols.iter().enumerate() {
            if c == BLANK_MARKER || c.is_whitespace() {
                return Err(AlphabetError::ReservedSymbol(c));
            }
            if index.insert(c, i + 1).is_some() {
                return Err(AlphabetError::DuplicateSymbol(c));
            }
        }

        let mut fold = HashMap::new();
        for &c in symbols {
            if let Some(lower) = single_lowercase(c) {
                if index.contains_key(&lower) {
                    fold.insert(c, lower);
                } else if c.is_uppercase() {
                    return Err(AlphabetError::MissingLowercase(c));
                }
            }
        }

        let mut rank = HashMap::new();
        for (r, &c) in collation.iter().enumerate() {
            if !index.contains_key(&c) || fold.contains_key(&c) {
                return Err(AlphabetError::CollationUnknown(c));
            }
            if rank.insert(c, r as u32).is_some() {
                return Err(AlphabetError::DuplicateSymbol(c));
            }
        }
        for &c in symbols {
            if !fold.contains_key(&c) && !rank.contains_key(&c) {
                return Err(AlphabetError::CollationIncomplete(c));
            }
        }

        let mut bases = HashMap::new();
        for &c in symbols {
            if let Some(base) = diacritic_base(c) {
                if index.contains_key(&base) {
                    bases.insert(c, base);
                }
            }
        }

        Ok(Self {
            symbols: symbols.to_vec(),
            index,
            fold,
            rank,
            bases,
        })
    }

    /// Polish: a–z plus ą ć ę ł ń ó ś ź ż in both cases, no digits.
    ///
    /// Each diacritic letter collates immediately after its base letter.
    pub fn polish() -> Self {
        let lower: Vec<char> = POLISH_LOWER.chars().collect();
        let mut symbols = lower.clone();
        symbols.extend(POLISH_UPPER.chars());
        Self::new(&symbols, &lower).expect("built-in Polish alphabet is valid")
    }

    /// Lowercase ASCII letters only.
    pub fn ascii_lowercase() -> Self {
        let lower: Vec<char> = ('a'..='z').collect();
        Self::new(&lower, &lower).expect("ASCII alphabet is valid")
    }

    /// Parses the one-symbol-per-line format. The first line must be the
    /// blank marker; the remaining lines are symbols in collation order.
    pub fn parse(text: &str) -> Result<Self, AlphabetError> {
        let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
        match lines.next() {
            Some(l) if l == BLANK_MARKER.to_string() => {}
            _ => {
                return Err(AlphabetError::File(
                    "first line must be the blank marker '-'".into(),
                ))
            }
        }
        let mut symbols = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut chars = line.chars();
            let c = chars.next().unwrap();
            if chars.next().is_some() {
                return Err(AlphabetError::File(format!(
                    "line {}: expected a single symbol, got {line:?}",
                    n + 2
                )));
            }
            symbols.push(c);
        }
        // Caseless or lowercase symbols define the collation order.
        let collation: Vec<char> = symbols
            .iter()
            .copied()
            .filter(|&c| match single_lowercase(c) {
                Some(l) => !symbols.contains(&l),
                None => true,
            })
            .collect();
        Self::new(&symbols, &collation)
    }

    pub fn load(path: &Path) -> Result<Self, AlphabetError> {
        let text = fs::read_to_string(path)
            .map_err(|e| AlphabetError::File(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Renders the alphabet file format: blank marker, then symbols with the
    /// lowercase ones in collation order followed by the rest.
    pub fn to_file_string(&self) -> String {
        let mut out = String::from("-\n");
        let mut lower: Vec<char> = self.rank.keys().copied().collect();
        lower.sort_by_key(|c| self.rank[c]);
        for c in lower
            .iter()
            .chain(self.symbols.iter().filter(|c| self.fold.contains_key(c)))
        {
            out.push(*c);
            out.push('\n');
        }
        out
    }

    /// Number of classes including the blank.
    pub fn len(&self) -> usize {
        self.symbols.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Non-blank symbols in column order (column `i + 1` holds `symbols()[i]`).
    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn symbol(&self, class: usize) -> Option<char> {
        if class == BLANK {
            None
        } else {
            self.symbols.get(class - 1).copied()
        }
    }

    pub fn class_of(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn contains(&self, c: char) -> bool {
        self.index.contains_key(&c)
    }

    /// Case-folds one character. Characters outside the inventory are
    /// lowered by Unicode rules when that yields a single character.
    pub fn fold_char(&self, c: char) -> char {
        if let Some(&l) = self.fold.get(&c) {
            return l;
        }
        if self.index.contains_key(&c) {
            return c;
        }
        single_lowercase(c).unwrap_or(c)
    }

    pub fn fold(&self, word: &str) -> String {
        word.nfc().map(|c| self.fold_char(c)).collect()
    }

    /// Collation rank of a folded symbol.
    pub fn rank(&self, c: char) -> Option<u32> {
        self.rank.get(&c).copied()
    }

    /// Collation rank of a class index, after folding. Blank has none.
    pub fn class_rank(&self, class: usize) -> Option<u32> {
        self.symbol(class)
            .and_then(|c| self.rank(self.fold_char(c)))
    }

    /// Folded collation key of `word`.
    pub fn collation_key(&self, word: &str) -> Result<Vec<u32>, AlphabetError> {
        word.nfc()
            .enumerate()
            .map(|(pos, c)| {
                self.rank(self.fold_char(c))
                    .ok_or_else(|| AlphabetError::OutOfAlphabet {
                        word: word.to_string(),
                        pos,
                        ch: c,
                    })
            })
            .collect()
    }

    /// Case-insensitive lexicographic comparison by collation rank. A proper
    /// prefix sorts before its extensions.
    pub fn compare(&self, a: &str, b: &str) -> Result<Ordering, AlphabetError> {
        Ok(self.collation_key(a)?.cmp(&self.collation_key(b)?))
    }

    /// Inclusive range test `lo <= word <= hi` under [`Alphabet::compare`].
    pub fn in_range(&self, word: &str, lo: &str, hi: &str) -> Result<bool, AlphabetError> {
        let lo_key = self.collation_key(lo)?;
        let hi_key = self.collation_key(hi)?;
        if lo_key > hi_key {
            return Err(AlphabetError::InvertedRange {
                lo: lo.to_string(),
                hi: hi.to_string(),
            });
        }
        let key = self.collation_key(word)?;
        Ok(lo_key <= key && key <= hi_key)
    }

    /// Maps a word onto class indices without folding.
    pub fn encode(&self, word: &str) -> Result<Vec<usize>, AlphabetError> {
        word.nfc()
            .enumerate()
            .map(|(pos, c)| {
                self.class_of(c)
                    .ok_or_else(|| AlphabetError::OutOfAlphabet {
                        word: word.to_string(),
                        pos,
                        ch: c,
                    })
            })
            .collect()
    }

    /// Maps class indices back to text, skipping blanks.
    pub fn decode_classes(&self, classes: &[usize]) -> String {
        classes.iter().filter_map(|&c| self.symbol(c)).collect()
    }

    /// Base letter of a diacritic symbol when that base is also in the alphabet.
    pub fn base_of(&self, c: char) -> Option<char> {
        self.bases.get(&c).copied()
    }

    /// Symbols carrying a diacritic over a base letter of this alphabet, in
    /// column order.
    pub fn diacritics(&self) -> Vec<char> {
        self.symbols
            .iter()
            .copied()
            .filter(|c| self.bases.contains_key(c))
            .collect()
    }

    /// Whether two classes form a base/diacritic confusable pair.
    pub fn confusable(&self, a: usize, b: usize) -> bool {
        match (self.symbol(a), self.symbol(b)) {
            (Some(x), Some(y)) => self.base_of(x) == Some(y) || self.base_of(y) == Some(x),
            _ => false,
        }
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::polish()
    }
}

fn single_lowercase(c: char) -> Option<char> {
    let mut it = c.to_lowercase();
    let l = it.next()?;
    if it.next().is_some() || l == c {
        None
    } else {
        Some(l)
    }
}

fn diacritic_base(c: char) -> Option<char> {
    if let Some(&(_, base)) = STROKE_BASES.iter().find(|(d, _)| *d == c) {
        return Some(base);
    }
    let mut decomposed = std::iter::once(c).nfd();
    let base = decomposed.next()?;
    if base != c && decomposed.next().is_some() {
        Some(base)
    } else {
        None
    }
}
