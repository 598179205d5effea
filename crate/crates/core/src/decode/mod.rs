//! CTC decoders: best path, prefix beam search, word beam search over a
//! lexicon trie and its box-constrained variant, plus the exact CTC label
//! probability used as a test oracle.

mod beam;
mod best_path;
mod forward;
pub(crate) mod word_beam;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alphabet::{Alphabet, AlphabetError, BLANK};
use crate::emissions::{EmissionMatrix, Violation};
use crate::lexicon::LexiconError;

pub use beam::beam_search;
pub use best_path::best_path;
pub use forward::{ctc_label_log_probability, ctc_label_probability};
pub use word_beam::{constrained_wbs, word_beam_search};

/// Default number of prefixes kept per frame.
pub const DEFAULT_BEAM_WIDTH: usize = 25;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("invalid emission matrix: {0}")]
    InvalidMatrix(#[from] Violation),
    #[error("emission matrix columns do not match the alphabet")]
    AlphabetMismatch,
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("no lexicon word lies in box {box_id} [{lo}, {hi}]")]
    EmptyRange {
        box_id: String,
        lo: String,
        hi: String,
    },
    #[error("beam width must be at least 1")]
    BeamWidth,
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecoderKind {
    #[serde(rename = "BP")]
    BestPath,
    #[serde(rename = "BS")]
    BeamSearch,
    #[serde(rename = "WBS")]
    WordBeamSearch,
    #[serde(rename = "WBS-C")]
    ConstrainedWordBeamSearch,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 4] = [
        DecoderKind::BestPath,
        DecoderKind::BeamSearch,
        DecoderKind::WordBeamSearch,
        DecoderKind::ConstrainedWordBeamSearch,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            DecoderKind::BestPath => "BP",
            DecoderKind::BeamSearch => "BS",
            DecoderKind::WordBeamSearch => "WBS",
            DecoderKind::ConstrainedWordBeamSearch => "WBS-C",
        }
    }

    pub fn uses_lexicon(self) -> bool {
        matches!(
            self,
            DecoderKind::WordBeamSearch | DecoderKind::ConstrainedWordBeamSearch
        )
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bp" => Ok(DecoderKind::BestPath),
            "bs" => Ok(DecoderKind::BeamSearch),
            "wbs" => Ok(DecoderKind::WordBeamSearch),
            "wbs-c" | "wbsc" => Ok(DecoderKind::ConstrainedWordBeamSearch),
            _ => Err(format!(
                "unknown decoder {s:?} (expected bp, bs, wbs or wbs-c)"
            )),
        }
    }
}

/// Output of a decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    pub label: String,
    /// Natural-log score of the winning hypothesis.
    pub score: f64,
    pub decoder: DecoderKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamParams {
    pub width: usize,
}

impl Default for BeamParams {
    fn default() -> Self {
        Self {
            width: DEFAULT_BEAM_WIDTH,
        }
    }
}

impl BeamParams {
    pub fn new(width: usize) -> Self {
        Self { width }
    }

    fn check(&self) -> Result<(), DecodeError> {
        if self.width == 0 {
            Err(DecodeError::BeamWidth)
        } else {
            Ok(())
        }
    }
}

/// The CTC many-to-one map: merge runs of equal classes, then drop blanks.
pub fn collapse_classes(path: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(path.len());
    let mut prev = None;
    for &s in path {
        if Some(s) != prev && s != BLANK {
            out.push(s);
        }
        prev = Some(s);
    }
    out
}

/// [`collapse_classes`] rendered as text.
pub fn collapse(path: &[usize], alphabet: &Alphabet) -> String {
    alphabet.decode_classes(&collapse_classes(path))
}

/// Smallest log-probability used by lexicon-constrained search.
pub(crate) const MIN_LOG_PROB: f64 = -708.0;

/// Row-major log-probabilities of a validated matrix.
pub(crate) struct LogMatrix {
    frames: usize,
    classes: usize,
    data: Vec<f64>,
}

impl LogMatrix {
    pub(crate) fn prepare(emat: &EmissionMatrix, alphabet: &Alphabet) -> Result<Self, DecodeError> {
        if !emat.matches_alphabet(alphabet) {
            return Err(DecodeError::AlphabetMismatch);
        }
        emat.validate()?;
        Ok(Self {
            frames: emat.frames(),
            classes: emat.classes(),
            data: emat.log_probs(),
        })
    }

    /// Merges every uppercase column into its lowercase counterpart. The
    /// merged-away columns become `-inf`; zero entries of the remaining
    /// columns are floored at [`MIN_LOG_PROB`] so that lexicon-constrained
    /// beams never all die.
    pub(crate) fn fold_case(
        emat: &EmissionMatrix,
        alphabet: &Alphabet,
    ) -> Result<Self, DecodeError> {
        if !emat.matches_alphabet(alphabet) {
            return Err(DecodeError::AlphabetMismatch);
        }
        emat.validate()?;
        let classes = emat.classes();
        let target: Vec<usize> = (0..classes)
            .map(|c| match alphabet.symbol(c) {
                None => BLANK,
                Some(ch) => alphabet
                    .class_of(alphabet.fold_char(ch))
                    .expect("fold stays in alphabet"),
            })
            .collect();
        let mut data = vec![0.0; emat.frames() * classes];
        for (t, row) in emat.rows().enumerate() {
            let out = &mut data[t * classes..(t + 1) * classes];
            for (c, &p) in row.iter().enumerate() {
                out[target[c]] += p;
            }
        }
        for (i, v) in data.iter_mut().enumerate() {
            let c = i % classes;
            *v = if target[c] == c {
                v.ln().max(MIN_LOG_PROB)
            } else {
                f64::NEG_INFINITY
            };
        }
        Ok(Self {
            frames: emat.frames(),
            classes,
            data,
        })
    }

    pub(crate) fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.classes..(t + 1) * self.classes]
    }
}

pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
