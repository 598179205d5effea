//! Decoding, lexicon constraints, postprocessing and evaluation for
//! handwritten index-card recognition over CTC emission matrices.

pub mod alphabet;
pub mod corpus;
pub mod decode;
pub mod emissions;
pub mod harness;
pub mod layout;
pub mod lexicon;
pub mod metrics;

pub use alphabet::{Alphabet, AlphabetError};
pub use decode::{
    beam_search, best_path, collapse, constrained_wbs, ctc_label_probability, word_beam_search,
    BeamParams, DecodeError, Decoded, DecoderKind,
};
pub use emissions::{synthesize_emissions, EmissionMatrix, NoiseParams, Violation};
pub use layout::BBox;
pub use lexicon::{BoxRange, Lexicon, LexiconError, Match};
pub use metrics::{evaluate, levenshtein, EvalPair, EvalReport};
