//! Experiment pipeline from word lists to comparison tables.

mod boxes;
mod dataset;
mod report;
mod run;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alphabet::AlphabetError;
use crate::corpus::CorpusError;
use crate::decode::{DecodeError, DecoderKind, DEFAULT_BEAM_WIDTH};
use crate::emissions::EmissionError;
use crate::layout::LayoutError;
use crate::lexicon::LexiconError;
use crate::metrics::MetricsError;

pub use boxes::make_boxes;
pub use dataset::{build_dataset, card_seed, DatasetSpec, MANIFEST_FILE};
pub use report::{evaluate_predictions, render_table, RunReport};
pub use run::{run_decode, select_boxes_jsonl, Prediction, FLAG_EMPTY_RANGE, FLAG_FALLBACK};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("card {card_id}: {source}")]
    Decode {
        card_id: String,
        source: DecodeError,
    },
    #[error("no lexicon word in the box range of card(s) {}", .0.join(", "))]
    EmptyRanges(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Emission(#[from] EmissionError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

impl HarnessError {
    /// Process exit status: 1 usage, 2 data validation, 3 decoding.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            HarnessError::Decode { .. } | HarnessError::EmptyRanges(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// One index card of a generated dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardRecord {
    pub card_id: String,
    pub gold_label: String,
    pub box_id: String,
    /// Relative to the manifest's directory.
    pub emat_path: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub decoder: DecoderKind,
    pub beam_width: usize,
    pub fallback_on_empty_range: bool,
    pub fold_case: bool,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(decoder: DecoderKind) -> Self {
        Self {
            decoder,
            beam_width: DEFAULT_BEAM_WIDTH,
            fallback_on_empty_range: false,
            fold_case: false,
            jobs: None,
        }
    }
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(
    path: &Path,
) -> Result<Vec<T>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_jsonl(&text, &path.display().to_string())
}

pub(crate) fn parse_jsonl<T: for<'de> Deserialize<'de>>(
    text: &str,
    origin: &str,
) -> Result<Vec<T>, HarnessError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| HarnessError::Data(format!("{origin} line {}: {e}", i + 1)))
        })
        .collect()
}

pub(crate) fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn load_manifest(path: &Path) -> Result<Vec<CardRecord>, HarnessError> {
    read_jsonl(path)
}

pub fn manifest_to_jsonl(cards: &[CardRecord]) -> String {
    to_jsonl(cards)
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>, HarnessError> {
    read_jsonl(path)
}

pub fn predictions_to_jsonl(preds: &[Prediction]) -> String {
    to_jsonl(preds)
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

pub fn write_text(path: &Path, contents: &str) -> Result<(), HarnessError> {
    write_file(path, contents)
}
