use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::decode::{self, BeamParams, DecodeError, DecoderKind};
use crate::emissions::EmissionMatrix;
use crate::layout::{select_index_box, BBox};
use crate::lexicon::{BoxRange, Lexicon};

use super::{parse_jsonl, to_jsonl, CardRecord, ExperimentConfig, HarnessError};

/// The card's box range holds no lexicon word.
pub const FLAG_EMPTY_RANGE: &str = "empty_range";
/// The card was decoded with unconstrained WBS instead.
pub const FLAG_FALLBACK: &str = "fallback_wbs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub card_id: String,
    pub pred: String,
    /// `None` when the card could not be decoded.
    pub score: Option<f64>,
    pub decoder: DecoderKind,
    #[serde(default)]
    pub flags: Vec<String>,
}

enum Restriction {
    Words(Lexicon),
    Empty,
}

/// Decodes every card of `manifest`, in manifest order.
///
/// WBS-C cards whose box range holds no lexicon word get the
/// [`FLAG_EMPTY_RANGE`] flag and are either decoded with plain WBS
/// (`fallback_on_empty_range`) or left with an empty prediction and no score.
pub fn run_decode(
    manifest: &[CardRecord],
    base_dir: &Path,
    config: &ExperimentConfig,
    alphabet: &Alphabet,
    lexicon: Option<&Lexicon>,
    boxes: Option<&[BoxRange]>,
) -> Result<Vec<Prediction>, HarnessError> {
    if config.beam_width == 0 {
        return Err(HarnessError::Usage("beam width must be at least 1".into()));
    }
    let lexicon = match (config.decoder.uses_lexicon(), lexicon) {
        (true, None) => {
            return Err(HarnessError::Usage(format!(
                "decoder {} needs a lexicon",
                config.decoder
            )))
        }
        (true, Some(l)) if l.is_empty() => {
            return Err(HarnessError::Data("lexicon is empty".into()))
        }
        (_, l) => l,
    };

    let mut restrictions: HashMap<&str, Restriction> = HashMap::new();
    if config.decoder == DecoderKind::ConstrainedWordBeamSearch {
        let boxes =
            boxes.ok_or_else(|| HarnessError::Usage("decoder WBS-C needs a box file".into()))?;
        let by_id: HashMap<&str, &BoxRange> =
            boxes.iter().map(|b| (b.box_id.as_str(), b)).collect();
        let lexicon = lexicon.expect("checked above");
        for card in manifest {
            if restrictions.contains_key(card.box_id.as_str()) {
                continue;
            }
            let range = by_id.get(card.box_id.as_str()).ok_or_else(|| {
                HarnessError::Data(format!(
                    "card {}: box {:?} not in the box file",
                    card.card_id, card.box_id
                ))
            })?;
            let sub = lexicon.restrict_range(range)?;
            let r = if sub.is_empty() {
                Restriction::Empty
            } else {
                Restriction::Words(sub)
            };
            restrictions.insert(card.box_id.as_str(), r);
        }
    }

    let params = BeamParams::new(config.beam_width);
    let decode_card = |card: &CardRecord| -> Result<Prediction, HarnessError> {
        let path = base_dir.join(&card.emat_path);
        let emat = EmissionMatrix::load(&path)
            .map_err(|e| HarnessError::Data(format!("card {}: {e}", card.card_id)))?;
        emat.validate_for(alphabet)
            .map_err(|e| HarnessError::Data(format!("card {}: {e}", card.card_id)))?;
        let wrap = |source: DecodeError| HarnessError::Decode {
            card_id: card.card_id.clone(),
            source,
        };
        let mut flags = Vec::new();
        let decoded = match config.decoder {
            DecoderKind::BestPath => Some(decode::best_path(&emat, alphabet).map_err(wrap)?),
            DecoderKind::BeamSearch => {
                Some(decode::beam_search(&emat, alphabet, &params).map_err(wrap)?)
            }
            DecoderKind::WordBeamSearch => Some(
                decode::word_beam_search(&emat, alphabet, lexicon.unwrap(), &params)
                    .map_err(wrap)?,
            ),
            DecoderKind::ConstrainedWordBeamSearch => match &restrictions[card.box_id.as_str()] {
                Restriction::Words(sub) => Some(
                    decode::word_beam::decode(
                        &emat,
                        alphabet,
                        sub,
                        &params,
                        DecoderKind::ConstrainedWordBeamSearch,
                    )
                    .map_err(wrap)?,
                ),
                Restriction::Empty => {
                    flags.push(FLAG_EMPTY_RANGE.to_string());
                    if config.fallback_on_empty_range {
                        flags.push(FLAG_FALLBACK.to_string());
                        Some(
                            decode::word_beam_search(&emat, alphabet, lexicon.unwrap(), &params)
                                .map_err(wrap)?,
                        )
                    } else {
                        None
                    }
                }
            },
        };
        let (pred, score) = match decoded {
            Some(d) => {
                let label = if config.fold_case {
                    alphabet.fold(&d.label)
                } else {
                    d.label
                };
                (label, Some(d.score))
            }
            None => (String::new(), None),
        };
        Ok(Prediction {
            card_id: card.card_id.clone(),
            pred,
            score,
            decoder: config.decoder,
            flags,
        })
    };

    match config.jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| HarnessError::Usage(format!("thread pool: {e}")))?;
            pool.install(|| manifest.par_iter().map(decode_card).collect())
        }
        None => manifest.par_iter().map(decode_card).collect(),
    }
}

#[derive(Deserialize)]
struct CardBoxes {
    card_id: String,
    boxes: Vec<BBox>,
}

#[derive(Serialize)]
struct SelectedBox {
    card_id: String,
    #[serde(rename = "box")]
    selected: Option<BBox>,
}

/// Runs [`select_index_box`] over a detector JSON-lines stream.
pub fn select_boxes_jsonl(
    text: &str,
    strip_height: f64,
    row_tolerance: f64,
) -> Result<String, HarnessError> {
    let cards: Vec<CardBoxes> = parse_jsonl(text, "boxes")?;
    let mut out = Vec::with_capacity(cards.len());
    for card in cards {
        if let Some(bad) = card.boxes.iter().find(|b| !b.is_valid()) {
            return Err(HarnessError::Data(format!(
                "card {}: invalid box {bad:?}",
                card.card_id
            )));
        }
        out.push(SelectedBox {
            selected: select_index_box(&card.boxes, strip_height, row_tolerance),
            card_id: card.card_id,
        });
    }
    Ok(to_jsonl(&out))
}
