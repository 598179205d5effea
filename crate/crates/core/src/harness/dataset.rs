use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::alphabet::Alphabet;
use crate::emissions::{synthesize_emissions, NoiseParams};
use crate::lexicon::BoxRange;

use super::{manifest_to_jsonl, write_file, CardRecord, HarnessError};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
const CARD_DIR: &str = "cards";
const INJECTION_STREAM: u64 = 0x6f75_745f_7261_6e67;

/// Inputs to [`build_dataset`] besides the word list and boxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    /// `noise.seed` is the dataset's master seed.
    pub noise: NoiseParams,
    /// Fraction of cards filed under a box whose range excludes the gold word.
    pub out_of_range_frac: f64,
}

/// Per-card generator seed derived from the master seed (SplitMix64).
pub fn card_seed(master: u64, index: usize) -> u64 {
    let mut z = master.wrapping_add((index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Writes one EMAT per word under `out_dir/cards/` and the manifest at
/// `out_dir/manifest.jsonl`. Each word is filed under the unique box whose
/// range contains it, except for the injected out-of-range cards.
pub fn build_dataset(
    words: &[String],
    boxes: &[BoxRange],
    alphabet: &Alphabet,
    spec: &DatasetSpec,
    out_dir: &Path,
) -> Result<Vec<CardRecord>, HarnessError> {
    spec.noise.validate()?;
    if !(0.0..=1.0).contains(&spec.out_of_range_frac) {
        return Err(HarnessError::Usage(format!(
            "out-of-range fraction {} not in [0, 1]",
            spec.out_of_range_frac
        )));
    }
    let keyed: Vec<(Vec<u32>, Vec<u32>)> = boxes
        .iter()
        .map(|b| {
            b.check(alphabet)?;
            Ok((
                alphabet.collation_key(&b.lo)?,
                alphabet.collation_key(&b.hi)?,
            ))
        })
        .collect::<Result<_, HarnessError>>()?;

    let mut assigned = Vec::with_capacity(words.len());
    for w in words {
        let key = alphabet.collation_key(w)?;
        let mut hits = keyed
            .iter()
            .enumerate()
            .filter(|(_, (lo, hi))| lo <= &key && &key <= hi)
            .map(|(i, _)| i);
        match (hits.next(), hits.next()) {
            (Some(i), None) => assigned.push(i),
            (None, _) => {
                return Err(HarnessError::Data(format!(
                    "word {w:?} is not covered by any box"
                )))
            }
            (Some(i), Some(j)) => {
                return Err(HarnessError::Data(format!(
                    "word {w:?} lies in both {} and {}",
                    boxes[i].box_id, boxes[j].box_id
                )))
            }
        }
    }

    let inject = (spec.out_of_range_frac * words.len() as f64).round() as usize;
    if inject > 0 {
        if boxes.len() < 2 {
            return Err(HarnessError::Usage(
                "out-of-range injection needs at least two boxes".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.noise.seed ^ INJECTION_STREAM);
        let mut chosen = sample(&mut rng, words.len(), inject).into_vec();
        chosen.sort_unstable();
        for i in chosen {
            let own = assigned[i];
            let mut other = rng.random_range(0..boxes.len() - 1);
            if other >= own {
                other += 1;
            }
            assigned[i] = other;
        }
    }

    let card_dir = out_dir.join(CARD_DIR);
    fs::create_dir_all(&card_dir).map_err(|e| HarnessError::io(&card_dir, e))?;

    let cards: Vec<CardRecord> = words
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let card_id = format!("card{i:06}");
            let noise = NoiseParams {
                seed: card_seed(spec.noise.seed, i),
                ..spec.noise
            };
            let emat = synthesize_emissions(w, alphabet, &noise)?;
            let rel = format!("{CARD_DIR}/{card_id}.emat");
            write_file(&out_dir.join(&rel), &emat.to_emat_string())?;
            Ok(CardRecord {
                card_id,
                gold_label: w.clone(),
                box_id: boxes[assigned[i]].box_id.clone(),
                emat_path: rel,
            })
        })
        .collect::<Result<_, HarnessError>>()?;

    write_file(&out_dir.join(MANIFEST_FILE), &manifest_to_jsonl(&cards))?;
    Ok(cards)
}
