#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use htrlex_core::alphabet::Alphabet;
use htrlex_core::corpus::{sample_words, FrequencyList};
use htrlex_core::emissions::{EmissionMatrix, NoiseParams};
use htrlex_core::harness::{
    build_dataset, evaluate_predictions, make_boxes, run_decode, CardRecord, DatasetSpec,
    ExperimentConfig, Prediction, RunReport,
};
use htrlex_core::lexicon::{BoxRange, Lexicon};
use htrlex_core::DecoderKind;

pub fn freq_list_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/pl_freq.tsv")
}

pub fn freq_list() -> FrequencyList {
    FrequencyList::load(&freq_list_path()).expect("frequency fixture loads")
}

const ONSETS: &[&str] = &[
    "", "b", "c", "ch", "cz", "ć", "d", "dz", "dż", "f", "g", "h", "j", "k", "kr", "l", "ł", "m",
    "n", "ń", "p", "pr", "r", "rz", "s", "sz", "ś", "st", "t", "tr", "w", "wr", "z", "ź", "ż",
    "gr", "br", "pl", "kl", "zw",
];
const NUCLEI: &[&str] = &[
    "a", "ą", "e", "ę", "i", "o", "ó", "u", "y", "ia", "ie", "io",
];
const CODAS: &[&str] = &[
    "", "", "", "k", "n", "ł", "s", "ść", "r", "m", "ż", "ń", "ch", "t",
];

/// `n` distinct pseudo-Polish words built from syllables, in generation order.
pub fn pseudo_words(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=4);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
            w.push_str(NUCLEI[rng.random_range(0..NUCLEI.len())]);
        }
        w.push_str(CODAS[rng.random_range(0..CODAS.len())]);
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Exponential-time Levenshtein straight from the recursive definition.
pub fn levenshtein_oracle(a: &[char], b: &[char]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = levenshtein_oracle(ra, rb) + usize::from(x != y);
            let del = levenshtein_oracle(ra, b) + 1;
            let ins = levenshtein_oracle(a, rb) + 1;
            sub.min(del).min(ins)
        }
    }
}

/// Label probabilities by summing every frame path, keyed by class sequence.
pub fn path_sum_oracle(emat: &EmissionMatrix) -> std::collections::BTreeMap<Vec<usize>, f64> {
    let t = emat.frames();
    let c = emat.classes();
    let mut out = std::collections::BTreeMap::new();
    let total = c.pow(t as u32);
    for code in 0..total {
        let mut path = Vec::with_capacity(t);
        let mut rest = code;
        let mut p = 1.0;
        for frame in 0..t {
            let k = rest % c;
            rest /= c;
            p *= emat.get(frame, k);
            path.push(k);
        }
        *out.entry(htrlex_core::decode::collapse_classes(&path))
            .or_insert(0.0) += p;
    }
    out
}

/// Every label of length `<= max_len` over classes `1..classes`.
pub fn all_labels(classes: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for l in &frontier {
            for k in 1..classes {
                let mut e: Vec<usize> = l.clone();
                e.push(k);
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Small alphabet with `letters` symbols from `abc...`.
pub fn small_alphabet(letters: usize) -> Alphabet {
    let s: Vec<char> = ('a'..='z').take(letters).collect();
    Alphabet::new(&s, &s).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, alphabet: &Alphabet, frames: usize) -> EmissionMatrix {
    let rows = (0..frames)
        .map(|_| {
            let raw: Vec<f64> = (0..alphabet.len())
                .map(|_| rng.random::<f64>() + 1e-3)
                .collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        })
        .collect();
    EmissionMatrix::for_alphabet(alphabet, rows).unwrap()
}

/// A generated dataset on disk with everything needed to decode it.
pub struct Experiment {
    pub dir: tempfile::TempDir,
    pub alphabet: Arc<Alphabet>,
    pub lexicon: Lexicon,
    pub boxes: Vec<BoxRange>,
    pub cards: Vec<CardRecord>,
}

impl Experiment {
    /// Samples `n` natural-distribution words, uses their dedup set as the
    /// lexicon and files them into `k` boxes.
    pub fn natural(n: usize, k: usize, epsilon: f64, oor: f64, seed: u64) -> Self {
        let words = sample_words(&freq_list(), n, seed).unwrap();
        Self::from_words(words, None, k, epsilon, oor, seed)
    }

    pub fn from_words(
        words: Vec<String>,
        lexicon_words: Option<&[String]>,
        k: usize,
        epsilon: f64,
        oor: f64,
        seed: u64,
    ) -> Self {
        let alphabet = Arc::new(Alphabet::polish());
        let lexicon = match lexicon_words {
            Some(l) => Lexicon::build(l, Arc::clone(&alphabet)).unwrap(),
            None => Lexicon::build(&words, Arc::clone(&alphabet)).unwrap(),
        };
        let boxes = make_boxes(&lexicon, k).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let spec = DatasetSpec {
            noise: NoiseParams {
                epsilon,
                frames_per_char: 3,
                confusion_boost: 5.0,
                seed,
            },
            out_of_range_frac: oor,
        };
        let cards = build_dataset(&words, &boxes, &alphabet, &spec, dir.path()).unwrap();
        Self {
            dir,
            alphabet,
            lexicon,
            boxes,
            cards,
        }
    }

    pub fn decode(&self, decoder: DecoderKind, jobs: Option<usize>) -> Vec<Prediction> {
        let mut config = ExperimentConfig::new(decoder);
        config.jobs = jobs;
        run_decode(
            &self.cards,
            self.dir.path(),
            &config,
            &self.alphabet,
            Some(&self.lexicon),
            Some(&self.boxes),
        )
        .unwrap()
    }

    pub fn evaluate(&self, preds: &[Prediction]) -> RunReport {
        evaluate_predictions(preds, &self.cards, &self.alphabet, false).unwrap()
    }
}
