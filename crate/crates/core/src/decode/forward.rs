use crate::alphabet::{Alphabet, BLANK};
use crate::emissions::EmissionMatrix;

use super::{log_add, DecodeError, LogMatrix};

/// Probability that the matrix emits `label`, summed over every frame path
/// that collapses to it. Labels too long for the matrix get probability 0.
pub fn ctc_label_probability(
    emat: &EmissionMatrix,
    label: &str,
    alphabet: &Alphabet,
) -> Result<f64, DecodeError> {
    ctc_label_log_probability(emat, label, alphabet).map(f64::exp)
}

/// Log-space forward recursion over the blank-interleaved label.
pub fn ctc_label_log_probability(
    emat: &EmissionMatrix,
    label: &str,
    alphabet: &Alphabet,
) -> Result<f64, DecodeError> {
    let lp = LogMatrix::prepare(emat, alphabet)?;
    let target = alphabet.encode(label)?;
    Ok(forward(&lp, &target))
}

pub(crate) fn forward(lp: &LogMatrix, target: &[usize]) -> f64 {
    let mut ext = Vec::with_capacity(2 * target.len() + 1);
    ext.push(BLANK);
    for &s in target {
        ext.push(s);
        ext.push(BLANK);
    }
    let states = ext.len();
    if lp.frames == 0 {
        return if target.is_empty() {
            0.0
        } else {
            f64::NEG_INFINITY
        };
    }

    let mut alpha = vec![f64::NEG_INFINITY; states];
    let first = lp.row(0);
    alpha[0] = first[ext[0]];
    if states > 1 {
        alpha[1] = first[ext[1]];
    }
    let mut next = vec![f64::NEG_INFINITY; states];
    for t in 1..lp.frames {
        let row = lp.row(t);
        for s in 0..states {
            let mut acc = alpha[s];
            if s >= 1 {
                acc = log_add(acc, alpha[s - 1]);
            }
            if s >= 2 && ext[s] != BLANK && ext[s] != ext[s - 2] {
                acc = log_add(acc, alpha[s - 2]);
            }
            next[s] = if acc == f64::NEG_INFINITY {
                acc
            } else {
                acc + row[ext[s]]
            };
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    let last = alpha[states - 1];
    if states > 1 {
        log_add(last, alpha[states - 2])
    } else {
        last
    }
}
