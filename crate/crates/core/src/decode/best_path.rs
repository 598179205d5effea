use crate::alphabet::Alphabet;
use crate::emissions::EmissionMatrix;

use super::{collapse, DecodeError, Decoded, DecoderKind};

/// Greedy decoding: frame-wise argmax (lowest class index on ties), collapsed.
pub fn best_path(emat: &EmissionMatrix, alphabet: &Alphabet) -> Result<Decoded, DecodeError> {
    if !emat.matches_alphabet(alphabet) {
        return Err(DecodeError::AlphabetMismatch);
    }
    emat.validate()?;
    let mut path = Vec::with_capacity(emat.frames());
    let mut score = 0.0;
    for row in emat.rows() {
        let mut best = 0;
        for (c, &p) in row.iter().enumerate().skip(1) {
            if p > row[best] {
                best = c;
            }
        }
        score += row[best].ln();
        path.push(best);
    }
    Ok(Decoded {
        label: collapse(&path, alphabet),
        score,
        decoder: DecoderKind::BestPath,
    })
}
