use std::cmp::Ordering;

use crate::alphabet::Alphabet;
use crate::emissions::EmissionMatrix;
use crate::lexicon::{BoxRange, Lexicon, NodeId, ROOT};

use super::beam::{run, Beam, PrefixOrder};
use super::{BeamParams, DecodeError, Decoded, DecoderKind, LogMatrix};

/// Prefix beam search whose prefixes must stay inside the lexicon trie.
///
/// Upper- and lowercase columns are summed before decoding since lexicon
/// words are case-folded. The best surviving beam that spells a whole word
/// wins. When no beam does, every beam is completed by greedy descent through
/// its subtree and the completions are re-ranked.
pub fn word_beam_search(
    emat: &EmissionMatrix,
    alphabet: &Alphabet,
    lexicon: &Lexicon,
    params: &BeamParams,
) -> Result<Decoded, DecodeError> {
    decode(emat, alphabet, lexicon, params, DecoderKind::WordBeamSearch)
}

/// [`word_beam_search`] over the part of `lexicon` inside `range`.
pub fn constrained_wbs(
    emat: &EmissionMatrix,
    alphabet: &Alphabet,
    lexicon: &Lexicon,
    range: &BoxRange,
    params: &BeamParams,
) -> Result<Decoded, DecodeError> {
    let restricted = lexicon.restrict_range(range)?;
    if restricted.is_empty() {
        return Err(DecodeError::EmptyRange {
            box_id: range.box_id.clone(),
            lo: range.lo.clone(),
            hi: range.hi.clone(),
        });
    }
    decode(
        emat,
        alphabet,
        &restricted,
        params,
        DecoderKind::ConstrainedWordBeamSearch,
    )
}

/// Word beam search over an already restricted lexicon, tagged as `kind`.
pub(crate) fn decode(
    emat: &EmissionMatrix,
    alphabet: &Alphabet,
    lexicon: &Lexicon,
    params: &BeamParams,
    kind: DecoderKind,
) -> Result<Decoded, DecodeError> {
    params.check()?;
    if lexicon.is_empty() {
        return Err(DecodeError::EmptyLexicon);
    }
    if lexicon.alphabet().symbols() != alphabet.symbols() {
        return Err(DecodeError::AlphabetMismatch);
    }
    let lp = LogMatrix::fold_case(emat, alphabet)?;
    let order = PrefixOrder::new(alphabet);
    let beams = run(&lp, params.width, &order, ROOT, |node, out| {
        out.extend_from_slice(lexicon.children(node));
    });

    if let Some(best) = beams.iter().find(|b| lexicon.is_word(b.node)) {
        return Ok(Decoded {
            label: lexicon.word_at(best.node).unwrap().to_string(),
            score: best.total().min(0.0),
            decoder: kind,
        });
    }

    let (label, score) = complete(&lp, lexicon, &order, &beams);
    Ok(Decoded {
        label,
        score: score.min(0.0),
        decoder: kind,
    })
}

/// Extends each beam to a word: at every step take the child whose symbol has
/// the highest mean probability over all frames, charging each added symbol
/// the matrix's mean per-frame best log-probability.
fn complete(
    lp: &LogMatrix,
    lexicon: &Lexicon,
    order: &PrefixOrder,
    beams: &[Beam],
) -> (String, f64) {
    let frames = lp.frames.max(1) as f64;
    let mut mean_prob = vec![0.0; lp.classes];
    let mut penalty = 0.0;
    for t in 0..lp.frames {
        let row = lp.row(t);
        let mut best = f64::NEG_INFINITY;
        for (c, &v) in row.iter().enumerate() {
            mean_prob[c] += v.exp() / frames;
            best = best.max(v);
        }
        penalty += best / frames;
    }

    let mut winner: Option<(Vec<u16>, NodeId, f64)> = None;
    for beam in beams {
        let mut prefix = beam.prefix.clone();
        let mut node = beam.node;
        while !lexicon.is_word(node) {
            let children = lexicon.children(node);
            let mut pick = children[0];
            for &(c, child) in &children[1..] {
                if mean_prob[c as usize] > mean_prob[pick.0 as usize] {
                    pick = (c, child);
                }
            }
            prefix.push(pick.0);
            node = pick.1;
        }
        let added = (prefix.len() - beam.prefix.len()) as f64;
        let score = beam.total() + added * penalty;
        let better = match &winner {
            None => true,
            Some((wp, _, ws)) => match score.total_cmp(ws) {
                Ordering::Greater => true,
                Ordering::Equal => order.cmp(&prefix, wp) == Ordering::Less,
                Ordering::Less => false,
            },
        };
        if better {
            winner = Some((prefix, node, score));
        }
    }
    let (_, node, score) = winner.expect("beam search keeps at least one beam");
    (lexicon.word_at(node).unwrap().to_string(), score)
}
