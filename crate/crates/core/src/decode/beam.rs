use std::cmp::Ordering;
use std::collections::HashMap;

use crate::alphabet::{Alphabet, BLANK};
use crate::emissions::EmissionMatrix;
use crate::lexicon::NodeId;

use super::{log_add, BeamParams, DecodeError, Decoded, DecoderKind, LogMatrix};

/// One prefix hypothesis with its CTC mass split by the last frame's symbol.
#[derive(Debug, Clone)]
pub(crate) struct Beam {
    pub(crate) prefix: Vec<u16>,
    /// Trie position for lexicon-guided search; unused otherwise.
    pub(crate) node: NodeId,
    pub(crate) blank: f64,
    pub(crate) non_blank: f64,
}

impl Beam {
    pub(crate) fn total(&self) -> f64 {
        log_add(self.blank, self.non_blank)
    }
}

/// Collation-aware ordering of class sequences used for every tie-break.
pub(crate) struct PrefixOrder {
    keys: Vec<(u32, u16)>,
}

impl PrefixOrder {
    pub(crate) fn new(alphabet: &Alphabet) -> Self {
        let keys = (0..alphabet.len())
            .map(|c| (alphabet.class_rank(c).unwrap_or(u32::MAX), c as u16))
            .collect();
        Self { keys }
    }

    fn key(&self, c: u16) -> (u32, u16) {
        self.keys[c as usize]
    }

    pub(crate) fn cmp(&self, a: &[u16], b: &[u16]) -> Ordering {
        a.iter()
            .map(|&c| self.key(c))
            .cmp(b.iter().map(|&c| self.key(c)))
    }

    /// Compares `a ++ [ca]` with `b ++ [cb]` without allocating.
    fn cmp_extended(&self, a: &[u16], ca: u16, b: &[u16], cb: u16) -> Ordering {
        let ka = a.iter().chain(std::iter::once(&ca)).map(|&c| self.key(c));
        let kb = b.iter().chain(std::iter::once(&cb)).map(|&c| self.key(c));
        ka.cmp(kb)
    }

    /// Higher mass first, then collation order.
    pub(crate) fn rank(&self, a: &Beam, b: &Beam) -> Ordering {
        b.total()
            .total_cmp(&a.total())
            .then_with(|| self.cmp(&a.prefix, &b.prefix))
    }
}

/// CTC prefix beam search. `expand` lists the permitted `(class, next node)`
/// extensions of a beam's trie node. Returns the surviving beams, best first.
pub(crate) fn run<F>(
    lp: &LogMatrix,
    width: usize,
    order: &PrefixOrder,
    root: NodeId,
    mut expand: F,
) -> Vec<Beam>
where
    F: FnMut(NodeId, &mut Vec<(u16, NodeId)>),
{
    let mut beams = vec![Beam {
        prefix: Vec::new(),
        node: root,
        blank: 0.0,
        non_blank: f64::NEG_INFINITY,
    }];
    let mut exts = Vec::new();
    // (mass, parent beam, class, node)
    let mut fresh: Vec<(f64, usize, u16, NodeId)> = Vec::new();

    for t in 0..lp.frames {
        let row = lp.row(t);

        // Extensions that land on a prefix already in the beam set merge into it.
        let index: HashMap<&[u16], usize> = beams
            .iter()
            .enumerate()
            .map(|(i, b)| (b.prefix.as_slice(), i))
            .collect();
        let mut existing: HashMap<(usize, u16), usize> = HashMap::new();
        for (j, b) in beams.iter().enumerate() {
            if let Some((&last, parent)) = b.prefix.split_last() {
                if let Some(&i) = index.get(parent) {
                    existing.insert((i, last), j);
                }
            }
        }

        let mut next: Vec<Beam> = beams
            .iter()
            .map(|b| Beam {
                prefix: b.prefix.clone(),
                node: b.node,
                blank: f64::NEG_INFINITY,
                non_blank: f64::NEG_INFINITY,
            })
            .collect();
        fresh.clear();

        for (i, b) in beams.iter().enumerate() {
            let total = b.total();
            next[i].blank = log_add(next[i].blank, total + row[BLANK]);
            let last = b.prefix.last().copied();
            if let Some(l) = last {
                next[i].non_blank = log_add(next[i].non_blank, b.non_blank + row[l as usize]);
            }
            exts.clear();
            expand(b.node, &mut exts);
            for &(c, node) in &exts {
                let p = row[c as usize];
                if p == f64::NEG_INFINITY {
                    continue;
                }
                // A repeated symbol only extends the prefix across a blank.
                let mass = if Some(c) == last { b.blank } else { total } + p;
                if mass == f64::NEG_INFINITY {
                    continue;
                }
                match existing.get(&(i, c)) {
                    Some(&j) => next[j].non_blank = log_add(next[j].non_blank, mass),
                    None => fresh.push((mass, i, c, node)),
                }
            }
        }

        // A fresh prefix has a single source, so only the top `width` of
        // them can survive the cut below.
        let cmp_fresh = |a: &(f64, usize, u16, NodeId), b: &(f64, usize, u16, NodeId)| {
            b.0.total_cmp(&a.0)
                .then_with(|| order.cmp_extended(&beams[a.1].prefix, a.2, &beams[b.1].prefix, b.2))
        };
        if fresh.len() > width {
            fresh.select_nth_unstable_by(width - 1, cmp_fresh);
            fresh.truncate(width);
        }
        for &(mass, i, c, node) in &fresh {
            let mut prefix = Vec::with_capacity(beams[i].prefix.len() + 1);
            prefix.extend_from_slice(&beams[i].prefix);
            prefix.push(c);
            next.push(Beam {
                prefix,
                node,
                blank: f64::NEG_INFINITY,
                non_blank: mass,
            });
        }

        next.retain(|b| b.total() > f64::NEG_INFINITY);
        next.sort_by(|a, b| order.rank(a, b));
        next.truncate(width);
        beams = next;
    }

    beams.sort_by(|a, b| order.rank(a, b));
    beams
}

/// Unconstrained CTC prefix beam search.
pub fn beam_search(
    emat: &EmissionMatrix,
    alphabet: &Alphabet,
    params: &BeamParams,
) -> Result<Decoded, DecodeError> {
    params.check()?;
    let lp = LogMatrix::prepare(emat, alphabet)?;
    let order = PrefixOrder::new(alphabet);
    let classes = lp.classes;
    let beams = run(&lp, params.width, &order, 0, |_, out| {
        out.extend((1..classes).map(|c| (c as u16, 0)));
    });
    let best = beams
        .first()
        .expect("a valid matrix keeps at least one beam");
    Ok(Decoded {
        label: best
            .prefix
            .iter()
            .filter_map(|&c| alphabet.symbol(c as usize))
            .collect(),
        score: best.total().min(0.0),
        decoder: DecoderKind::BeamSearch,
    })
}
