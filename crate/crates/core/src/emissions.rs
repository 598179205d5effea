//! CTC emission matrices, the EMAT v1 text format, and the synthetic
//! emission generator used in place of a trained recognizer.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma};
use thiserror::Error;

use crate::alphabet::{Alphabet, AlphabetError, BLANK, BLANK_MARKER};

/// Tolerance on row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Concentration of the per-frame Beta draw for diverted mass. Small values
/// make most frames clean and a few heavily corrupted.
const DIVERSION_CONCENTRATION: f64 = 1.0;
/// Gamma shape per unit of kernel weight. Small values pile a frame's
/// diverted mass onto one or two competitors.
const COMPETITOR_SHAPE: f64 = 0.1;
/// Share of diverted mass spread by the plain kernel so no entry is zero.
const KERNEL_FLOOR: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Violation {
    #[error("matrix has {columns} columns but alphabet has {expected} classes")]
    ColumnCount { columns: usize, expected: usize },
    #[error("row {row} column {col}: value {value} outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}")]
    RowSum { row: usize, sum: f64 },
}

impl Violation {
    pub fn row(&self) -> Option<usize> {
        match self {
            Violation::ColumnCount { .. } => None,
            Violation::OutOfRange { row, .. } | Violation::RowSum { row, .. } => Some(*row),
        }
    }
}

#[derive(Debug, Error)]
pub enum EmissionError {
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error("cannot synthesize emissions for an empty label")]
    EmptyLabel,
    #[error("invalid noise parameters: {0}")]
    Noise(String),
    #[error("row {row} has {len} cells, expected {expected}")]
    RowLength {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("EMAT line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("matrix columns do not match the alphabet")]
    AlphabetMismatch,
    #[error("invalid matrix: {0}")]
    Invalid(#[from] Violation),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// T×C matrix of per-frame class probabilities. Column 0 is the blank.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionMatrix {
    symbols: Vec<char>,
    frames: usize,
    data: Vec<f64>,
}

impl EmissionMatrix {
    /// `symbols` are the non-blank column labels; each row has
    /// `symbols.len() + 1` cells. Values are not validated here.
    pub fn from_rows(symbols: Vec<char>, rows: Vec<Vec<f64>>) -> Result<Self, EmissionError> {
        let width = symbols.len() + 1;
        let mut data = Vec::with_capacity(rows.len() * width);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(EmissionError::RowLength {
                    row,
                    len: r.len(),
                    expected: width,
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            symbols,
            frames: rows.len(),
            data,
        })
    }

    /// Convenience for matrices over a known alphabet.
    pub fn for_alphabet(alphabet: &Alphabet, rows: Vec<Vec<f64>>) -> Result<Self, EmissionError> {
        Self::from_rows(alphabet.symbols().to_vec(), rows)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Number of columns, blank included.
    pub fn classes(&self) -> usize {
        self.symbols.len() + 1
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let c = self.classes();
        &self.data[t * c..(t + 1) * c]
    }

    pub fn get(&self, t: usize, class: usize) -> f64 {
        self.data[t * self.classes() + class]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.classes())
    }

    /// Checks range and row-stochasticity, reporting the first offending row.
    pub fn validate(&self) -> Result<(), Violation> {
        for (row, r) in self.rows().enumerate() {
            for (col, &value) in r.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Violation::OutOfRange { row, col, value });
                }
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Violation::RowSum { row, sum });
            }
        }
        Ok(())
    }

    /// Validates and additionally checks the columns against `alphabet`.
    pub fn validate_for(&self, alphabet: &Alphabet) -> Result<(), Violation> {
        if self.classes() != alphabet.len() {
            return Err(Violation::ColumnCount {
                columns: self.classes(),
                expected: alphabet.len(),
            });
        }
        self.validate()
    }

    pub fn matches_alphabet(&self, alphabet: &Alphabet) -> bool {
        self.symbols == alphabet.symbols()
    }

    /// Element-wise natural log, row-major.
    pub fn log_probs(&self) -> Vec<f64> {
        self.data.iter().map(|p| p.ln()).collect()
    }

    pub fn to_emat_string(&self) -> String {
        let mut out = String::with_capacity(16 * self.data.len() + 64);
        out.push_str("EMAT 1\n");
        let _ = writeln!(out, "T {} C {}", self.frames, self.classes());
        out.push(BLANK_MARKER);
        for c in &self.symbols {
            out.push(' ');
            out.push(*c);
        }
        out.push('\n');
        for r in self.rows() {
            for (i, v) in r.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                // Shortest round-trip decimal form.
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_emat(text: &str) -> Result<Self, EmissionError> {
        let fmt = |line: usize, msg: String| EmissionError::Format { line, msg };
        let mut lines = text.lines();

        match lines.next() {
            Some("EMAT 1") => {}
            other => return Err(fmt(1, format!("expected `EMAT 1`, got {other:?}"))),
        }

        let dims = lines
            .next()
            .ok_or_else(|| fmt(2, "missing dimensions".into()))?;
        let parts: Vec<&str> = dims.split(' ').collect();
        let (frames, classes) = match parts.as_slice() {
            ["T", t, "C", c] => (
                t.parse::<usize>()
                    .map_err(|_| fmt(2, format!("bad frame count {t:?}")))?,
                c.parse::<usize>()
                    .map_err(|_| fmt(2, format!("bad class count {c:?}")))?,
            ),
            _ => return Err(fmt(2, format!("expected `T <int> C <int>`, got {dims:?}"))),
        };
        if classes == 0 {
            return Err(fmt(2, "class count must be positive".into()));
        }

        let header = lines
            .next()
            .ok_or_else(|| fmt(3, "missing symbol line".into()))?;
        let mut symbols = Vec::with_capacity(classes);
        for (i, tok) in header.split(' ').enumerate() {
            let mut chars = tok.chars();
            let c = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(fmt(3, format!("bad symbol token {tok:?}"))),
            };
            if (i == 0) != (c == BLANK_MARKER) {
                return Err(fmt(
                    3,
                    "blank marker must appear exactly once, first".into(),
                ));
            }
            if i > 0 {
                symbols.push(c);
            }
        }
        if symbols.len() + 1 != classes {
            return Err(fmt(
                3,
                format!("{} symbols listed but C = {classes}", symbols.len() + 1),
            ));
        }

        let mut data = Vec::with_capacity(frames * classes);
        let mut seen = 0;
        for (i, line) in lines.enumerate() {
            let lineno = i + 4;
            if seen == frames {
                if line.is_empty() {
                    continue;
                }
                return Err(fmt(lineno, format!("more than T = {frames} rows")));
            }
            let before = data.len();
            for tok in line.split(' ') {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| fmt(lineno, format!("non-numeric cell {tok:?}")))?;
                data.push(v);
            }
            if data.len() - before != classes {
                return Err(EmissionError::RowLength {
                    row: seen,
                    len: data.len() - before,
                    expected: classes,
                });
            }
            seen += 1;
        }
        if seen != frames {
            return Err(fmt(
                4 + seen,
                format!("expected {frames} rows, found {seen}"),
            ));
        }
        Ok(Self {
            symbols,
            frames,
            data,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), EmissionError> {
        fs::write(path, self.to_emat_string()).map_err(|source| EmissionError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, EmissionError> {
        let text = fs::read_to_string(path).map_err(|source| EmissionError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_emat(&text)
    }
}

/// Parameters of the synthetic emission generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Expected probability mass diverted from the canonical symbol per frame.
    pub epsilon: f64,
    pub frames_per_char: usize,
    /// Kernel weight of base/diacritic confusable pairs relative to other symbols.
    pub confusion_boost: f64,
    pub seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            frames_per_char: 3,
            confusion_boost: 5.0,
            seed: 0,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<(), EmissionError> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(EmissionError::Noise(format!(
                "epsilon {} not in [0, 1)",
                self.epsilon
            )));
        }
        if self.frames_per_char == 0 {
            return Err(EmissionError::Noise("frames_per_char must be >= 1".into()));
        }
        if !(self.confusion_boost > 0.0 && self.confusion_boost.is_finite()) {
            return Err(EmissionError::Noise(format!(
                "confusion_boost {} must be positive",
                self.confusion_boost
            )));
        }
        Ok(())
    }
}

/// Frame-level class sequence whose CTC collapse is `label`: each symbol
/// repeated `frames_per_char` times, with one blank between equal neighbours.
pub fn canonical_path(label: &[usize], frames_per_char: usize) -> Vec<usize> {
    let mut path = Vec::with_capacity(label.len() * (frames_per_char + 1));
    for (i, &s) in label.iter().enumerate() {
        if i > 0 && label[i - 1] == s {
            path.push(BLANK);
        }
        path.extend(std::iter::repeat_n(s, frames_per_char));
    }
    path
}

/// Generates a noisy emission matrix whose canonical path spells `label`.
///
/// Each frame keeps `1 - d` on its canonical class, where `d` is drawn from a
/// Beta distribution with mean `epsilon`. The diverted mass `d` goes to the
/// other classes through a kernel that weights the base/diacritic partners of
/// the canonical symbol by `confusion_boost`, perturbed by Gamma draws so that
/// heavy diversions tend to land on a single competitor.
pub fn synthesize_emissions(
    label: &str,
    alphabet: &Alphabet,
    params: &NoiseParams,
) -> Result<EmissionMatrix, EmissionError> {
    params.validate()?;
    if label.is_empty() {
        return Err(EmissionError::EmptyLabel);
    }
    let classes = alphabet.encode(label)?;
    let path = canonical_path(&classes, params.frames_per_char);
    let width = alphabet.len();
    let mut data = vec![0.0; path.len() * width];

    if params.epsilon == 0.0 {
        for (t, &s) in path.iter().enumerate() {
            data[t * width + s] = 1.0;
        }
        return Ok(EmissionMatrix {
            symbols: alphabet.symbols().to_vec(),
            frames: path.len(),
            data,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let eps = params.epsilon;
    let diversion = Beta::new(
        eps * DIVERSION_CONCENTRATION,
        (1.0 - eps) * DIVERSION_CONCENTRATION,
    )
    .map_err(|e| EmissionError::Noise(e.to_string()))?;
    let plain = Gamma::new(COMPETITOR_SHAPE, 1.0).expect("positive shape");
    let boosted =
        Gamma::new(COMPETITOR_SHAPE * params.confusion_boost, 1.0).expect("positive shape");

    let mut kernel = vec![0.0; width];
    let mut draws = vec![0.0; width];
    for (t, &s) in path.iter().enumerate() {
        let d: f64 = diversion.sample(&mut rng).clamp(0.0, 1.0);
        for j in 0..width {
            if j == s {
                kernel[j] = 0.0;
                draws[j] = 0.0;
                continue;
            }
            let confusable = alphabet.confusable(s, j);
            kernel[j] = if confusable {
                params.confusion_boost
            } else {
                1.0
            };
            draws[j] = if confusable {
                boosted.sample(&mut rng)
            } else {
                plain.sample(&mut rng)
            };
        }
        let kernel_sum: f64 = kernel.iter().sum();
        let draw_sum: f64 = draws.iter().sum();
        let row = &mut data[t * width..(t + 1) * width];
        for j in 0..width {
            if j == s {
                continue;
            }
            let spread = kernel[j] / kernel_sum;
            let peaked = if draw_sum > 0.0 {
                draws[j] / draw_sum
            } else {
                spread
            };
            row[j] = d * (KERNEL_FLOOR * spread + (1.0 - KERNEL_FLOOR) * peaked);
        }
        let rest: f64 = row.iter().sum();
        row[s] = (1.0 - rest).max(0.0);
    }

    Ok(EmissionMatrix {
        symbols: alphabet.symbols().to_vec(),
        frames: path.len(),
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn best_path_text(m: &EmissionMatrix, a: &Alphabet) -> String {
        let argmax: Vec<usize> = m
            .rows()
            .map(|r| {
                let mut best = 0;
                for (i, &p) in r.iter().enumerate() {
                    if p > r[best] {
                        best = i;
                    }
                }
                best
            })
            .collect();
        let mut out = Vec::new();
        let mut prev = usize::MAX;
        for s in argmax {
            if s != prev && s != BLANK {
                out.push(s);
            }
            prev = s;
        }
        a.decode_classes(&out)
    }

    #[test]
    fn zero_noise_kot() {
        let a = Alphabet::polish();
        let p = NoiseParams {
            frames_per_char: 2,
            ..Default::default()
        };
        let m = synthesize_emissions("kot", &a, &p).unwrap();
        assert_eq!(m.frames(), 6);
        assert_eq!(best_path_text(&m, &a), "kot");
        m.validate().unwrap();
    }

    #[test]
    fn repeated_letters_get_blank_separator() {
        let a = Alphabet::polish();
        let p = NoiseParams {
            frames_per_char: 1,
            ..Default::default()
        };
        let m = synthesize_emissions("anna", &a, &p).unwrap();
        assert_eq!(m.frames(), 5);
        let n = a.class_of('n').unwrap();
        let argmax: Vec<usize> = (0..5)
            .map(|t| (0..m.classes()).find(|&c| m.get(t, c) == 1.0).unwrap())
            .collect();
        assert_eq!(
            argmax,
            vec![
                a.class_of('a').unwrap(),
                n,
                BLANK,
                n,
                a.class_of('a').unwrap()
            ]
        );
        assert_eq!(best_path_text(&m, &a), "anna");
    }

    #[test]
    fn noisy_rows_are_stochastic_and_deterministic() {
        let a = Alphabet::polish();
        let p = NoiseParams {
            epsilon: 0.4,
            seed: 11,
            ..Default::default()
        };
        let m1 = synthesize_emissions("źdźbło", &a, &p).unwrap();
        let m2 = synthesize_emissions("źdźbło", &a, &p).unwrap();
        m1.validate().unwrap();
        assert_eq!(m1.to_emat_string(), m2.to_emat_string());
        assert!(m1.rows().all(|r| r.iter().all(|&v| v > 0.0)));
    }

    #[test]
    fn generator_errors() {
        let a = Alphabet::polish();
        let p = NoiseParams::default();
        assert!(matches!(
            synthesize_emissions("", &a, &p),
            Err(EmissionError::EmptyLabel)
        ));
        assert!(matches!(
            synthesize_emissions("k7t", &a, &p),
            Err(EmissionError::Alphabet(_))
        ));
        let bad = NoiseParams { epsilon: 1.0, ..p };
        assert!(synthesize_emissions("kot", &a, &bad).is_err());
    }

    #[test]
    fn confusions_concentrate_on_diacritic_partner() {
        // Count which symbol a one-letter card is misread as, over many seeds.
        let a = Alphabet::polish();
        let count = |boost: f64| {
            let mut hits = std::collections::HashMap::<char, usize>::new();
            for seed in 0..1000 {
                let p = NoiseParams {
                    epsilon: 0.3,
                    frames_per_char: 3,
                    confusion_boost: boost,
                    seed,
                };
                let m = synthesize_emissions("a", &a, &p).unwrap();
                for c in best_path_text(&m, &a).chars().filter(|&c| c != 'a') {
                    *hits.entry(c).or_default() += 1;
                }
            }
            hits
        };
        let boosted = count(5.0);
        let uniform = count(1.0);
        let top = boosted.iter().max_by_key(|(_, &n)| n).map(|(&c, _)| c);
        assert_eq!(top, Some('ą'));
        let b = boosted.get(&'ą').copied().unwrap_or(0);
        let u = uniform.get(&'ą').copied().unwrap_or(0);
        assert!(b > 2 * u.max(1), "boosted {b} vs uniform {u}");
    }

    #[test]
    fn validate_reports_first_offender() {
        let a = Alphabet::ascii_lowercase();
        let mut rows = vec![vec![0.0; 27]; 3];
        rows[0][0] = 1.0;
        rows[1][0] = 0.5;
        rows[2][1] = 1.0;
        let m = EmissionMatrix::for_alphabet(&a, rows.clone()).unwrap();
        assert_eq!(m.validate().unwrap_err().row(), Some(1));
        rows[1][0] = 1.2;
        let m = EmissionMatrix::for_alphabet(&a, rows).unwrap();
        assert!(matches!(
            m.validate(),
            Err(Violation::OutOfRange { row: 1, col: 0, .. })
        ));
    }

    #[test]
    fn emat_round_trip_and_framing_errors() {
        let a = Alphabet::polish();
        let p = NoiseParams {
            epsilon: 0.25,
            seed: 3,
            ..Default::default()
        };
        let m = synthesize_emissions("Ewolucja", &a, &p).unwrap();
        let text = m.to_emat_string();
        assert!(text.lines().all(|l| !l.ends_with(' ')));
        let back = EmissionMatrix::parse_emat(&text).unwrap();
        assert_eq!(back, m);

        let two_rows = "EMAT 1\nT 2 C 2\n- a\n0.5 0.5\n1 0\n0 1\n";
        assert!(EmissionMatrix::parse_emat(two_rows).is_err());
        let bad_header = "EMAT 1\nT 1 C 5\n- a b c\n0.25 0.25 0.25 0.25 0\n";
        assert!(EmissionMatrix::parse_emat(bad_header).is_err());
        let bad_cell = "EMAT 1\nT 1 C 2\n- a\n0.5 x\n";
        assert!(EmissionMatrix::parse_emat(bad_cell).is_err());
        let short_row = "EMAT 1\nT 1 C 2\n- a\n1\n";
        assert!(matches!(
            EmissionMatrix::parse_emat(short_row),
            Err(EmissionError::RowLength { .. })
        ));
        assert!(EmissionMatrix::parse_emat("EMAT 2\n").is_err());
    }
}
