//! Python bindings: `import htrlex`.

use std::cmp::Ordering;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use htrlex_core::alphabet::Alphabet;
use htrlex_core::decode::{self, BeamParams, Decoded, DEFAULT_BEAM_WIDTH};
use htrlex_core::emissions::{self, EmissionMatrix, NoiseParams};
use htrlex_core::layout::{self, BBox};
use htrlex_core::lexicon::{BoxRange, Lexicon};
use htrlex_core::metrics::{self, EvalPair};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(frozen, name = "Alphabet", module = "htrlex")]
struct PyAlphabet {
    inner: Arc<Alphabet>,
}

#[pymethods]
impl PyAlphabet {
    /// Non-blank symbols in column order, plus the collation order of the
    /// lowercase ones. Defaults to the symbol order.
    #[new]
    #[pyo3(signature = (symbols, collation = None))]
    fn new(symbols: &str, collation: Option<&str>) -> PyResult<Self> {
        let s: Vec<char> = symbols.chars().collect();
        let c: Vec<char> = collation.map_or_else(|| s.clone(), |c| c.chars().collect());
        Ok(Self {
            inner: Arc::new(Alphabet::new(&s, &c).map_err(err)?),
        })
    }

    #[staticmethod]
    fn polish() -> Self {
        Self {
            inner: Arc::new(Alphabet::polish()),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(Alphabet::load(&path).map_err(err)?),
        })
    }

    /// Blank marker followed by the symbols, one per class.
    fn symbols(&self) -> String {
        std::iter::once(htrlex_core::alphabet::BLANK_MARKER)
            .chain(self.inner.symbols().iter().copied())
            .collect()
    }

    fn diacritics(&self) -> String {
        self.inner.diacritics().into_iter().collect()
    }

    fn fold(&self, word: &str) -> String {
        self.inner.fold(word)
    }

    /// -1, 0 or 1 in collation order.
    fn compare(&self, a: &str, b: &str) -> PyResult<i8> {
        Ok(match self.inner.compare(a, b).map_err(err)? {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        })
    }

    fn in_range(&self, word: &str, lo: &str, hi: &str) -> PyResult<bool> {
        self.inner.in_range(word, lo, hi).map_err(err)
    }

    fn sort(&self, words: Vec<String>) -> PyResult<Vec<String>> {
        let mut keyed = words
            .into_iter()
            .map(|w| Ok((self.inner.collation_key(&w).map_err(err)?, w)))
            .collect::<PyResult<Vec<_>>>()?;
        keyed.sort();
        Ok(keyed.into_iter().map(|(_, w)| w).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Alphabet({} classes)", self.inner.len())
    }
}

#[pyclass(frozen, name = "EmissionMatrix", module = "htrlex")]
struct PyEmissionMatrix {
    inner: EmissionMatrix,
}

#[pymethods]
impl PyEmissionMatrix {
    /// Rows of per-class probabilities, blank first.
    #[new]
    fn new(alphabet: PyRef<'_, PyAlphabet>, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let m = EmissionMatrix::for_alphabet(&alphabet.inner, rows).map_err(err)?;
        m.validate().map_err(err)?;
        Ok(Self { inner: m })
    }

    #[staticmethod]
    fn from_emat(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: EmissionMatrix::parse_emat(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: EmissionMatrix::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    fn to_emat(&self) -> String {
        self.inner.to_emat_string()
    }

    #[getter]
    fn frames(&self) -> usize {
        self.inner.frames()
    }

    #[getter]
    fn classes(&self) -> usize {
        self.inner.classes()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(<[f64]>::to_vec).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "EmissionMatrix(frames={}, classes={})",
            self.inner.frames(),
            self.inner.classes()
        )
    }
}

#[pyclass(frozen, name = "Lexicon", module = "htrlex")]
struct PyLexicon {
    inner: Lexicon,
}

#[pymethods]
impl PyLexicon {
    #[new]
    fn new(words: Vec<String>, alphabet: PyRef<'_, PyAlphabet>) -> PyResult<Self> {
        Ok(Self {
            inner: Lexicon::build(&words, Arc::clone(&alphabet.inner)).map_err(err)?,
        })
    }

    /// Folded words in collation order.
    fn words(&self) -> Vec<String> {
        self.inner.words().to_vec()
    }

    fn completions(&self, prefix: &str) -> Vec<String> {
        self.inner
            .completions(prefix)
            .into_iter()
            .map(str::to_owned)
            .collect()
    }

    fn restrict_range(&self, lo: &str, hi: &str) -> PyResult<Self> {
        Ok(Self {
            inner: self
                .inner
                .restrict_range(&BoxRange::new("", lo, hi))
                .map_err(err)?,
        })
    }

    /// `(word, distance)` of the closest word, or `None` past `max_dist`.
    #[pyo3(signature = (query, max_dist = None))]
    fn nearest_match(
        &self,
        query: &str,
        max_dist: Option<usize>,
    ) -> PyResult<Option<(String, usize)>> {
        Ok(self
            .inner
            .nearest_match(query, max_dist)
            .map_err(err)?
            .map(|m| (m.word, m.distance)))
    }

    fn __contains__(&self, word: &str) -> bool {
        self.inner.contains(word)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Lexicon({} words)", self.inner.len())
    }
}

fn decoded(d: Decoded) -> (String, f64) {
    (d.label, d.score)
}

/// Emission matrix whose canonical path spells `label`, with seeded noise.
#[pyfunction]
#[pyo3(signature = (label, alphabet, epsilon = 0.0, frames_per_char = 3, confusion_boost = 5.0, seed = 0))]
fn synthesize(
    label: &str,
    alphabet: PyRef<'_, PyAlphabet>,
    epsilon: f64,
    frames_per_char: usize,
    confusion_boost: f64,
    seed: u64,
) -> PyResult<PyEmissionMatrix> {
    let params = NoiseParams {
        epsilon,
        frames_per_char,
        confusion_boost,
        seed,
    };
    Ok(PyEmissionMatrix {
        inner: emissions::synthesize_emissions(label, &alphabet.inner, &params).map_err(err)?,
    })
}

/// `(label, log score)` of the greedy argmax path.
#[pyfunction]
fn best_path(
    m: PyRef<'_, PyEmissionMatrix>,
    alphabet: PyRef<'_, PyAlphabet>,
) -> PyResult<(String, f64)> {
    decode::best_path(&m.inner, &alphabet.inner)
        .map(decoded)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (m, alphabet, width = DEFAULT_BEAM_WIDTH))]
fn beam_search(
    py: Python<'_>,
    m: PyRef<'_, PyEmissionMatrix>,
    alphabet: PyRef<'_, PyAlphabet>,
    width: usize,
) -> PyResult<(String, f64)> {
    let (m, a) = (&m.inner, &alphabet.inner);
    py.detach(|| decode::beam_search(m, a, &BeamParams::new(width)))
        .map(decoded)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (m, alphabet, lexicon, width = DEFAULT_BEAM_WIDTH))]
fn word_beam_search(
    py: Python<'_>,
    m: PyRef<'_, PyEmissionMatrix>,
    alphabet: PyRef<'_, PyAlphabet>,
    lexicon: PyRef<'_, PyLexicon>,
    width: usize,
) -> PyResult<(String, f64)> {
    let (m, a, l) = (&m.inner, &alphabet.inner, &lexicon.inner);
    py.detach(|| decode::word_beam_search(m, a, l, &BeamParams::new(width)))
        .map(decoded)
        .map_err(err)
}

/// Word beam search over the lexicon words in `[lo, hi]`.
#[pyfunction]
#[pyo3(signature = (m, alphabet, lexicon, lo, hi, width = DEFAULT_BEAM_WIDTH))]
fn constrained_wbs(
    py: Python<'_>,
    m: PyRef<'_, PyEmissionMatrix>,
    alphabet: PyRef<'_, PyAlphabet>,
    lexicon: PyRef<'_, PyLexicon>,
    lo: &str,
    hi: &str,
    width: usize,
) -> PyResult<(String, f64)> {
    let (m, a, l) = (&m.inner, &alphabet.inner, &lexicon.inner);
    let range = BoxRange::new("", lo, hi);
    py.detach(|| decode::constrained_wbs(m, a, l, &range, &BeamParams::new(width)))
        .map(decoded)
        .map_err(err)
}

#[pyfunction]
fn ctc_label_probability(
    m: PyRef<'_, PyEmissionMatrix>,
    label: &str,
    alphabet: PyRef<'_, PyAlphabet>,
) -> PyResult<f64> {
    decode::ctc_label_probability(&m.inner, label, &alphabet.inner).map_err(err)
}

#[pyfunction]
fn levenshtein(a: &str, b: &str) -> usize {
    metrics::levenshtein(a, b)
}

#[pyfunction]
fn normalized_edit(gold: &str, pred: &str) -> f64 {
    metrics::normalized_edit(gold, pred)
}

/// Metrics over `(gold, pred)` pairs as a dict.
#[pyfunction]
fn evaluate<'py>(py: Python<'py>, pairs: Vec<(String, String)>) -> PyResult<Bound<'py, PyDict>> {
    let pairs: Vec<EvalPair> = pairs
        .into_iter()
        .map(|(g, p)| EvalPair::new(g, p))
        .collect();
    let r = metrics::evaluate(&pairs).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("n", r.n)?;
    d.set_item("word_accuracy", r.word_accuracy)?;
    d.set_item("avg_norm_edit", r.avg_norm_edit)?;
    d.set_item("avg_edit", r.avg_edit)?;
    d.set_item("avg_edit_misclassified", r.avg_edit_misclassified)?;
    d.set_item("avg_gold_length", r.avg_gold_length)?;
    Ok(d)
}

type Rect = (f64, f64, f64, f64);

fn bbox((x, y, w, h): Rect) -> BBox {
    BBox::new(x, y, w, h)
}

/// Boxes are `(x, y, w, h)` tuples.
#[pyfunction]
fn iou(a: Rect, b: Rect) -> f64 {
    layout::iou(&bbox(a), &bbox(b))
}

#[pyfunction]
#[pyo3(signature = (boxes, strip_height = layout::DEFAULT_STRIP_HEIGHT, row_tolerance = layout::DEFAULT_ROW_TOLERANCE))]
fn select_index_box(boxes: Vec<Rect>, strip_height: f64, row_tolerance: f64) -> Option<Rect> {
    let boxes: Vec<BBox> = boxes.into_iter().map(bbox).collect();
    layout::select_index_box(&boxes, strip_height, row_tolerance).map(|b| (b.x, b.y, b.w, b.h))
}

#[pymodule]
fn htrlex(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAlphabet>()?;
    m.add_class::<PyEmissionMatrix>()?;
    m.add_class::<PyLexicon>()?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(best_path, m)?)?;
    m.add_function(wrap_pyfunction!(beam_search, m)?)?;
    m.add_function(wrap_pyfunction!(word_beam_search, m)?)?;
    m.add_function(wrap_pyfunction!(constrained_wbs, m)?)?;
    m.add_function(wrap_pyfunction!(ctc_label_probability, m)?)?;
    m.add_function(wrap_pyfunction!(levenshtein, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_edit, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(select_index_box, m)?)?;
    Ok(())
}
