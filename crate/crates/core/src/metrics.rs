//! Word-level evaluation: accuracy, Levenshtein distance and its averages.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("cannot evaluate an empty set of pairs")]
    Empty,
}

/// Gold label and prediction for one card.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPair {
    pub gold: String,
    pub pred: String,
}

impl EvalPair {
    pub fn new(gold: impl Into<String>, pred: impl Into<String>) -> Self {
        Self {
            gold: gold.into(),
            pred: pred.into(),
        }
    }

    pub fn is_correct(&self) -> bool {
        self.gold == self.pred
    }
}

/// Table-shaped metric bundle for one decoder run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub word_accuracy: f64,
    pub avg_norm_edit: f64,
    pub avg_edit: f64,
    /// Absent when every prediction is correct.
    pub avg_edit_misclassified: Option<f64>,
    pub avg_gold_length: f64,
}

/// Edit distance over Unicode scalar values, case-sensitive.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Distance divided by the longer length; 0 for two empty strings.
pub fn normalized_edit(gold: &str, pred: &str) -> f64 {
    let longest = gold.chars().count().max(pred.chars().count());
    if longest == 0 {
        0.0
    } else {
        levenshtein(gold, pred) as f64 / longest as f64
    }
}

pub fn word_accuracy(pairs: &[EvalPair]) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::Empty);
    }
    let correct = pairs.iter().filter(|p| p.is_correct()).count();
    Ok(correct as f64 / pairs.len() as f64)
}

pub fn avg_normalized_edit(pairs: &[EvalPair]) -> Result<f64, MetricsError> {
    mean(
        pairs.iter().map(|p| normalized_edit(&p.gold, &p.pred)),
        pairs.len(),
    )
}

pub fn avg_edit(pairs: &[EvalPair]) -> Result<f64, MetricsError> {
    mean(
        pairs.iter().map(|p| levenshtein(&p.gold, &p.pred) as f64),
        pairs.len(),
    )
}

/// Mean distance over misclassified pairs only; `None` if there are none.
pub fn avg_edit_misclassified(pairs: &[EvalPair]) -> Result<Option<f64>, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::Empty);
    }
    let wrong: Vec<f64> = pairs
        .iter()
        .filter(|p| !p.is_correct())
        .map(|p| levenshtein(&p.gold, &p.pred) as f64)
        .collect();
    if wrong.is_empty() {
        Ok(None)
    } else {
        Ok(Some(wrong.iter().sum::<f64>() / wrong.len() as f64))
    }
}

pub fn evaluate(pairs: &[EvalPair]) -> Result<EvalReport, MetricsError> {
    Ok(EvalReport {
        n: pairs.len(),
        word_accuracy: word_accuracy(pairs)?,
        avg_norm_edit: avg_normalized_edit(pairs)?,
        avg_edit: avg_edit(pairs)?,
        avg_edit_misclassified: avg_edit_misclassified(pairs)?,
        avg_gold_length: mean(
            pairs.iter().map(|p| p.gold.chars().count() as f64),
            pairs.len(),
        )?,
    })
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> Result<f64, MetricsError> {
    if n == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(values.sum::<f64>() / n as f64)
}
