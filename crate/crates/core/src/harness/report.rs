use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::metrics::{evaluate, EvalPair, EvalReport};

use super::{CardRecord, HarnessError, Prediction};

/// Metrics of one decoder run, labelled with the model/decoder name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: String,
    #[serde(flatten)]
    pub report: EvalReport,
}

/// Pairs predictions with manifest gold labels and evaluates them. With
/// `fold`, both sides are case-folded first.
pub fn evaluate_predictions(
    predictions: &[Prediction],
    manifest: &[CardRecord],
    alphabet: &Alphabet,
    fold: bool,
) -> Result<RunReport, HarnessError> {
    let mut gold: HashMap<&str, &str> = HashMap::with_capacity(manifest.len());
    for card in manifest {
        if gold.insert(&card.card_id, &card.gold_label).is_some() {
            return Err(HarnessError::Data(format!(
                "duplicate card_id {:?} in manifest",
                card.card_id
            )));
        }
    }
    let mut seen = HashSet::with_capacity(predictions.len());
    let mut pairs = Vec::with_capacity(predictions.len());
    for p in predictions {
        if !seen.insert(p.card_id.as_str()) {
            return Err(HarnessError::Data(format!(
                "duplicate card_id {:?} in predictions",
                p.card_id
            )));
        }
        let g = gold.get(p.card_id.as_str()).ok_or_else(|| {
            HarnessError::Data(format!("prediction for unknown card {:?}", p.card_id))
        })?;
        pairs.push(if fold {
            EvalPair::new(alphabet.fold(g), alphabet.fold(&p.pred))
        } else {
            EvalPair::new(*g, p.pred.as_str())
        });
    }
    if let Some(missing) = manifest.iter().find(|c| !seen.contains(c.card_id.as_str())) {
        return Err(HarnessError::Data(format!(
            "no prediction for card {:?}",
            missing.card_id
        )));
    }
    let model = predictions
        .first()
        .map(|p| p.decoder.tag().to_string())
        .unwrap_or_default();
    Ok(RunReport {
        model,
        report: evaluate(&pairs)?,
    })
}

/// Plain-text comparison table, one row per run.
pub fn render_table(runs: &[RunReport]) -> String {
    let header = [
        "Model",
        "Word accuracy",
        "Normalised edit distance",
        "Edit distance",
        "Average edit on misclassified",
    ];
    let rows: Vec<[String; 5]> = runs
        .iter()
        .map(|r| {
            [
                r.model.clone(),
                format!("{:.4}", r.report.word_accuracy),
                format!("{:.4}", r.report.avg_norm_edit),
                format!("{:.4}", r.report.avg_edit),
                r.report
                    .avg_edit_misclassified
                    .map_or_else(|| "-".to_string(), |v| format!("{v:.4}")),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{cell:<w$}");
            } else {
                let _ = write!(s, "  {cell:>w$}");
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&mut out, &header.map(String::from));
    let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for row in &rows {
        line(&mut out, row);
    }
    out
}
