//! Index-word box selection from detector output, and IoU scoring.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_STRIP_HEIGHT: f64 = 300.0;
pub const DEFAULT_ROW_TOLERANCE: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("{pred} predicted boxes but {gold} gold boxes")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("no boxes to score")]
    Empty,
}

/// Axis-aligned box in pixels; `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_valid(&self) -> bool {
        self.w > 0.0 && self.h > 0.0 && self.x >= 0.0 && self.y >= 0.0
    }

    fn reading_order(&self, other: &BBox) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then(self.y.total_cmp(&other.y))
            .then(self.w.total_cmp(&other.w))
            .then(self.h.total_cmp(&other.h))
    }
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = ((a.x + a.w).min(b.x + b.w) - a.x.max(b.x)).max(0.0);
    let iy = ((a.y + a.h).min(b.y + b.h) - a.y.max(b.y)).max(0.0);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Picks the index word: among boxes whose top edge lies inside the top
/// `strip_height` pixels, take the topmost row (boxes within `row_tolerance`
/// of the highest top edge) and return its leftmost box.
pub fn select_index_box(boxes: &[BBox], strip_height: f64, row_tolerance: f64) -> Option<BBox> {
    let top = boxes
        .iter()
        .filter(|b| b.y < strip_height)
        .map(|b| b.y)
        .min_by(f64::total_cmp)?;
    boxes
        .iter()
        .filter(|b| b.y < strip_height && b.y <= top + row_tolerance)
        .min_by(|a, b| a.reading_order(b))
        .copied()
}

/// Mean IoU of index-aligned box pairs.
pub fn mean_iou(pred: &[BBox], gold: &[BBox]) -> Result<f64, LayoutError> {
    if pred.len() != gold.len() {
        return Err(LayoutError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    if pred.is_empty() {
        return Err(LayoutError::Empty);
    }
    let total: f64 = pred.iter().zip(gold).map(|(p, g)| iou(p, g)).sum();
    Ok(total / pred.len() as f64)
}
