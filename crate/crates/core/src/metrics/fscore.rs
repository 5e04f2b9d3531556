//! Visibility-aware F-score: predictions are matched against all
//! ground-truth planes, but a prediction matched to a plane that is not
//! visible in the image is neither rewarded nor penalised.

use nalgebra::DMatrix;

use super::{assign, normal_angle, PlaneSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FScoreCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// Matches within threshold whose ground truth is not visible.
    pub nv: usize,
}

impl FScoreCounts {
    /// `2tp / (2tp + fp + fn)`, or `empty` when all three counts are zero.
    pub fn fscore_or(&self, empty: f64) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            empty
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

pub fn fscore_counts(
    pred: &PlaneSet,
    gt_all: &PlaneSet,
    gt_visible: &PlaneSet,
    threshold: f64,
) -> Result<FScoreCounts> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidInput(format!("threshold must be positive, got {threshold}")));
    }
    let mut visible = vec![false; gt_all.len()];
    for g in gt_visible.planes() {
        let j = gt_all
            .position(g)
            .ok_or_else(|| Error::InvalidInput("visible plane missing from the full ground-truth set".into()))?;
        visible[j] = true;
    }
    let mut costs = DMatrix::zeros(pred.len(), gt_all.len());
    for (i, p) in pred.planes().iter().enumerate() {
        for (j, g) in gt_all.planes().iter().enumerate() {
            costs[(i, j)] = normal_angle(&p.normal(), &g.normal())?;
        }
    }
    let matching = assign(&costs)?;
    let mut counts = FScoreCounts::default();
    for &(_, j, angle) in &matching.pairs {
        if angle < threshold {
            if visible[j] {
                counts.tp += 1;
            } else {
                counts.nv += 1;
            }
        }
    }
    counts.fp = pred.len() - counts.tp - counts.nv;
    counts.fn_ = gt_visible.len() - counts.tp;
    Ok(counts)
}

/// F-score at `threshold` degrees; 1 when there is nothing to find and
/// nothing was predicted.
pub fn fscore(pred: &PlaneSet, gt_all: &PlaneSet, gt_visible: &PlaneSet, threshold: f64) -> Result<f64> {
    Ok(fscore_counts(pred, gt_all, gt_visible, threshold)?.fscore_or(1.0))
}
