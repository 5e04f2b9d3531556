//! Confidence-weighted signed-distance matching cost between predicted and
//! ground-truth signed distance maps, and the loss over an optimal matching.

use nalgebra::DMatrix;

use super::{assign, Assignment};
use crate::error::{Error, Result};
use crate::geom::SignedDistanceMap;

/// `sum_k c_k |s_pred_k - s_gt_k| - alpha sum_k log c_k` over pixels valid
/// in both maps, with `c` the predicted confidence.
pub fn matching_cost(pred: &SignedDistanceMap, gt: &SignedDistanceMap, alpha: f64) -> Result<f64> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::InvalidInput(format!(
            "map sizes differ: {}x{} vs {}x{}",
            pred.width, pred.height, gt.width, gt.height
        )));
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidInput("alpha must be finite".into()));
    }
    let conf = pred
        .confidence
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("predicted map has no confidence channel".into()))?;
    let mut weighted = 0.0;
    let mut log_conf = 0.0;
    for k in 0..pred.sdf.len() {
        if !(pred.valid[k] && gt.valid[k]) {
            continue;
        }
        let c = conf[k];
        if !(c > 0.0) {
            return Err(Error::InvalidInput(format!("confidence at pixel {k} must be positive")));
        }
        weighted += c * (pred.sdf[k] - gt.sdf[k]).abs();
        log_conf += c.ln();
    }
    Ok(weighted - alpha * log_conf)
}

/// Pairwise costs with predictions as rows and ground truth as columns.
pub fn matching_cost_matrix(
    preds: &[SignedDistanceMap],
    gts: &[SignedDistanceMap],
    alpha: f64,
) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(preds.len(), gts.len());
    for (i, p) in preds.iter().enumerate() {
        for (j, g) in gts.iter().enumerate() {
            m[(i, j)] = matching_cost(p, g, alpha)?;
        }
    }
    Ok(m)
}

/// Mean cost over the matched pairs of `assignment`.
pub fn mean_matched_loss(costs: &DMatrix<f64>, assignment: &Assignment) -> Result<f64> {
    if assignment.pairs.is_empty() {
        return Err(Error::UndefinedMetric("no matched pairs".into()));
    }
    let mut total = 0.0;
    for &(i, j, _) in &assignment.pairs {
        if i >= costs.nrows() || j >= costs.ncols() {
            return Err(Error::InvalidInput(format!("pair ({i}, {j}) outside the cost matrix")));
        }
        total += costs[(i, j)];
    }
    Ok(total / assignment.pairs.len() as f64)
}

/// Optimal matching between predictions and ground truth and its mean cost.
pub fn matching_loss(
    preds: &[SignedDistanceMap],
    gts: &[SignedDistanceMap],
    alpha: f64,
) -> Result<(Assignment, f64)> {
    let costs = matching_cost_matrix(preds, gts, alpha)?;
    let assignment = assign(&costs)?;
    let loss = mean_matched_loss(&costs, &assignment)?;
    Ok((assignment, loss))
}
