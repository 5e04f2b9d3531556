//! Evaluation of predicted symmetry planes against ground truth, plus the
//! signed-distance matching cost used for set prediction.
//!
//! Normal-based metrics are in degrees and ignore normal sign. Exactness
//! compares every prediction with all ground-truth planes; completeness
//! compares only the ground-truth planes visible in the image with the
//! predictions.

mod assign;
mod dense;
mod fscore;
mod loss;
mod visibility;

pub use assign::{assign, Assignment};
pub use dense::{dense_error, dense_error_set};
pub use fscore::{fscore, fscore_counts, FScoreCounts};
pub use loss::{matching_cost, matching_cost_matrix, matching_loss, mean_matched_loss};
pub use visibility::{visibility_counts, visibility_filter, VisibilityCounts, MIN_VALID_PIXELS, MIN_SIDE_FRACTION};

use serde::{Deserialize, Serialize};

use crate::cluster::plane_distance;
use crate::error::{Error, Result};
use crate::geom::{Plane, Vec3};

/// Completeness reported when there are visible planes but no predictions.
pub const EMPTY_PREDICTION_COMPLETENESS_DEG: f64 = 90.0;

const DUPLICATE_TOLERANCE: f64 = 1e-9;

/// Canonical planes without duplicates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlaneSet {
    planes: Vec<Plane>,
}

impl PlaneSet {
    pub fn new(planes: impl IntoIterator<Item = Plane>) -> Result<Self> {
        let mut out: Vec<Plane> = Vec::new();
        for p in planes {
            let p = p.canonical();
            if out.iter().any(|q| plane_distance(q, &p, 1.0, 1.0) < DUPLICATE_TOLERANCE) {
                return Err(Error::InvalidInput("duplicate plane in set".into()));
            }
            out.push(p);
        }
        Ok(Self { planes: out })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    /// Index of `plane` in this set, if present.
    pub fn position(&self, plane: &Plane) -> Option<usize> {
        self.planes
            .iter()
            .position(|q| plane_distance(q, plane, 1.0, 1.0) < DUPLICATE_TOLERANCE)
    }

    /// Sub-set of the planes at `indices`.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.planes[i]))
    }
}

/// Unsigned angle between two unit normals, in degrees.
pub fn normal_angle(a: &Vec3, b: &Vec3) -> Result<f64> {
    for v in [a, b] {
        if !((v.norm() - 1.0).abs() <= 1e-6) {
            return Err(Error::InvalidInput(format!("normal {v:?} is not unit length")));
        }
    }
    // equal to acos(min(1, |a.b|)) for unit vectors, without its loss of
    // precision near zero
    Ok(a.cross(b).norm().atan2(a.dot(b).abs()).to_degrees())
}

fn nearest_angle(from: &Plane, to: &[Plane]) -> Result<f64> {
    to.iter()
        .map(|q| normal_angle(&from.normal(), &q.normal()))
        .try_fold(f64::INFINITY, |best, a| Ok(best.min(a?)))
}

/// Mean over predictions of the angle to the nearest ground-truth normal.
pub fn exactness(pred: &PlaneSet, gt_all: &PlaneSet) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::UndefinedMetric("exactness of an empty prediction set".into()));
    }
    if gt_all.is_empty() {
        return Err(Error::InvalidInput("no ground-truth planes".into()));
    }
    let mut total = 0.0;
    for p in pred.planes() {
        total += nearest_angle(p, gt_all.planes())?;
    }
    Ok(total / pred.len() as f64)
}

/// Mean over visible ground-truth planes of the angle to the nearest
/// prediction; 90 degrees when nothing was predicted.
pub fn completeness(pred: &PlaneSet, gt_visible: &PlaneSet) -> Result<f64> {
    if gt_visible.is_empty() {
        return Err(Error::UndefinedMetric("completeness without visible planes".into()));
    }
    if pred.is_empty() {
        return Ok(EMPTY_PREDICTION_COMPLETENESS_DEG);
    }
    let mut total = 0.0;
    for g in gt_visible.planes() {
        total += nearest_angle(g, pred.planes())?;
    }
    Ok(total / gt_visible.len() as f64)
}

/// Conventions for cases the metric definitions leave open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConventions {
    /// Exactness charged to an image with no predictions.
    pub empty_prediction_exactness_deg: f64,
    /// Completeness charged to an image with visible planes but no predictions.
    pub empty_prediction_completeness_deg: f64,
    /// Dense completeness component for an image with no predictions.
    pub empty_prediction_dense: f64,
    /// F-score when there is nothing to predict and nothing was predicted.
    pub empty_fscore: f64,
}

impl Default for MetricConventions {
    fn default() -> Self {
        Self {
            empty_prediction_exactness_deg: 0.0,
            empty_prediction_completeness_deg: EMPTY_PREDICTION_COMPLETENESS_DEG,
            empty_prediction_dense: 1.0,
            empty_fscore: 1.0,
        }
    }
}

/// Per-image evaluation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub geodesic: f64,
    pub exactness: f64,
    pub completeness: f64,
    /// `(threshold in degrees, F-score)`, ascending threshold.
    pub fscore_at: Vec<(f64, f64)>,
    pub dense_error: f64,
}

impl EvalReport {
    pub fn fscore(&self, threshold: f64) -> Option<f64> {
        self.fscore_at.iter().find(|(t, _)| *t == threshold).map(|(_, f)| *f)
    }
}

/// Thresholds reported by default.
pub const DEFAULT_FSCORE_THRESHOLDS: [f64; 3] = [1.0, 5.0, 15.0];

/// Full per-image evaluation. `gt_visible` must be a subset of `gt_all`.
pub fn evaluate_image(
    pred: &PlaneSet,
    gt_all: &PlaneSet,
    gt_visible: &PlaneSet,
    cloud: &crate::geom::PointCloud,
    thresholds: &[f64],
    conventions: &MetricConventions,
) -> Result<EvalReport> {
    let exact = if pred.is_empty() {
        conventions.empty_prediction_exactness_deg
    } else {
        exactness(pred, gt_all)?
    };
    let complete = if pred.is_empty() {
        conventions.empty_prediction_completeness_deg
    } else {
        completeness(pred, gt_visible)?
    };
    let mut fscore_at = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let counts = fscore_counts(pred, gt_all, gt_visible, t)?;
        fscore_at.push((t, counts.fscore_or(conventions.empty_fscore)));
    }
    fscore_at.sort_by(|a, b| a.0.total_cmp(&b.0));
    let dense = if pred.is_empty() {
        0.5 * conventions.empty_prediction_dense
    } else {
        dense_error_set(pred, gt_all, gt_visible, cloud)?
    };
    Ok(EvalReport {
        geodesic: 0.5 * (exact + complete),
        exactness: exact,
        completeness: complete,
        fscore_at,
        dense_error: dense,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plane(n: [f64; 3], d: f64) -> Plane {
        Plane::new(Vec3::from(n), d).unwrap()
    }

    fn rotated_about_z(deg: f64) -> Plane {
        let r = deg.to_radians();
        plane([r.cos(), r.sin(), 0.0], 0.0)
    }

    #[test]
    fn normal_angle_examples() {
        let a = Vec3::x();
        assert_eq!(normal_angle(&a, &a).unwrap(), 0.0);
        assert_eq!(normal_angle(&a, &-a).unwrap(), 0.0);
        let s = 0.5f64.sqrt();
        assert!((normal_angle(&a, &Vec3::new(s, s, 0.0)).unwrap() - 45.0).abs() < 1e-12);
        assert!(normal_angle(&a, &Vec3::new(2.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn plane_set_rejects_duplicates() {
        let p = plane([0.0, 0.0, 1.0], 1.0);
        assert!(PlaneSet::new([p, p.flipped()]).is_err());
        let set = PlaneSet::new([p, plane([1.0, 0.0, 0.0], 0.0)]).unwrap();
        assert_eq!(set.position(&p.flipped()), Some(0));
    }

    #[test]
    fn exactness_examples() {
        let gt = PlaneSet::new([rotated_about_z(0.0), rotated_about_z(90.0)]).unwrap();
        assert_eq!(exactness(&gt, &gt).unwrap(), 0.0);
        let pred = PlaneSet::new([rotated_about_z(10.0)]).unwrap();
        assert!((exactness(&pred, &gt).unwrap() - 10.0).abs() < 1e-12);
        assert!(matches!(exactness(&PlaneSet::empty(), &gt), Err(Error::UndefinedMetric(_))));
        assert!(matches!(exactness(&pred, &PlaneSet::empty()), Err(Error::InvalidInput(_))));
    }

    fn random_set(rng: &mut ChaCha8Rng, n: usize) -> PlaneSet {
        PlaneSet::new((0..n).map(|_| {
            plane(
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                rng.random_range(-1.0..1.0),
            )
        }))
        .unwrap()
    }

    fn acos_angle(a: &Plane, b: &Plane) -> f64 {
        a.normal().dot(&b.normal()).abs().min(1.0).acos().to_degrees()
    }

    #[test]
    fn exactness_and_completeness_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let pred = random_set(&mut rng, 3);
            let gt = random_set(&mut rng, 2);
            let brute_e: f64 = pred
                .planes()
                .iter()
                .map(|p| gt.planes().iter().map(|g| acos_angle(p, g)).fold(f64::INFINITY, f64::min))
                .sum::<f64>()
                / 3.0;
            let brute_c: f64 = gt
                .planes()
                .iter()
                .map(|g| pred.planes().iter().map(|p| acos_angle(p, g)).fold(f64::INFINITY, f64::min))
                .sum::<f64>()
                / 2.0;
            assert!((exactness(&pred, &gt).unwrap() - brute_e).abs() < 1e-6);
            assert!((completeness(&pred, &gt).unwrap() - brute_c).abs() < 1e-6);
            let e = exactness(&pred, &gt).unwrap();
            assert!((0.0..=90.0).contains(&e));
        }
    }

    #[test]
    fn completeness_examples() {
        let gt = PlaneSet::new([rotated_about_z(0.0), rotated_about_z(90.0)]).unwrap();
        assert_eq!(completeness(&gt, &gt).unwrap(), 0.0);
        let more = PlaneSet::new([rotated_about_z(0.0), rotated_about_z(45.0), rotated_about_z(90.0)]).unwrap();
        assert_eq!(completeness(&more, &gt).unwrap(), 0.0);
        assert_eq!(completeness(&PlaneSet::empty(), &gt).unwrap(), 90.0);
        assert!(matches!(completeness(&gt, &PlaneSet::empty()), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn evaluate_image_perfect_and_empty() {
        let gt = PlaneSet::new([plane([1.0, 0.0, 0.0], 0.0), plane([0.0, 1.0, 0.0], 0.0)]).unwrap();
        let cloud = crate::geom::PointCloud::new(
            (0..5).cartesian_product(0..5).map(|(i, j)| Vec3::new(i as f64 - 2.0, j as f64 - 2.0, 1.0)).collect(),
        )
        .unwrap();
        let r = evaluate_image(&gt, &gt, &gt, &cloud, &DEFAULT_FSCORE_THRESHOLDS, &MetricConventions::default()).unwrap();
        assert_eq!(r.geodesic, 0.0);
        assert_eq!(r.dense_error, 0.0);
        assert_eq!(r.fscore(1.0), Some(1.0));

        let r = evaluate_image(&PlaneSet::empty(), &gt, &gt, &cloud, &[5.0], &MetricConventions::default()).unwrap();
        assert_eq!(r.completeness, 90.0);
        assert_eq!(r.geodesic, 45.0);
        assert_eq!(r.fscore(5.0), Some(0.0));
    }
}
