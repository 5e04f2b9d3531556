//! Dense symmetry error: how far apart two reflections move the points of
//! a cloud, relative to the cloud's largest distance from the reference
//! plane.

use super::PlaneSet;
use crate::error::{Error, Result};
use crate::geom::{Plane, PointCloud};

/// Mean of `|R_pred(p) - R_gt(p)|` over the cloud divided by
/// `max |gt(p)|`.
pub fn dense_error(pred: &Plane, gt: &Plane, cloud: &PointCloud) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::InvalidInput("dense error needs a non-empty cloud".into()));
    }
    let rho = cloud
        .points
        .iter()
        .map(|p| gt.signed_distance(p).abs())
        .fold(0.0, f64::max);
    if rho == 0.0 {
        return Err(Error::Degenerate("cloud lies on the reference plane".into()));
    }
    let total: f64 = cloud
        .points
        .iter()
        .map(|p| (pred.reflect(p) - gt.reflect(p)).norm())
        .sum();
    Ok(total / cloud.len() as f64 / rho)
}

/// Average of the exactness-style and completeness-style aggregations of
/// [`dense_error`].
pub fn dense_error_set(
    pred: &PlaneSet,
    gt_all: &PlaneSet,
    gt_visible: &PlaneSet,
    cloud: &PointCloud,
) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::UndefinedMetric("dense error of an empty prediction set".into()));
    }
    if gt_all.is_empty() {
        return Err(Error::InvalidInput("no ground-truth planes".into()));
    }
    if gt_visible.is_empty() {
        return Err(Error::UndefinedMetric("dense error without visible planes".into()));
    }
    let mut exact = 0.0;
    for p in pred.planes() {
        exact += min_error(gt_all.planes().iter().map(|g| dense_error(p, g, cloud)))?;
    }
    let mut complete = 0.0;
    for g in gt_visible.planes() {
        complete += min_error(pred.planes().iter().map(|p| dense_error(p, g, cloud)))?;
    }
    Ok(0.5 * (exact / pred.len() as f64 + complete / gt_visible.len() as f64))
}

fn min_error(errors: impl Iterator<Item = Result<f64>>) -> Result<f64> {
    errors.fold(Ok(f64::INFINITY), |best, e| Ok(best?.min(e?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
        PointCloud::new((0..n).map(|_| Vec3::from_fn(|_, _| rng.random_range(-2.0..2.0))).collect()).unwrap()
    }

    fn random_plane(rng: &mut ChaCha8Rng) -> Plane {
        Plane::new(Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)), rng.random_range(-0.5..0.5)).unwrap()
    }

    #[test]
    fn zero_for_identical_planes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cloud = random_cloud(&mut rng, 50);
        let p = random_plane(&mut rng);
        assert_eq!(dense_error(&p, &p, &cloud).unwrap(), 0.0);
        assert!(dense_error(&p.flipped(), &p, &cloud).unwrap() < 1e-15);
    }

    #[test]
    fn offset_shift_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let cloud = random_cloud(&mut rng, 100);
            let gt = random_plane(&mut rng);
            let delta = rng.random_range(-0.3..0.3);
            let pred = Plane::new(gt.normal(), gt.offset() + delta).unwrap();
            let rho = cloud.points.iter().map(|p| gt.signed_distance(p).abs()).fold(0.0, f64::max);
            let e = dense_error(&pred, &gt, &cloud).unwrap();
            assert!((e - 2.0 * delta.abs() / rho).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_and_empty() {
        let plane = Plane::new(Vec3::z(), 0.0).unwrap();
        let flat = PointCloud::new(vec![Vec3::new(1.0, 2.0, 0.0), Vec3::new(-1.0, 0.5, 0.0)]).unwrap();
        assert!(matches!(dense_error(&plane, &plane, &flat), Err(Error::Degenerate(_))));
        let empty = PointCloud::new(Vec::new()).unwrap();
        assert!(matches!(dense_error(&plane, &plane, &empty), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn set_version_matches_enumeration_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let cloud = random_cloud(&mut rng, 40);
            let a = PlaneSet::new((0..3).map(|_| random_plane(&mut rng))).unwrap();
            let b = PlaneSet::new((0..2).map(|_| random_plane(&mut rng))).unwrap();
            let d = |p: &Plane, g: &Plane| dense_error(p, g, &cloud).unwrap();
            let exact: f64 = a
                .planes()
                .iter()
                .map(|p| b.planes().iter().map(|g| d(p, g)).fold(f64::INFINITY, f64::min))
                .sum::<f64>()
                / 3.0;
            let complete: f64 = b
                .planes()
                .iter()
                .map(|g| a.planes().iter().map(|p| d(p, g)).fold(f64::INFINITY, f64::min))
                .sum::<f64>()
                / 2.0;
            let got = dense_error_set(&a, &b, &b, &cloud).unwrap();
            assert!((got - 0.5 * (exact + complete)).abs() < 1e-14);
            assert_eq!(dense_error_set(&a, &a, &a, &cloud).unwrap(), 0.0);
        }
    }
}
