//! Derived samples of a synthetic scene: 3D point pairs, pixel
//! correspondence records, candidate-plane populations, partial clouds and
//! stand-ins for per-image network predictions.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{stream, GroundTruthScene};
use crate::cluster::CandidatePlane;
use crate::error::{Error, Result};
use crate::fit::PointPairSet;
use crate::geom::{rotation_from_axis_angle, signed_distance_map, Plane, PointCloud, PointMap, SignedDistanceMap, Vec3};
use crate::io::CorrespondenceRecord;
use crate::metrics::visibility_filter;

fn plane_at(scene: &GroundTruthScene, index: usize) -> Result<&Plane> {
    scene.planes.get(index).ok_or_else(|| {
        Error::InvalidInput(format!("plane index {index} out of range ({} planes)", scene.planes.len()))
    })
}

fn uniform_in(rng: &mut ChaCha8Rng, lo: &Vec3, hi: &Vec3) -> Vec3 {
    Vec3::from_fn(|i, _| rng.random_range(lo[i]..=hi[i]))
}

/// `count` pairs `(p, R(p) + noise)` with `p` drawn from the scene cloud.
/// Each pair is independently replaced, with probability
/// `outlier_fraction`, by two uniform points in the cloud's bounding box.
/// `noise_sigma` is a fraction of the scene diameter.
pub fn sample_correspondences(
    scene: &GroundTruthScene,
    plane_index: usize,
    count: usize,
    noise_sigma: f64,
    outlier_fraction: f64,
    seed: u64,
) -> Result<PointPairSet> {
    let plane = plane_at(scene, plane_index)?;
    if count < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 pairs, asked for {count}")));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) || !(0.0..=1.0).contains(&outlier_fraction) {
        return Err(Error::InvalidInput("noise must be non-negative and outlier fraction in [0, 1]".into()));
    }
    let (lo, hi) = scene.cloud.bounds().ok_or_else(|| Error::InsufficientData("empty cloud".into()))?;
    let noise = Normal::new(0.0, noise_sigma * scene.spec.diameter).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = stream(seed, 0);
    let pairs = (0..count)
        .map(|_| {
            if outlier_fraction > 0.0 && rng.random_bool(outlier_fraction) {
                (uniform_in(&mut rng, &lo, &hi), uniform_in(&mut rng, &lo, &hi))
            } else {
                let p = scene.cloud.points[rng.random_range(0..scene.cloud.len())];
                let q = plane.reflect(&p) + Vec3::from_fn(|_, _| noise.sample(&mut rng));
                (p, q)
            }
        })
        .collect();
    PointPairSet::new(pairs)
}

/// One correspondence record per view pair of the scene with up to
/// `matches` pixel matches each. Matched pixels see mirror-image surface
/// points; a fraction of them is replaced by random pixels of image `b`.
pub fn scene_records(
    scene: &GroundTruthScene,
    matches: usize,
    outlier_fraction: f64,
    seed: u64,
) -> Result<Vec<CorrespondenceRecord>> {
    if !(0.0..=1.0).contains(&outlier_fraction) {
        return Err(Error::InvalidInput("outlier fraction must lie in [0, 1]".into()));
    }
    let mut records = Vec::with_capacity(scene.view_pairs.len());
    for (r, pair) in scene.view_pairs.iter().enumerate() {
        let mut rng = stream(seed, r as u64);
        let (da, db) = (&scene.depths[pair.a], &scene.depths[pair.b]);
        let w = da.width;
        let mut candidates = Vec::new();
        for v in 0..da.height {
            for u in 0..w {
                if da.get(u, v).is_some() && db.get(w - 1 - u, v).is_some() {
                    candidates.push((u, v));
                }
            }
        }
        let valid_b: Vec<(usize, usize)> = (0..db.height)
            .flat_map(|v| (0..db.width).map(move |u| (u, v)))
            .filter(|&(u, v)| db.get(u, v).is_some())
            .collect();
        let mut chosen = sample(&mut rng, candidates.len(), matches.min(candidates.len())).into_vec();
        chosen.sort_unstable();
        let list = chosen
            .into_iter()
            .map(|i| {
                let (u, v) = candidates[i];
                if outlier_fraction > 0.0 && rng.random_bool(outlier_fraction) {
                    let (ub, vb) = valid_b[rng.random_range(0..valid_b.len())];
                    [u as u32, v as u32, (db.width - 1 - ub) as u32, vb as u32]
                } else {
                    // the mirror point sits at column w-1-u of b, i.e. column u of flipped b
                    [u as u32, v as u32, u as u32, v as u32]
                }
            })
            .collect();
        records.push(CorrespondenceRecord {
            image_a: scene.image_ids[pair.a].clone(),
            image_b: scene.image_ids[pair.b].clone(),
            flipped_b: true,
            matches: list,
        });
    }
    Ok(records)
}

/// `plane` rotated by `degrees` about a random axis perpendicular to its
/// normal through `pivot`.
pub fn tilted_plane(plane: &Plane, pivot: &Vec3, degrees: f64, rng: &mut ChaCha8Rng) -> Plane {
    let n = plane.normal();
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = n.cross(&helper).normalize();
    let e2 = n.cross(&e1);
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    let axis = e1 * phi.cos() + e2 * phi.sin();
    let rotated = rotation_from_axis_angle(&axis, degrees.to_radians()) * n;
    let through = pivot - n * plane.signed_distance(pivot);
    Plane::through_point(rotated, &through).expect("rotation keeps the normal unit length")
}

/// Noisy copies of every ground-truth plane plus uniformly random planes
/// through the bounding box. `offset_sigma` is a fraction of the diameter.
pub fn candidate_population(
    scene: &GroundTruthScene,
    per_plane: usize,
    angle_sigma_deg: f64,
    offset_sigma: f64,
    outliers: usize,
    seed: u64,
) -> Result<Vec<CandidatePlane>> {
    if !(angle_sigma_deg >= 0.0 && offset_sigma >= 0.0) {
        return Err(Error::InvalidInput("noise levels must be non-negative".into()));
    }
    let mut rng = stream(seed, 0);
    let angle = Normal::new(0.0, angle_sigma_deg).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let offset = Normal::new(0.0, offset_sigma * scene.spec.diameter).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut out = Vec::new();
    for (j, plane) in scene.planes.iter().enumerate() {
        for i in 0..per_plane {
            let tilted = tilted_plane(plane, &scene.axis_point, angle.sample(&mut rng), &mut rng);
            let shifted = Plane::new(tilted.normal(), tilted.offset() + offset.sample(&mut rng))?;
            out.push(CandidatePlane {
                plane: shifted.canonical(),
                weight: 1.0,
                source_id: format!("plane{j}-{i}"),
            });
        }
    }
    let (lo, hi) = scene.cloud.bounds().ok_or_else(|| Error::InsufficientData("empty cloud".into()))?;
    for i in 0..outliers {
        let normal = loop {
            let v = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            if v.norm() > 0.1 {
                break v;
            }
        };
        let point = uniform_in(&mut rng, &lo, &hi);
        out.push(CandidatePlane {
            plane: Plane::through_point(normal, &point)?.canonical(),
            weight: 1.0,
            source_id: format!("outlier-{i}"),
        });
    }
    Ok(out)
}

/// Cloud points on the non-negative side of one symmetry plane.
pub fn half_cloud(scene: &GroundTruthScene, plane_index: usize) -> Result<PointCloud> {
    let plane = plane_at(scene, plane_index)?;
    PointCloud::new(
        scene
            .cloud
            .points
            .iter()
            .filter(|p| plane.signed_distance(p) >= 0.0)
            .copied()
            .collect(),
    )
}

/// What a symmetry detector would output for one image: a point map and,
/// per instance query, a signed distance map with confidence and a
/// classification logit.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPrediction {
    pub point_map: PointMap,
    pub sdf_maps: Vec<SignedDistanceMap>,
    pub logits: Vec<f64>,
    /// Ground-truth plane behind each query, `None` for empty queries.
    pub sources: Vec<Option<usize>>,
}

/// Exact prediction for one camera: one query per visible plane with
/// confidences in `[0.5, 1]` and logit 4, padded to `queries` with empty
/// queries carrying random values and logit -4.
pub fn synthetic_prediction(
    scene: &GroundTruthScene,
    camera: usize,
    queries: usize,
    seed: u64,
) -> Result<SyntheticPrediction> {
    let (cam, depth) = scene
        .cameras
        .get(camera)
        .zip(scene.depths.get(camera))
        .ok_or_else(|| Error::InvalidInput(format!("camera index {camera} out of range")))?;
    let point_map = PointMap::from_depth(depth, cam);
    let mut rng = stream(seed, camera as u64);
    let n = point_map.width * point_map.height;
    let mut sdf_maps = Vec::new();
    let mut logits = Vec::new();
    let mut sources = Vec::new();
    for (j, plane) in scene.planes.iter().enumerate() {
        if sdf_maps.len() == queries {
            break;
        }
        if !visibility_filter(depth, cam, plane) {
            continue;
        }
        let conf = (0..n).map(|_| rng.random_range(0.5..=1.0)).collect();
        sdf_maps.push(signed_distance_map(&point_map, plane).with_confidence(conf)?);
        logits.push(4.0);
        sources.push(Some(j));
    }
    while sdf_maps.len() < queries {
        let d = scene.spec.diameter;
        let sdf = (0..n).map(|_| rng.random_range(-d..d)).collect();
        let conf = (0..n).map(|_| rng.random_range(0.01..0.1)).collect();
        sdf_maps.push(SignedDistanceMap::new(
            point_map.width,
            point_map.height,
            sdf,
            Some(conf),
            point_map.valid.clone(),
        )?);
        logits.push(-4.0);
        sources.push(None);
    }
    Ok(SyntheticPrediction {
        point_map,
        sdf_maps,
        logits,
        sources,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{fit_reflection_plane, RobustFitConfig};
    use crate::metrics::normal_angle;
    use crate::synth::{generate_scene, SceneSpec, Shape};

    fn scene(shape: Shape, k: usize, cameras: usize) -> GroundTruthScene {
        generate_scene(&SceneSpec {
            camera_count: cameras,
            resolution: (48, 36),
            surface_samples: 300,
            ..SceneSpec::new(shape, k, 5)
        })
        .unwrap()
    }

    #[test]
    fn exact_pairs_recover_the_plane() {
        let s = scene(Shape::OctagonTower, 4, 0);
        for j in 0..4 {
            let pairs = sample_correspondences(&s, j, 200, 0.0, 0.0, j as u64).unwrap();
            let fit = fit_reflection_plane(&pairs, &RobustFitConfig::default()).unwrap();
            assert!(normal_angle(&fit.plane.normal(), &s.planes[j].normal()).unwrap() < 1e-7);
            assert!((fit.plane.offset() - s.planes[j].offset()).abs() < 1e-9 * s.spec.diameter);
        }
    }

    #[test]
    fn outliers_with_ransac() {
        let s = scene(Shape::CrossPlan, 2, 0);
        let count = 500;
        let pairs = sample_correspondences(&s, 1, count, 0.0, 0.3, 9).unwrap();
        let fit = fit_reflection_plane(&pairs, &RobustFitConfig::with_ransac(3)).unwrap();
        assert!(normal_angle(&fit.plane.normal(), &s.planes[1].normal()).unwrap() < 1e-6);
        // 0.7 * 500 = 350, binomial sd about 10
        assert!((fit.inlier_count as f64 - 350.0).abs() < 50.0, "{}", fit.inlier_count);
    }

    #[test]
    fn all_outliers_give_no_reliable_fit() {
        let s = scene(Shape::BoxFacade, 1, 0);
        let pairs = sample_correspondences(&s, 0, 300, 0.0, 1.0, 1).unwrap();
        let mut cfg = RobustFitConfig::with_ransac(1);
        if let Some(r) = cfg.ransac.as_mut() {
            r.min_inlier_fraction = 0.5;
        }
        match fit_reflection_plane(&pairs, &cfg) {
            Err(e) => assert!(e.is_degenerate_data()),
            Ok(fit) => assert!(fit.inlier_count < 150),
        }
    }

    #[test]
    fn correspondence_errors() {
        let s = scene(Shape::BoxFacade, 1, 0);
        assert!(sample_correspondences(&s, 0, 2, 0.0, 0.0, 0).is_err());
        assert!(sample_correspondences(&s, 1, 10, 0.0, 0.0, 0).is_err());
        assert_eq!(
            sample_correspondences(&s, 0, 10, 0.01, 0.1, 4).unwrap(),
            sample_correspondences(&s, 0, 10, 0.01, 0.1, 4).unwrap()
        );
    }

    #[test]
    fn records_cover_every_view_pair() {
        let s = scene(Shape::BoxFacade, 2, 8);
        let records = scene_records(&s, 50, 0.0, 2).unwrap();
        assert_eq!(records.len(), s.view_pairs.len());
        for (r, pair) in records.iter().zip(&s.view_pairs) {
            assert_eq!(r.matches.len(), 50);
            assert_eq!(r.image_a == r.image_b, pair.a == pair.b);
            assert!(r.matches.iter().all(|m| m[0] == m[2] && m[1] == m[3]));
        }
        assert!(records.iter().any(|r| r.image_a != r.image_b));
    }

    #[test]
    fn candidate_population_is_centred_on_truth() {
        let s = scene(Shape::OctagonTower, 8, 0);
        let pop = candidate_population(&s, 30, 0.5, 0.002, 10, 3).unwrap();
        assert_eq!(pop.len(), 8 * 30 + 10);
        for c in pop.iter().take(240) {
            let best = s
                .planes
                .iter()
                .map(|p| normal_angle(&p.normal(), &c.plane.normal()).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 3.0);
        }
    }

    #[test]
    fn tilt_is_exact() {
        let mut rng = stream(1, 1);
        let p = Plane::new(Vec3::new(0.3, -0.2, 0.9), 1.5).unwrap();
        let pivot = Vec3::new(1.0, 2.0, -1.0);
        let t = tilted_plane(&p, &pivot, 3.0, &mut rng);
        assert!((normal_angle(&p.normal(), &t.normal()).unwrap() - 3.0).abs() < 1e-9);
        let foot = pivot - p.normal() * p.signed_distance(&pivot);
        assert!(t.signed_distance(&foot).abs() < 1e-12);
    }

    #[test]
    fn prediction_is_exact_for_visible_planes() {
        let s = generate_scene(&SceneSpec { camera_count: 2, ..SceneSpec::new(Shape::BoxFacade, 2, 5) }).unwrap();
        let pred = synthetic_prediction(&s, 0, 8, 1).unwrap();
        assert_eq!(pred.sdf_maps.len(), 8);
        let visible: Vec<usize> = pred.sources.iter().flatten().copied().collect();
        assert!(!visible.is_empty());
        for (m, src) in pred.sdf_maps.iter().zip(&pred.sources) {
            if let Some(j) = src {
                for k in 0..m.sdf.len() {
                    if m.valid[k] {
                        assert_eq!(m.sdf[k], s.planes[*j].signed_distance(&pred.point_map.points[k]));
                    }
                }
            }
        }
    }

    #[test]
    fn half_cloud_is_one_side() {
        let s = scene(Shape::BoxFacade, 1, 0);
        let half = half_cloud(&s, 0).unwrap();
        assert!(half.len() >= s.cloud.len() / 2);
        assert!(half.points.iter().all(|p| s.planes[0].signed_distance(p) >= 0.0));
    }
}
