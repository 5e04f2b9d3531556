//! Browser demo: fit a mirror plane from noisy correspondences, cluster
//! candidate planes, and complete a partial cloud by reflection. Every
//! operation returns a JSON document drawn top-down by `www/demo.js`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use symplane::cluster::{cluster_planes, ClusterConfig};
use symplane::fit::{fit_reflection_plane, RobustFitConfig};
use symplane::metrics::normal_angle;
use symplane::pipeline::{cloud_as_point_map, complete_cloud};
use symplane::synth::{candidate_population, generate_scene, sample_correspondences, GroundTruthScene, SceneSpec, Shape};
use symplane::{Plane, PointCloud};

/// Pairs drawn per fit; the fit itself uses all of them.
const DRAWN_PAIRS: usize = 200;

/// A vertical plane seen from above: the line `point + t * direction`.
#[derive(Debug, Clone, Serialize)]
pub struct Line {
    pub point: [f64; 2],
    pub direction: [f64; 2],
}

impl Line {
    fn of(plane: &Plane) -> Line {
        let n = plane.normal();
        let horizontal = (n.x * n.x + n.y * n.y).max(f64::MIN_POSITIVE);
        let s = -plane.offset() / horizontal;
        Line {
            point: [s * n.x, s * n.y],
            direction: [-n.y, n.x],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SceneView {
    pub points: Vec<[f64; 2]>,
    pub planes: Vec<Line>,
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitView {
    pub scene: SceneView,
    /// `[ax, ay, bx, by]` for a sample of the pairs.
    pub pairs: Vec<[f64; 4]>,
    pub truth: Line,
    pub fitted: Line,
    pub angle_error_deg: f64,
    /// Offset error as a fraction of the scene diameter.
    pub offset_error: f64,
    pub inliers: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateView {
    /// Azimuth of the canonical normal in degrees, `[0, 180)`.
    pub azimuth_deg: f64,
    /// Offset along that normal as a fraction of the diameter.
    pub offset: f64,
    /// Cluster index, or -1 for noise.
    pub cluster: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterView {
    pub scene: SceneView,
    pub candidates: Vec<CandidateView>,
    pub clusters: Vec<Line>,
    pub supports: Vec<f64>,
    pub expected: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompleteView {
    pub scene: SceneView,
    pub input: Vec<[f64; 2]>,
    pub added: Vec<[f64; 2]>,
    /// Largest distance from a completed point to the full cloud, as a
    /// fraction of the diameter.
    pub max_gap: f64,
}

fn build_scene(shape: &str, k: usize, seed: u64) -> Result<GroundTruthScene, String> {
    let shape: Shape = shape.parse().map_err(|e: symplane::Error| e.to_string())?;
    let spec = SceneSpec {
        camera_count: 0,
        surface_samples: 600,
        ..SceneSpec::new(shape, k, seed)
    };
    generate_scene(&spec).map_err(|e| e.to_string())
}

fn top_down(cloud: &PointCloud) -> Vec<[f64; 2]> {
    cloud.points.iter().map(|p| [p.x, p.y]).collect()
}

fn scene_view(scene: &GroundTruthScene) -> SceneView {
    let c = scene.axis_point;
    SceneView {
        points: top_down(&scene.cloud),
        planes: scene.planes.iter().map(Line::of).collect(),
        center: [c.x, c.y],
        radius: 0.6 * scene.spec.diameter,
    }
}

fn aligned_offset_gap(truth: &Plane, other: &Plane) -> f64 {
    let sign = truth.normal().dot(&other.normal()).signum();
    (truth.offset() - sign * other.offset()).abs()
}

/// Fits one plane with RANSAC from `count` noisy pairs mirrored across
/// plane `plane_index`, a fraction of them replaced by random points.
pub fn fit_view(
    shape: &str,
    k: usize,
    plane_index: usize,
    count: usize,
    noise: f64,
    outliers: f64,
    seed: u64,
) -> Result<FitView, String> {
    let scene = build_scene(shape, k, seed)?;
    let pairs = sample_correspondences(&scene, plane_index, count, noise, outliers, seed).map_err(|e| e.to_string())?;
    let report = fit_reflection_plane(&pairs, &RobustFitConfig::with_ransac(seed)).map_err(|e| e.to_string())?;
    let truth = scene.planes[plane_index];
    let step = (pairs.len() / DRAWN_PAIRS).max(1);
    Ok(FitView {
        pairs: pairs.pairs.iter().step_by(step).map(|(a, b)| [a.x, a.y, b.x, b.y]).collect(),
        truth: Line::of(&truth),
        fitted: Line::of(&report.plane),
        angle_error_deg: normal_angle(&truth.normal(), &report.plane.normal()).map_err(|e| e.to_string())?,
        offset_error: aligned_offset_gap(&truth, &report.plane) / scene.spec.diameter,
        inliers: report.inlier_count,
        total: pairs.len(),
        scene: scene_view(&scene),
    })
}

/// Clusters noisy copies of every symmetry plane mixed with random planes.
#[allow(clippy::too_many_arguments)]
pub fn cluster_view(
    shape: &str,
    k: usize,
    per_plane: usize,
    angle_sigma_deg: f64,
    outliers: usize,
    eps: f64,
    min_points: usize,
    seed: u64,
) -> Result<ClusterView, String> {
    let scene = build_scene(shape, k, seed)?;
    let d = scene.spec.diameter;
    let candidates = candidate_population(&scene, per_plane, angle_sigma_deg, 0.005, outliers, seed).map_err(|e| e.to_string())?;
    let config = ClusterConfig {
        eps,
        min_points,
        ..ClusterConfig::for_diameter(d)
    };
    let clusters = cluster_planes(&candidates, &config).map_err(|e| e.to_string())?;
    let mut label = vec![-1i64; candidates.len()];
    for (c, cluster) in clusters.iter().enumerate() {
        for &m in &cluster.members {
            label[m] = c as i64;
        }
    }
    let candidates = candidates
        .iter()
        .zip(&label)
        .map(|(c, &cluster)| {
            // orientation-free coordinates: normal pointing into the upper half-plane of azimuths
            let n = c.plane.normal();
            let mut az = n.y.atan2(n.x).to_degrees();
            let mut offset = c.plane.offset();
            if az < 0.0 {
                az += 180.0;
                offset = -offset;
            }
            if az >= 180.0 {
                az -= 180.0;
                offset = -offset;
            }
            CandidateView {
                azimuth_deg: az,
                offset: offset / d,
                cluster,
            }
        })
        .collect();
    Ok(ClusterView {
        candidates,
        clusters: clusters.iter().map(|c| Line::of(&c.center)).collect(),
        supports: clusters.iter().map(|c| c.support).collect(),
        expected: k,
        scene: scene_view(&scene),
    })
}

/// Keeps the wedge on the non-negative side of the first `used` planes and
/// reflects it back across them.
pub fn complete_view(shape: &str, k: usize, used: usize, closure_depth: usize, seed: u64) -> Result<CompleteView, String> {
    let scene = build_scene(shape, k, seed)?;
    if used == 0 || used > scene.planes.len() {
        return Err(format!("choose between 1 and {} planes", scene.planes.len()));
    }
    let planes = &scene.planes[..used];
    let wedge: Vec<_> = scene
        .cloud
        .points
        .iter()
        .filter(|p| planes.iter().all(|pl| pl.signed_distance(p) >= 0.0))
        .copied()
        .collect();
    let input = PointCloud::new(wedge).map_err(|e| e.to_string())?;
    let completed = complete_cloud(&cloud_as_point_map(&input), planes, closure_depth).map_err(|e| e.to_string())?;
    let max_gap = completed
        .points
        .iter()
        .map(|p| scene.cloud.points.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok(CompleteView {
        input: top_down(&input),
        added: completed.points[input.len()..].iter().map(|p| [p.x, p.y]).collect(),
        max_gap: max_gap / scene.spec.diameter,
        scene: scene_view(&scene),
    })
}

fn to_js<T: Serialize>(value: Result<T, String>) -> Result<String, JsValue> {
    value
        .and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fit(shape: &str, k: usize, plane_index: usize, count: usize, noise: f64, outliers: f64, seed: u32) -> Result<String, JsValue> {
    to_js(fit_view(shape, k, plane_index, count, noise, outliers, seed as u64))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn cluster(
    shape: &str,
    k: usize,
    per_plane: usize,
    angle_sigma_deg: f64,
    outliers: usize,
    eps: f64,
    min_points: usize,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(cluster_view(shape, k, per_plane, angle_sigma_deg, outliers, eps, min_points, seed as u64))
}

#[wasm_bindgen]
pub fn complete(shape: &str, k: usize, used: usize, closure_depth: usize, seed: u32) -> Result<String, JsValue> {
    to_js(complete_view(shape, k, used, closure_depth, seed as u64))
}
