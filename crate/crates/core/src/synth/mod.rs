//! Seeded synthetic scenes with known reflective symmetries: a building
//! surface, a point cloud sampled on it, cameras placed so that mirrored
//! views are exact, and depth maps rendered from those cameras.

mod raycast;
mod samples;
mod shapes;

pub use samples::{
    candidate_population, half_cloud, sample_correspondences, scene_records, synthetic_prediction, tilted_plane,
    SyntheticPrediction,
};
pub use shapes::{all_variants, Shape};

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::align::{transform_plane, SimilarityTransform};
use crate::error::{Error, Result};
use crate::geom::{rotation_from_axis_angle, CameraModel, DepthMap, Mat3, Plane, PointCloud, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub shape: Shape,
    pub symmetry_count: usize,
    /// Largest distance between two points of the building surface.
    pub diameter: f64,
    /// Standard deviation of the point noise as a fraction of the diameter.
    pub noise_sigma: f64,
    /// Fraction of cloud points replaced by uniform points in the bounding box.
    pub outlier_fraction: f64,
    pub seed: u64,
    pub camera_count: usize,
    pub resolution: (usize, usize),
    /// Points drawn on the surface before taking symmetric copies.
    pub surface_samples: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            shape: Shape::BoxFacade,
            symmetry_count: 2,
            diameter: 10.0,
            noise_sigma: 0.0,
            outlier_fraction: 0.0,
            seed: 0,
            camera_count: 8,
            resolution: (96, 72),
            surface_samples: 1000,
        }
    }
}

impl SceneSpec {
    pub fn new(shape: Shape, symmetry_count: usize, seed: u64) -> Self {
        Self {
            shape,
            symmetry_count,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        shapes::building(self.shape, self.symmetry_count)?;
        if !(self.diameter > 0.0 && self.diameter.is_finite()) {
            return Err(Error::InvalidInput("diameter must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidInput("noise_sigma must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(Error::InvalidInput("outlier_fraction must lie in [0, 1)".into()));
        }
        let (w, h) = self.resolution;
        if self.camera_count > 0 && (w < 2 || h < 2) {
            return Err(Error::InvalidInput("resolution must be at least 2x2".into()));
        }
        if self.surface_samples == 0 {
            return Err(Error::InvalidInput("surface_samples must be positive".into()));
        }
        Ok(())
    }
}

/// Two views related by one symmetry plane. `a == b` for a camera lying on
/// the plane (matched against its own mirror image).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewPair {
    pub a: usize,
    pub b: usize,
    pub plane: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthScene {
    pub spec: SceneSpec,
    /// Building surface in world coordinates.
    pub triangles: Vec<[Vec3; 3]>,
    pub cloud: PointCloud,
    /// Canonical symmetry planes, in order of increasing mirror angle.
    pub planes: Vec<Plane>,
    pub image_ids: Vec<String>,
    pub cameras: Vec<CameraModel>,
    pub depths: Vec<DepthMap>,
    pub view_pairs: Vec<ViewPair>,
    /// A point on the line shared by all symmetry planes, at ground level.
    pub axis_point: Vec3,
}

impl GroundTruthScene {
    /// Distance from `p` to the building surface.
    pub fn distance_to_surface(&self, p: &Vec3) -> f64 {
        raycast::distance_to_triangles(p, &self.triangles)
    }
}

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const POSE_STREAM: u64 = 1;
const SURFACE_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;
const CAMERA_STREAM: u64 = 4;

/// Camera that sees the mirror image of what `camera` sees: a world point
/// `x` appears in the result where `plane.reflect(x)` appears in `camera`,
/// with the column mirrored about `cx`.
pub fn mirror_camera(camera: &CameraModel, plane: &Plane) -> Result<CameraModel> {
    let (m, _) = plane.reflection_affine();
    let flip = Mat3::from_diagonal(&Vec3::new(-1.0, 1.0, 1.0));
    let rotation = flip * camera.rotation * m;
    let center = plane.reflect(&camera.center());
    CameraModel::new(camera.fx, camera.fy, camera.cx, camera.cy, rotation, -(rotation * center))
}

fn sample_triangle(rng: &mut ChaCha8Rng, t: &[Vec3; 3]) -> Vec3 {
    let (r1, r2): (f64, f64) = (rng.random(), rng.random());
    let s = r1.sqrt();
    t[0] * (1.0 - s) + t[1] * (s * (1.0 - r2)) + t[2] * (s * r2)
}

pub fn generate_scene(spec: &SceneSpec) -> Result<GroundTruthScene> {
    spec.validate()?;
    let building = shapes::building(spec.shape, spec.symmetry_count)?;
    let local = building.triangles();

    let verts: Vec<Vec3> = local.iter().flat_map(|t| t.iter().copied()).collect();
    let mut local_diameter: f64 = 0.0;
    for a in &verts {
        for b in &verts {
            local_diameter = local_diameter.max((a - b).norm());
        }
    }

    let mut rng = stream(spec.seed, POSE_STREAM);
    let yaw = rng.random_range(0.0..std::f64::consts::TAU);
    let shift = Vec3::new(
        rng.random_range(-1.0..1.0) * spec.diameter,
        rng.random_range(-1.0..1.0) * spec.diameter,
        0.0,
    );
    let pose = SimilarityTransform::new(
        spec.diameter / local_diameter,
        rotation_from_axis_angle(&Vec3::z(), yaw),
        shift,
    )?;

    let triangles: Vec<[Vec3; 3]> = local.iter().map(|t| t.map(|p| pose.apply(&p))).collect();
    let planes: Vec<Plane> = building
        .mirror_normals()
        .into_iter()
        .map(|n| Ok(transform_plane(&pose, &Plane::new(n, 0.0)?).canonical()))
        .collect::<Result<_>>()?;

    // symmetric cloud: surface samples and all their images under the group
    let mut rng = stream(spec.seed, SURFACE_STREAM);
    let areas: Vec<f64> = local.iter().map(|t| (t[1] - t[0]).cross(&(t[2] - t[0])).norm()).collect();
    let pick = WeightedIndex::new(&areas).map_err(|e| Error::Degenerate(e.to_string()))?;
    let base: Vec<Vec3> = (0..spec.surface_samples)
        .map(|_| {
            let t = pick.sample(&mut rng);
            sample_triangle(&mut rng, &local[t])
        })
        .collect();
    let group = building.symmetry_group();
    let mut points: Vec<Vec3> = Vec::with_capacity(base.len() * group.len());
    for g in &group {
        points.extend(base.iter().map(|p| pose.apply(&(g * p))));
    }

    if spec.noise_sigma > 0.0 || spec.outlier_fraction > 0.0 {
        let mut rng = stream(spec.seed, NOISE_STREAM);
        let (lo, hi) = crate::geom::bounds_of(points.iter()).expect("cloud is non-empty");
        let noise = Normal::new(0.0, spec.noise_sigma * spec.diameter).map_err(|e| Error::InvalidInput(e.to_string()))?;
        for p in points.iter_mut() {
            if spec.outlier_fraction > 0.0 && rng.random_bool(spec.outlier_fraction) {
                *p = Vec3::from_fn(|i, _| rng.random_range(lo[i]..=hi[i]));
            } else if spec.noise_sigma > 0.0 {
                *p += Vec3::from_fn(|_, _| noise.sample(&mut rng));
            }
        }
    }
    let cloud = PointCloud::new(points)?;

    let axis_point = pose.apply(&Vec3::zeros());
    let (cameras, view_pairs) = place_cameras(spec, &building, &pose, &planes)?;
    let (w, h) = spec.resolution;
    let render = |c: &CameraModel| raycast::render_depth(&triangles, c, w, h);
    #[cfg(feature = "parallel")]
    let depths: Vec<DepthMap> = {
        use rayon::prelude::*;
        cameras.par_iter().map(render).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let depths: Vec<DepthMap> = cameras.iter().map(render).collect();

    Ok(GroundTruthScene {
        spec: spec.clone(),
        triangles,
        cloud,
        planes,
        image_ids: (0..cameras.len()).map(|i| format!("img{i:03}")).collect(),
        cameras,
        depths,
        view_pairs,
        axis_point,
    })
}

/// Cameras come in pairs tied to one plane, cycling through the planes.
/// The first round puts both cameras of a pair on the plane (each is
/// matched with itself); the next round uses a generic camera and its
/// mirror image; and so on alternately.
fn place_cameras(
    spec: &SceneSpec,
    building: &shapes::Building,
    pose: &SimilarityTransform,
    planes: &[Plane],
) -> Result<(Vec<CameraModel>, Vec<ViewPair>)> {
    let (w, h) = spec.resolution;
    let f = 0.9 * w as f64;
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let target = pose.apply(&Vec3::new(0.0, 0.0, 0.45 * building.apex().z));
    let dist = 1.4 * spec.diameter;
    let up = Vec3::z();
    let k = planes.len();
    let mut rng = stream(spec.seed, CAMERA_STREAM);
    let eye_at = |horizontal: Vec3, rng: &mut ChaCha8Rng| {
        let e = rng.random_range(10f64..30.0).to_radians();
        target + (horizontal * e.cos() + up * e.sin()) * dist
    };

    let mut cameras = Vec::with_capacity(spec.camera_count);
    let mut pairs = Vec::new();
    let mut group = 0;
    while cameras.len() < spec.camera_count {
        let j = group % k;
        let single = cameras.len() + 1 == spec.camera_count;
        if (group / k) % 2 == 0 || single {
            let angle = building.mirror_angles[j];
            let along = pose.rotation * Vec3::new(angle.cos(), angle.sin(), 0.0);
            for side in [1.0, -1.0].into_iter().take(if single { 1 } else { 2 }) {
                let eye = eye_at(along * side, &mut rng);
                let i = cameras.len();
                cameras.push(CameraModel::look_at(eye, target, up, f, f, cx, cy)?);
                pairs.push(ViewPair { a: i, b: i, plane: j });
            }
        } else {
            let az = rng.random_range(0.0..std::f64::consts::TAU);
            let eye = eye_at(Vec3::new(az.cos(), az.sin(), 0.0), &mut rng);
            let a = CameraModel::look_at(eye, target, up, f, f, cx, cy)?;
            let b = mirror_camera(&a, &planes[j])?;
            let i = cameras.len();
            cameras.push(a);
            cameras.push(b);
            pairs.push(ViewPair { a: i, b: i + 1, plane: j });
        }
        group += 1;
    }
    Ok((cameras, pairs))
}
