//! Planes, cameras, clouds and per-pixel maps, plus the elementary
//! operations on them: reflection, signed distance and unprojection.
//!
//! Pixel `(u, v)` is column `u`, row `v`, and addresses the sample location
//! exactly (no half-pixel offset). Cameras map world to camera coordinates
//! as `x_cam = R * x_world + t`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on `|n| = 1` accepted from callers that hand in unit normals.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// A plane `{x : n·x + d = 0}` with unit normal `n` and offset `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    normal: Vec3,
    offset: f64,
}

impl Plane {
    /// Builds a plane from any non-zero normal. The normal is rescaled to
    /// unit length and the offset is rescaled with it, so the point set is
    /// unchanged.
    pub fn new(normal: Vec3, offset: f64) -> Result<Self> {
        let norm = normal.norm();
        if !norm.is_finite() || !offset.is_finite() {
            return Err(Error::InvalidPlane("non-finite parameters".into()));
        }
        if norm <= f64::MIN_POSITIVE {
            return Err(Error::InvalidPlane("zero-length normal".into()));
        }
        Ok(Self {
            normal: normal / norm,
            offset: offset / norm,
        })
    }

    /// Builds a plane from a normal that is already unit length within
    /// [`UNIT_TOLERANCE`]. Normals within 1e-12 of unit length are kept
    /// bit-for-bit, so stored planes read back exactly.
    pub fn from_unit(normal: Vec3, offset: f64) -> Result<Self> {
        let dev = (normal.norm() - 1.0).abs();
        if !(dev <= UNIT_TOLERANCE) {
            return Err(Error::InvalidPlane(format!("normal {normal:?} is not unit length")));
        }
        if dev <= 1e-12 && offset.is_finite() {
            return Ok(Self { normal, offset });
        }
        Self::new(normal, offset)
    }

    /// Plane with the given normal passing through `point`.
    pub fn through_point(normal: Vec3, point: &Vec3) -> Result<Self> {
        let unit = Self::new(normal, 0.0)?;
        Ok(Self {
            normal: unit.normal,
            offset: -unit.normal.dot(point),
        })
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// The same plane with `(n, d)` replaced by `(-n, -d)`.
    pub fn flipped(&self) -> Self {
        Self {
            normal: -self.normal,
            offset: -self.offset,
        }
    }

    /// Canonical representative: the largest-magnitude normal component
    /// (lowest index on ties) is positive.
    pub fn canonical(&self) -> Self {
        if self.normal[dominant_axis(&self.normal)] < 0.0 {
            self.flipped()
        } else {
            *self
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.normal[dominant_axis(&self.normal)] > 0.0
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) + self.offset
    }

    /// Mirror image of `p`: `p - 2 (n·p + d) n`.
    pub fn reflect(&self, p: &Vec3) -> Vec3 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// The reflection as an affine map `x -> A x + b`.
    pub fn reflection_affine(&self) -> (Mat3, Vec3) {
        let a = Mat3::identity() - 2.0 * self.normal * self.normal.transpose();
        (a, -2.0 * self.offset * self.normal)
    }

    /// Foot of the perpendicular from the origin.
    pub fn closest_point_to_origin(&self) -> Vec3 {
        -self.offset * self.normal
    }
}

fn dominant_axis(n: &Vec3) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if n[i].abs() > n[best].abs() {
            best = i;
        }
    }
    best
}

/// Canonical plane for an arbitrary `(normal, offset)` pair.
pub fn canonicalize(normal: Vec3, offset: f64) -> Result<Plane> {
    Ok(Plane::new(normal, offset)?.canonical())
}

pub fn reflect_point(plane: &Plane, p: &Vec3) -> Vec3 {
    plane.reflect(p)
}

pub fn signed_distance(plane: &Plane, p: &Vec3) -> f64 {
    plane.signed_distance(p)
}

pub fn reflect_cloud(plane: &Plane, cloud: &PointCloud) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| plane.reflect(p)).collect(),
    }
}

/// Unordered set of 3D points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if let Some(k) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput(format!("point {k} is not finite")));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Axis-aligned bounds, `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        bounds_of(self.points.iter())
    }

    /// Length of the bounding-box diagonal; within a factor of sqrt(3) of
    /// the true diameter and linear-time.
    pub fn extent(&self) -> f64 {
        self.bounds().map(|(lo, hi)| (hi - lo).norm()).unwrap_or(0.0)
    }

    /// Maximum pairwise distance (quadratic time).
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.max((a - b).norm_squared());
            }
        }
        best.sqrt()
    }
}

pub(crate) fn bounds_of<'a>(mut points: impl Iterator<Item = &'a Vec3>) -> Option<(Vec3, Vec3)> {
    let first = points.next()?;
    let (mut lo, mut hi) = (*first, *first);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    Some((lo, hi))
}

/// Per-pixel 3D points with a validity mask, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMap {
    pub width: usize,
    pub height: usize,
    pub points: Vec<Vec3>,
    pub valid: Vec<bool>,
}

impl PointMap {
    pub fn new(width: usize, height: usize, points: Vec<Vec3>, valid: Vec<bool>) -> Result<Self> {
        let n = width * height;
        if points.len() != n || valid.len() != n {
            return Err(Error::InvalidInput(format!(
                "point map of {width}x{height} needs {n} entries, got {} points and {} flags",
                points.len(),
                valid.len()
            )));
        }
        for (k, (p, &ok)) in points.iter().zip(&valid).enumerate() {
            if ok && !p.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidInput(format!("valid point {k} is not finite")));
            }
        }
        Ok(Self {
            width,
            height,
            points,
            valid,
        })
    }

    /// Point map of a depth map seen through `camera`, in world coordinates.
    pub fn from_depth(depth: &DepthMap, camera: &CameraModel) -> Self {
        let mut points = Vec::with_capacity(depth.depth.len());
        let mut valid = Vec::with_capacity(depth.depth.len());
        for v in 0..depth.height {
            for u in 0..depth.width {
                match depth.get(u, v) {
                    Some(z) => {
                        points.push(camera.unproject_pixel(u as f64, v as f64, z));
                        valid.push(true);
                    }
                    None => {
                        points.push(Vec3::zeros());
                        valid.push(false);
                    }
                }
            }
        }
        Self {
            width: depth.width,
            height: depth.height,
            points,
            valid,
        }
    }

    pub fn get(&self, u: usize, v: usize) -> Option<Vec3> {
        if u >= self.width || v >= self.height {
            return None;
        }
        let k = v * self.width + u;
        self.valid[k].then(|| self.points[k])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&ok| ok).count()
    }

    pub fn valid_points(&self) -> impl Iterator<Item = &Vec3> + '_ {
        self.points
            .iter()
            .zip(&self.valid)
            .filter_map(|(p, &ok)| ok.then_some(p))
    }

    pub fn to_cloud(&self) -> PointCloud {
        PointCloud {
            points: self.valid_points().copied().collect(),
        }
    }
}

/// Per-pixel depth along the camera z axis; NaN (or any non-positive or
/// non-finite value) marks a pixel without depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, depth: Vec<f64>) -> Result<Self> {
        if depth.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "depth map of {width}x{height} needs {} samples, got {}",
                width * height,
                depth.len()
            )));
        }
        Ok(Self {
            width,
            height,
            depth,
        })
    }

    pub fn invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            depth: vec![f64::NAN; width * height],
        }
    }

    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        if u >= self.width || v >= self.height {
            return None;
        }
        let z = self.depth[v * self.width + u];
        (z.is_finite() && z > 0.0).then_some(z)
    }

    pub fn set(&mut self, u: usize, v: usize, z: f64) {
        self.depth[v * self.width + u] = z;
    }

    pub fn valid_count(&self) -> usize {
        self.depth.iter().filter(|z| z.is_finite() && **z > 0.0).count()
    }
}

/// Pinhole camera with world-to-camera extrinsics.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, rotation: Mat3, translation: Vec3) -> Result<Self> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::InvalidInput("focal lengths must be positive".into()));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::InvalidInput("principal point must be finite".into()));
        }
        if !self.translation.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("translation must be finite".into()));
        }
        let r = &self.rotation;
        let ortho = (r.transpose() * r - Mat3::identity()).abs().max();
        if !(ortho <= 1e-9 && (r.determinant() - 1.0).abs() <= 1e-9) {
            return Err(Error::InvalidInput(
                "rotation must be orthonormal with determinant +1".into(),
            ));
        }
        Ok(())
    }

    /// Camera at `eye` looking at `target`, with image rows running along
    /// `-up`.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let forward = target - eye;
        let right = forward.cross(&up);
        if forward.norm() <= f64::EPSILON || right.norm() <= f64::EPSILON * forward.norm() {
            return Err(Error::InvalidInput("degenerate look-at frame".into()));
        }
        let z = forward.normalize();
        let x = right.normalize();
        let y = z.cross(&x);
        let rotation = Mat3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        let translation = -(rotation * eye);
        Self::new(fx, fy, cx, cy, rotation, translation)
    }

    /// Optical center in world coordinates.
    pub fn center(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn world_to_camera(&self, x: &Vec3) -> Vec3 {
        self.rotation * x + self.translation
    }

    pub fn camera_to_world(&self, x: &Vec3) -> Vec3 {
        self.rotation.transpose() * (x - self.translation)
    }

    /// World point of pixel `(u, v)` at depth `z`.
    pub fn unproject_pixel(&self, u: f64, v: f64, z: f64) -> Vec3 {
        let cam = Vec3::new(z * (u - self.cx) / self.fx, z * (v - self.cy) / self.fy, z);
        self.camera_to_world(&cam)
    }

    /// Pixel coordinates and depth of a world point; `None` behind the camera.
    pub fn project(&self, x: &Vec3) -> Option<(f64, f64, f64)> {
        let c = self.world_to_camera(x);
        (c.z > 0.0).then(|| {
            (
                self.fx * c.x / c.z + self.cx,
                self.fy * c.y / c.z + self.cy,
                c.z,
            )
        })
    }

    /// Ray through pixel `(u, v)` as (origin, unit direction) in world frame.
    pub fn pixel_ray(&self, u: f64, v: f64) -> (Vec3, Vec3) {
        let dir_cam = Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        (self.center(), (self.rotation.transpose() * dir_cam).normalize())
    }
}

/// World point seen at integer pixel `pixel = (u, v)` of `depth`.
pub fn unproject(depth: &DepthMap, camera: &CameraModel, pixel: (usize, usize)) -> Result<Vec3> {
    let (u, v) = pixel;
    if u >= depth.width || v >= depth.height {
        return Err(Error::OutOfBounds {
            u,
            v,
            width: depth.width,
            height: depth.height,
        });
    }
    let z = depth.get(u, v).ok_or(Error::NoDepth { u, v })?;
    Ok(camera.unproject_pixel(u as f64, v as f64, z))
}

/// Per-pixel signed distance to a plane, optionally with per-pixel
/// confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedDistanceMap {
    pub width: usize,
    pub height: usize,
    pub sdf: Vec<f64>,
    pub confidence: Option<Vec<f64>>,
    pub valid: Vec<bool>,
}

impl SignedDistanceMap {
    pub fn new(
        width: usize,
        height: usize,
        sdf: Vec<f64>,
        confidence: Option<Vec<f64>>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height;
        if sdf.len() != n || valid.len() != n || confidence.as_ref().is_some_and(|c| c.len() != n) {
            return Err(Error::InvalidInput(format!(
                "signed distance map channels do not match {width}x{height}"
            )));
        }
        for k in 0..n {
            if !valid[k] {
                continue;
            }
            if !sdf[k].is_finite() {
                return Err(Error::InvalidInput(format!("valid sdf entry {k} is not finite")));
            }
            if let Some(c) = &confidence {
                if !(c[k] > 0.0 && c[k].is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "confidence at pixel {k} must be positive"
                    )));
                }
            }
        }
        Ok(Self {
            width,
            height,
            sdf,
            confidence,
            valid,
        })
    }

    pub fn with_confidence(mut self, confidence: Vec<f64>) -> Result<Self> {
        self.confidence = Some(confidence);
        Self::new(self.width, self.height, self.sdf, self.confidence, self.valid)
    }
}

/// Signed distance of every valid point of `map` to `plane`.
pub fn signed_distance_map(map: &PointMap, plane: &Plane) -> SignedDistanceMap {
    let sdf = map
        .points
        .iter()
        .zip(&map.valid)
        .map(|(p, &ok)| if ok { plane.signed_distance(p) } else { 0.0 })
        .collect();
    SignedDistanceMap {
        width: map.width,
        height: map.height,
        sdf,
        confidence: None,
        valid: map.valid.clone(),
    }
}

/// Angle between two directions in radians, ignoring sign.
pub fn unsigned_angle(a: &Vec3, b: &Vec3) -> f64 {
    // atan2 keeps precision for nearly parallel vectors where acos does not
    a.cross(b).norm().atan2(a.dot(b).abs())
}

/// Random rotation helper used by tests and the synthetic generator.
pub fn rotation_from_axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    let unit = nalgebra::Unit::new_normalize(*axis);
    *nalgebra::Rotation3::from_axis_angle(&unit, angle).matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn canonicalize_examples() {
        let p = canonicalize(v(-1.0, 0.0, 0.0), 2.0).unwrap();
        assert_eq!((p.normal(), p.offset()), (v(1.0, 0.0, 0.0), -2.0));

        let p = canonicalize(v(0.0, 0.0, 1.0), 0.0).unwrap();
        assert_eq!((p.normal(), p.offset()), (v(0.0, 0.0, 1.0), 0.0));

        // (n, d) = ((0.6, -0.8, 0), 1) scaled by -1 as a pair
        let p = canonicalize(-v(0.6, -0.8, 0.0), -1.0).unwrap();
        assert_relative_eq!(p.normal(), v(-0.6, 0.8, 0.0), epsilon = 1e-15);
        assert_eq!(p.offset(), -1.0);
        assert_eq!(p, canonicalize(v(0.6, -0.8, 0.0), 1.0).unwrap());
    }

    #[test]
    fn canonicalize_rejects_zero_normal() {
        assert!(matches!(canonicalize(Vec3::zeros(), 1.0), Err(Error::InvalidPlane(_))));
        assert!(matches!(Plane::new(v(f64::NAN, 0.0, 1.0), 0.0), Err(Error::InvalidPlane(_))));
    }

    #[test]
    fn canonical_ties_use_lowest_index() {
        let s = 0.5f64.sqrt();
        let a = canonicalize(v(-s, s, 0.0), 0.3).unwrap();
        let b = canonicalize(v(s, -s, 0.0), -0.3).unwrap();
        assert_eq!(a, b);
        assert!(a.normal().x > 0.0);
    }

    #[test]
    fn plane_new_rescales_offset() {
        let p = Plane::new(v(0.0, 0.0, 2.0), -4.0).unwrap();
        assert_eq!(p.offset(), -2.0);
        assert_eq!(p.signed_distance(&v(5.0, 1.0, 2.0)), 0.0);
    }

    #[test]
    fn reflect_point_examples() {
        let p = Plane::new(v(1.0, 0.0, 0.0), 0.0).unwrap();
        assert_eq!(reflect_point(&p, &v(2.0, 1.0, 1.0)), v(-2.0, 1.0, 1.0));
        let p = Plane::new(v(0.0, 1.0, 0.0), -3.0).unwrap();
        assert_eq!(reflect_point(&p, &v(5.0, 3.0, 7.0)), v(5.0, 3.0, 7.0));
        let p = Plane::new(v(0.0, 0.0, 1.0), 1.0).unwrap();
        assert_eq!(reflect_point(&p, &v(0.0, 0.0, 2.0)), v(0.0, 0.0, -4.0));
    }

    #[test]
    fn signed_distance_examples() {
        let p = Plane::new(v(0.0, 0.0, 1.0), -1.0).unwrap();
        assert_eq!(signed_distance(&p, &v(0.0, 0.0, 3.0)), 2.0);
        let p = Plane::new(v(1.0, 0.0, 0.0), 0.0).unwrap();
        assert_eq!(signed_distance(&p, &v(0.0, 4.0, -2.0)), 0.0);
        let s = 2f64.sqrt() / 2.0;
        let p = Plane::new(v(s, s, 0.0), 1.0).unwrap();
        assert_relative_eq!(signed_distance(&p, &v(1.0, 1.0, 0.0)), 1.0 + 2f64.sqrt(), epsilon = 1e-15);
    }

    fn identity_camera(f: f64, c: f64) -> CameraModel {
        CameraModel::new(f, f, c, c, Mat3::identity(), Vec3::zeros()).unwrap()
    }

    #[test]
    fn unproject_examples() {
        let mut d = DepthMap::invalid(4, 4);
        d.set(0, 0, 5.0);
        assert_eq!(unproject(&d, &identity_camera(1.0, 0.0), (0, 0)).unwrap(), v(0.0, 0.0, 5.0));

        d.set(2, 1, 2.0);
        assert_eq!(unproject(&d, &identity_camera(2.0, 1.0), (2, 1)).unwrap(), v(1.0, 0.0, 2.0));

        let cam = CameraModel::new(1.0, 1.0, 0.0, 0.0, Mat3::identity(), v(0.0, 0.0, -1.0)).unwrap();
        d.set(0, 0, 1.0);
        assert_eq!(unproject(&d, &cam, (0, 0)).unwrap(), v(0.0, 0.0, 2.0));
    }

    #[test]
    fn unproject_errors() {
        let d = DepthMap::invalid(3, 2);
        let cam = identity_camera(1.0, 0.0);
        assert!(matches!(unproject(&d, &cam, (1, 1)), Err(Error::NoDepth { u: 1, v: 1 })));
        assert!(matches!(unproject(&d, &cam, (3, 0)), Err(Error::OutOfBounds { .. })));
        let mut d = d;
        d.set(0, 0, -2.0);
        assert!(matches!(unproject(&d, &cam, (0, 0)), Err(Error::NoDepth { .. })));
    }

    #[test]
    fn camera_validation() {
        let bad = Mat3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(CameraModel::new(1.0, 1.0, 0.0, 0.0, bad, Vec3::zeros()).is_err());
        assert!(CameraModel::new(0.0, 1.0, 0.0, 0.0, Mat3::identity(), Vec3::zeros()).is_err());
    }

    #[test]
    fn look_at_points_forward() {
        let cam = CameraModel::look_at(v(0.0, -5.0, 1.0), v(0.0, 0.0, 1.0), Vec3::z(), 100.0, 100.0, 50.0, 40.0)
            .unwrap();
        let (u, vv, z) = cam.project(&v(0.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(u, 50.0, epsilon = 1e-12);
        assert_relative_eq!(vv, 40.0, epsilon = 1e-12);
        assert_relative_eq!(z, 5.0, epsilon = 1e-12);
        // world up is image up, i.e. decreasing row
        let (_, v_up, _) = cam.project(&v(0.0, 0.0, 2.0)).unwrap();
        assert!(v_up < 40.0);
        assert_relative_eq!(cam.center(), v(0.0, -5.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn reflect_cloud_cases() {
        let plane = Plane::new(v(1.0, 0.0, 0.0), 0.0).unwrap();
        assert!(reflect_cloud(&plane, &PointCloud::default()).is_empty());

        let mut corners = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    corners.push(v(x, y, z));
                }
            }
        }
        let cube = PointCloud::new(corners.clone()).unwrap();
        let mirrored = reflect_cloud(&plane, &cube);
        assert_eq!(mirrored.len(), 8);
        for (a, b) in corners.iter().zip(&mirrored.points) {
            assert_eq!(*b, v(-a.x, a.y, a.z));
        }
    }

    #[test]
    fn reflect_half_box_completes_box() {
        // full box [-1,1]x[0,1]x[0,1] sampled on a lattice; keep x >= 0
        let lattice: Vec<Vec3> = (0..=4)
            .flat_map(|i| (0..=2).flat_map(move |j| (0..=2).map(move |k| (i, j, k))))
            .map(|(i, j, k)| v(-1.0 + 0.5 * i as f64, 0.5 * j as f64, 0.5 * k as f64))
            .collect();
        let half = PointCloud::new(lattice.iter().filter(|p| p.x >= 0.0).copied().collect()).unwrap();
        let plane = Plane::new(v(1.0, 0.0, 0.0), 0.0).unwrap();
        let mut union = half.points.clone();
        union.extend(reflect_cloud(&plane, &half).points);
        let hausdorff = directed_hausdorff(&lattice, &union).max(directed_hausdorff(&union, &lattice));
        assert_eq!(hausdorff, 0.0);
    }

    fn directed_hausdorff(a: &[Vec3], b: &[Vec3]) -> f64 {
        a.iter()
            .map(|p| b.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    #[test]
    fn signed_distance_map_matches_pointwise() {
        let map = PointMap::new(
            2,
            1,
            vec![v(0.0, 0.0, 3.0), v(1.0, 1.0, 1.0)],
            vec![true, false],
        )
        .unwrap();
        let plane = Plane::new(v(0.0, 0.0, 1.0), -1.0).unwrap();
        let sdf = signed_distance_map(&map, &plane);
        assert_eq!(sdf.sdf[0], 2.0);
        assert_eq!(sdf.valid, vec![true, false]);
    }

    #[test]
    fn sdf_map_rejects_bad_confidence() {
        let r = SignedDistanceMap::new(1, 1, vec![0.0], Some(vec![0.0]), vec![true]);
        assert!(r.is_err());
        let r = SignedDistanceMap::new(1, 1, vec![0.0], Some(vec![0.0]), vec![false]);
        assert!(r.is_ok());
    }

    fn arb_vec(scale: f64) -> impl Strategy<Value = Vec3> {
        (-scale..scale, -scale..scale, -scale..scale).prop_map(|(x, y, z)| v(x, y, z))
    }

    fn arb_plane() -> impl Strategy<Value = Plane> {
        (arb_vec(1.0), -10.0..10.0f64)
            .prop_filter("non-zero normal", |(n, _)| n.norm() > 1e-3)
            .prop_map(|(n, d)| Plane::new(n, d).unwrap())
    }

    fn arb_camera() -> impl Strategy<Value = CameraModel> {
        (arb_vec(1.0), 0.0..std::f64::consts::PI, arb_vec(5.0), 50.0..500.0f64, 50.0..500.0f64, 0.0..640.0f64, 0.0..480.0f64)
            .prop_filter("axis", |(a, ..)| a.norm() > 1e-3)
            .prop_map(|(axis, angle, t, fx, fy, cx, cy)| {
                CameraModel::new(fx, fy, cx, cy, rotation_from_axis_angle(&axis, angle), t).unwrap()
            })
    }

    proptest! {
        #[test]
        fn reflection_is_involutive(plane in arb_plane(), p in arb_vec(100.0)) {
            let back = plane.reflect(&plane.reflect(&p));
            prop_assert!((back - p).norm() <= 1e-12 * (1.0 + p.norm() + plane.offset().abs()));
        }

        #[test]
        fn reflection_is_isometry(plane in arb_plane(), a in arb_vec(100.0), b in arb_vec(100.0)) {
            let before = (a - b).norm();
            let after = (plane.reflect(&a) - plane.reflect(&b)).norm();
            prop_assert!((before - after).abs() <= 1e-12 * (1.0 + before + a.norm() + b.norm() + plane.offset().abs()));
        }

        #[test]
        fn reflection_negates_signed_distance(plane in arb_plane(), p in arb_vec(100.0)) {
            let s = plane.signed_distance(&p);
            let r = plane.signed_distance(&plane.reflect(&p));
            prop_assert!((s + r).abs() <= 1e-12 * (1.0 + p.norm() + plane.offset().abs()));
        }

        #[test]
        fn canonical_is_idempotent_and_sign_invariant(plane in arb_plane()) {
            let c = plane.canonical();
            prop_assert_eq!(c, c.canonical());
            prop_assert_eq!(c, plane.flipped().canonical());
            prop_assert!(c.is_canonical());
            prop_assert!((c.normal().norm() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn unproject_then_project_round_trips(cam in arb_camera(), u in 0usize..640, vv in 0usize..480, z in 0.1..50.0f64) {
            let x = cam.unproject_pixel(u as f64, vv as f64, z);
            let (pu, pv, pz) = cam.project(&x).unwrap();
            prop_assert!((pu - u as f64).abs() < 1e-9);
            prop_assert!((pv - vv as f64).abs() < 1e-9);
            prop_assert!((pz - z).abs() < 1e-9 * z);
        }
    }
}
