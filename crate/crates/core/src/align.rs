//! Least-squares similarity alignment between positionally corresponding
//! point sets, and its action on planes.

use nalgebra::SVD;

use crate::error::{Error, Result};
use crate::geom::{signed_distance_map, Mat3, Plane, PointCloud, PointMap, SignedDistanceMap, Vec3};

/// `T(x) = scale * R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for SimilarityTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(scale: f64, rotation: Mat3, translation: Vec3) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Mat3::identity()).abs().max();
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput("similarity scale must be positive".into()));
        }
        if !(ortho <= 1e-9 && (rotation.determinant() - 1.0).abs() <= 1e-9) {
            return Err(Error::InvalidInput("similarity rotation must be proper".into()));
        }
        Ok(Self {
            scale,
            rotation,
            translation,
        })
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.rotation * x * self.scale + self.translation
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &SimilarityTransform) -> SimilarityTransform {
        SimilarityTransform {
            scale: self.scale * first.scale,
            rotation: self.rotation * first.rotation,
            translation: self.rotation * first.translation * self.scale + self.translation,
        }
    }

    pub fn inverse(&self) -> SimilarityTransform {
        let rt = self.rotation.transpose();
        SimilarityTransform {
            scale: 1.0 / self.scale,
            rotation: rt,
            translation: -(rt * self.translation) / self.scale,
        }
    }
}

/// Image of `plane` under `t`, canonicalised.
pub fn transform_plane(t: &SimilarityTransform, plane: &Plane) -> Plane {
    let normal = t.rotation * plane.normal();
    let offset = t.scale * plane.offset() - normal.dot(&t.translation);
    Plane::new(normal, offset)
        .expect("rotation preserves unit normals")
        .canonical()
}

/// Similarity minimising `sum_k |T(source_k) - target_k|^2` (closed form via
/// the cross-covariance SVD with reflection guard).
pub fn estimate_similarity(source: &PointCloud, target: &PointCloud) -> Result<SimilarityTransform> {
    if source.len() != target.len() {
        return Err(Error::InvalidInput(format!(
            "source has {} points, target {}",
            source.len(),
            target.len()
        )));
    }
    similarity_from_pairs(source.points.iter().zip(&target.points))
}

/// Similarity aligning `source` to `target` over pixels valid in both maps.
pub fn estimate_similarity_maps(source: &PointMap, target: &PointMap) -> Result<SimilarityTransform> {
    if source.width != target.width || source.height != target.height {
        return Err(Error::InvalidInput("point maps differ in size".into()));
    }
    let pairs = (0..source.points.len())
        .filter(|&k| source.valid[k] && target.valid[k])
        .map(|k| (&source.points[k], &target.points[k]));
    similarity_from_pairs(pairs)
}

fn similarity_from_pairs<'a>(pairs: impl Iterator<Item = (&'a Vec3, &'a Vec3)> + Clone) -> Result<SimilarityTransform> {
    let n = pairs.clone().count();
    if n < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 correspondences, got {n}")));
    }
    let nf = n as f64;
    let (mut mu_s, mut mu_t) = (Vec3::zeros(), Vec3::zeros());
    for (s, t) in pairs.clone() {
        mu_s += s;
        mu_t += t;
    }
    mu_s /= nf;
    mu_t /= nf;

    let mut cross = Mat3::zeros();
    let mut source_cov = Mat3::zeros();
    let mut var_s = 0.0;
    for (s, t) in pairs {
        let ds = s - mu_s;
        let dt = t - mu_t;
        cross += dt * ds.transpose();
        source_cov += ds * ds.transpose();
        var_s += ds.norm_squared();
    }
    cross /= nf;
    var_s /= nf;

    let spread = SVD::new(source_cov, false, false).singular_values;
    let mut sv: Vec<f64> = spread.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    if !(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0] {
        return Err(Error::Degenerate("source points are collinear or coincident".into()));
    }

    let svd = SVD::new(cross, true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut signs = Vec3::new(1.0, 1.0, 1.0);
    if (u * v_t).determinant() < 0.0 {
        // flip the weakest singular direction
        signs[svd.singular_values.imin()] = -1.0;
    }
    let rotation = u * Mat3::from_diagonal(&signs) * v_t;
    let scale = svd.singular_values.component_mul(&signs).sum() / var_s;
    let translation = mu_t - rotation * mu_s * scale;
    SimilarityTransform::new(scale, rotation, translation)
}

/// Signed distance map of `predicted` relative to `plane` after carrying
/// the plane from the frame of `reference` into the frame of `predicted`.
pub fn aligned_signed_distance_map(
    reference: &PointMap,
    predicted: &PointMap,
    plane: &Plane,
) -> Result<(SimilarityTransform, Plane, SignedDistanceMap)> {
    let t = estimate_similarity_maps(reference, predicted)?;
    let aligned = transform_plane(&t, plane);
    let sdf = signed_distance_map(predicted, &aligned);
    Ok((t, aligned, sdf))
}
