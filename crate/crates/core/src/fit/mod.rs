//! Plane estimation from reflective point pairs and from signed-distance
//! samples.

mod reflection;
mod sdf;

pub use reflection::{
    closed_form_reflection_plane, fit_reflection_plane, reflection_objective, reflection_residual,
    refine_reflection_plane, RefineOutcome,
};
pub use sdf::{fit_plane_from_sdf, min_quadratic_on_sphere, sdf_objective};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Plane, Vec3};

/// Corresponding points `(p_i, p_j)` expected to be mirror images.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointPairSet {
    pub pairs: Vec<(Vec3, Vec3)>,
}

impl PointPairSet {
    pub fn new(pairs: Vec<(Vec3, Vec3)>) -> Result<Self> {
        let set = Self { pairs };
        set.check_finite()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn check_finite(&self) -> Result<()> {
        for (k, (a, b)) in self.pairs.iter().enumerate() {
            if !a.iter().chain(b.iter()).all(|c| c.is_finite()) {
                return Err(Error::InvalidInput(format!("pair {k} has non-finite coordinates")));
            }
        }
        Ok(())
    }

    /// Bounding-box diagonal over both sides of every pair.
    pub fn extent(&self) -> f64 {
        crate::geom::bounds_of(self.pairs.iter().flat_map(|(a, b)| [a, b]))
            .map(|(lo, hi)| (hi - lo).norm())
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfSample {
    pub point: Vec3,
    pub sdf: f64,
    pub weight: f64,
}

/// Points with target signed distances and positive weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SdfSampleSet {
    pub samples: Vec<SdfSample>,
}

impl SdfSampleSet {
    /// Unit-weight samples.
    pub fn unweighted(points: impl IntoIterator<Item = (Vec3, f64)>) -> Self {
        Self {
            samples: points
                .into_iter()
                .map(|(point, sdf)| SdfSample {
                    point,
                    sdf,
                    weight: 1.0,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Result of a plane fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub plane: Plane,
    pub rms_residual: f64,
    pub inlier_count: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Per-pair residual threshold as a fraction of the pair-set extent.
    pub inlier_threshold: f64,
    /// Consensus below this fraction of the input is reported as
    /// insufficient data.
    pub min_inlier_fraction: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 256,
            inlier_threshold: 0.01,
            min_inlier_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustFitConfig {
    /// Pairs closer than this fraction of the pair-set extent carry no
    /// normal information.
    pub degeneracy_fraction: f64,
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub ransac: Option<RansacConfig>,
}

impl Default for RobustFitConfig {
    fn default() -> Self {
        Self {
            degeneracy_fraction: 1e-6,
            max_iterations: 50,
            step_tolerance: 1e-12,
            ransac: None,
        }
    }
}

impl RobustFitConfig {
    pub fn with_ransac(seed: u64) -> Self {
        Self {
            ransac: Some(RansacConfig {
                seed,
                ..RansacConfig::default()
            }),
            ..Self::default()
        }
    }
}
