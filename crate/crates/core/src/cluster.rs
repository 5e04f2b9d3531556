//! Density-based clustering of candidate planes.
//!
//! Planes live in the quotient of `S^2 x R` by `(n, d) ~ (-n, -d)`. The
//! distance between two planes is the smaller of the two product distances
//! (angle / angle_scale + |offset gap| / offset_scale) over both sign
//! choices, which is a pseudometric on that quotient. Neighbour lists are
//! kept in candidate-index order so border assignment is reproducible.

use std::collections::VecDeque;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Mat3, Plane, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePlane {
    pub plane: Plane,
    pub weight: f64,
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneCluster {
    pub center: Plane,
    /// Indices into the candidate list, ascending.
    pub members: Vec<usize>,
    pub support: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub eps: f64,
    pub min_points: usize,
    /// Radians.
    pub angle_scale: f64,
    /// Scene units.
    pub offset_scale: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            eps: 1.0,
            min_points: 20,
            angle_scale: 5f64.to_radians(),
            offset_scale: 0.02,
        }
    }
}

impl ClusterConfig {
    /// Defaults with the offset scale set to 2% of the scene diameter.
    pub fn for_diameter(diameter: f64) -> Self {
        Self {
            offset_scale: 0.02 * diameter,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.angle_scale > 0.0 && self.offset_scale > 0.0) || self.min_points == 0 {
            return Err(Error::InvalidInput(
                "cluster eps and scales must be positive, min_points at least 1".into(),
            ));
        }
        Ok(())
    }
}

pub fn plane_distance(a: &Plane, b: &Plane, angle_scale: f64, offset_scale: f64) -> f64 {
    let (na, nb) = (a.normal(), b.normal());
    let angle = |x: &Vec3, y: &Vec3| x.cross(y).norm().atan2(x.dot(y));
    let same = angle(&na, &nb) / angle_scale + (a.offset() - b.offset()).abs() / offset_scale;
    let opposite = angle(&na, &-nb) / angle_scale + (a.offset() + b.offset()).abs() / offset_scale;
    same.min(opposite)
}

fn neighbourhoods(candidates: &[CandidatePlane], config: &ClusterConfig) -> Vec<Vec<usize>> {
    let within = |i: usize| -> Vec<usize> {
        let a = &candidates[i].plane;
        (0..candidates.len())
            .filter(|&j| plane_distance(a, &candidates[j].plane, config.angle_scale, config.offset_scale) <= config.eps)
            .collect()
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..candidates.len()).into_par_iter().map(within).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..candidates.len()).map(within).collect()
    }
}

/// DBSCAN over `plane_distance`. Noise is dropped; clusters come back by
/// descending support.
pub fn cluster_planes(candidates: &[CandidatePlane], config: &ClusterConfig) -> Result<Vec<PlaneCluster>> {
    config.validate()?;
    if let Some(k) = candidates.iter().position(|c| !(c.weight > 0.0 && c.weight.is_finite())) {
        return Err(Error::InvalidInput(format!("candidate {k} has non-positive weight")));
    }
    if candidates.is_empty() {
        return Ok(Vec::new());
    }

    let neighbours = neighbourhoods(candidates, config);
    let is_core = |i: usize| neighbours[i].len() >= config.min_points;
    let mut label: Vec<Option<usize>> = vec![None; candidates.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for seed in 0..candidates.len() {
        if label[seed].is_some() || !is_core(seed) {
            continue;
        }
        let id = groups.len();
        let mut members = Vec::new();
        let mut queue = VecDeque::from([seed]);
        label[seed] = Some(id);
        while let Some(i) = queue.pop_front() {
            members.push(i);
            if !is_core(i) {
                continue;
            }
            for &j in &neighbours[i] {
                if label[j].is_none() {
                    label[j] = Some(id);
                    queue.push_back(j);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }

    let mut clusters: Vec<PlaneCluster> = groups
        .into_iter()
        .map(|members| cluster_center(candidates, members))
        .collect::<Result<_>>()?;
    clusters.sort_by(|a, b| b.support.total_cmp(&a.support).then(a.members[0].cmp(&b.members[0])));
    Ok(clusters)
}

fn cluster_center(candidates: &[CandidatePlane], members: Vec<usize>) -> Result<PlaneCluster> {
    let mut scatter = Mat3::zeros();
    let mut support = 0.0;
    for &i in &members {
        let n = candidates[i].plane.normal();
        scatter += n * n.transpose() * candidates[i].weight;
        support += candidates[i].weight;
    }
    let eig = SymmetricEigen::new(scatter);
    let mut normal: Vec3 = eig.eigenvectors.column(eig.eigenvalues.imax()).into_owned();
    let vote: f64 = members
        .iter()
        .map(|&i| candidates[i].weight * candidates[i].plane.normal().dot(&normal).signum())
        .sum();
    if vote < 0.0 {
        normal = -normal;
    }
    let mut offsets: Vec<(f64, f64)> = members
        .iter()
        .map(|&i| {
            let c = &candidates[i];
            let sign = c.plane.normal().dot(&normal).signum();
            (sign * c.plane.offset(), c.weight)
        })
        .collect();
    let offset = weighted_median(&mut offsets);
    Ok(PlaneCluster {
        center: Plane::new(normal, offset)?.canonical(),
        members,
        support,
    })
}

/// Lower weighted median of `(value, weight)` pairs.
fn weighted_median(values: &mut [(f64, f64)]) -> f64 {
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = values.iter().map(|v| v.1).sum();
    let mut acc = 0.0;
    for &(value, weight) in values.iter() {
        acc += weight;
        if acc >= 0.5 * total {
            return value;
        }
    }
    values.last().map(|v| v.0).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rotation_from_axis_angle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn plane(n: [f64; 3], d: f64) -> Plane {
        Plane::new(Vec3::from(n), d).unwrap()
    }

    fn candidate(p: Plane) -> CandidatePlane {
        CandidatePlane {
            plane: p.canonical(),
            weight: 1.0,
            source_id: String::new(),
        }
    }

    #[test]
    fn distance_examples() {
        let a = plane([1.0, 0.0, 0.0], 0.0);
        assert_eq!(plane_distance(&a, &a, 1.0, 1.0), 0.0);
        let b = plane([0.0, 1.0, 0.0], 0.0);
        assert!((plane_distance(&a, &b, FRAC_PI_2, 1.0) - 1.0).abs() < 1e-15);
        let c = plane([-1.0, 0.0, 0.0], 0.0);
        assert_eq!(plane_distance(&a, &c, 1.0, 1.0), 0.0);
    }

    #[test]
    fn distance_handles_sign_split_near_ties() {
        // nearly equal planes that canonicalise to opposite signs
        let s = 0.5f64.sqrt();
        let a = plane([s + 1e-6, -s, 0.0], 0.5).canonical();
        let b = plane([s - 1e-6, -s, 0.0], 0.5).canonical();
        assert!(a.normal().dot(&b.normal()) < 0.0);
        assert!(plane_distance(&a, &b, 1.0, 1.0) < 1e-5);
    }

    #[test]
    fn identical_candidates_form_one_cluster() {
        let p = plane([0.3, 0.1, 0.9], -1.5).canonical();
        let cands: Vec<_> = (0..10).map(|_| candidate(p)).collect();
        let config = ClusterConfig {
            min_points: 3,
            ..ClusterConfig::default()
        };
        let clusters = cluster_planes(&cands, &config).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].members, (0..10).collect::<Vec<_>>());
        assert!((clusters[0].center.normal() - p.normal()).norm() < 1e-12);
        assert!((clusters[0].center.offset() - p.offset()).abs() < 1e-12);
        assert_eq!(clusters[0].support, 10.0);
    }

    #[test]
    fn distant_candidates_are_noise() {
        let cands: Vec<_> = (0..5)
            .map(|k| candidate(plane([1.0, 0.0, 0.0], 10.0 * k as f64)))
            .collect();
        let config = ClusterConfig {
            min_points: 3,
            ..ClusterConfig::default()
        };
        assert!(cluster_planes(&cands, &config).unwrap().is_empty());
    }

    #[test]
    fn empty_input_and_bad_config() {
        assert!(cluster_planes(&[], &ClusterConfig::default()).unwrap().is_empty());
        let bad = ClusterConfig {
            eps: 0.0,
            ..ClusterConfig::default()
        };
        assert!(cluster_planes(&[], &bad).is_err());
    }

    fn perturbed(truth: &Plane, rng: &mut ChaCha8Rng, max_angle: f64, max_offset: f64) -> Plane {
        let axis = truth.normal().cross(&Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)));
        let rot = rotation_from_axis_angle(&axis, rng.random_range(0.0..max_angle));
        let flip = if rng.random::<bool>() { -1.0 } else { 1.0 };
        Plane::new(rot * truth.normal() * flip, (truth.offset() + rng.random_range(-max_offset..max_offset)) * flip).unwrap()
    }

    #[test]
    fn separates_four_planes() {
        let diameter = 40.0;
        let truths = [
            plane([1.0, 0.0, 0.0], -3.0),
            plane([0.0, 1.0, 0.0], 2.0),
            plane([1.0, 1.0, 0.0], 0.5),
            plane([1.0, -1.0, 0.0], 1.0),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cands = Vec::new();
        for _ in 0..100 {
            for t in &truths {
                cands.push(candidate(perturbed(t, &mut rng, 0.5f64.to_radians(), 0.002 * diameter)));
            }
        }
        let clusters = cluster_planes(&cands, &ClusterConfig::for_diameter(diameter)).unwrap();
        assert_eq!(clusters.len(), 4);
        for t in &truths {
            let c = clusters
                .iter()
                .find(|c| crate::geom::unsigned_angle(&c.center.normal(), &t.normal()) < 1f64.to_radians())
                .expect("cluster for each truth");
            assert!(crate::geom::unsigned_angle(&c.center.normal(), &t.normal()) < 0.2f64.to_radians());
            let t = if t.normal().dot(&c.center.normal()) < 0.0 { t.flipped() } else { *t };
            assert!((c.center.offset() - t.offset()).abs() < 0.001 * diameter);
            assert_eq!(c.members.len(), 100);
        }
    }

    #[test]
    fn shuffling_preserves_clusters() {
        let truths = [plane([1.0, 0.2, 0.0], -1.0), plane([0.0, 0.3, 1.0], 4.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut cands: Vec<CandidatePlane> = (0..60)
            .map(|k| candidate(perturbed(&truths[k % 2], &mut rng, 0.3f64.to_radians(), 0.05)))
            .collect();
        for (k, c) in cands.iter_mut().enumerate() {
            c.weight = 1.0 + (k % 7) as f64;
        }
        let config = ClusterConfig {
            min_points: 5,
            ..ClusterConfig::for_diameter(10.0)
        };
        let base = cluster_planes(&cands, &config).unwrap();
        let mut order: Vec<usize> = (0..cands.len()).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let shuffled: Vec<_> = order.iter().map(|&i| cands[i].clone()).collect();
        let other = cluster_planes(&shuffled, &config).unwrap();
        assert_eq!(base.len(), other.len());
        for (a, b) in base.iter().zip(&other) {
            let mut mapped: Vec<usize> = b.members.iter().map(|&i| order[i]).collect();
            mapped.sort_unstable();
            assert_eq!(a.members, mapped);
            assert!((a.center.normal() - b.center.normal()).norm() < 1e-12);
            assert!((a.center.offset() - b.center.offset()).abs() < 1e-12);
        }
    }

    #[test]
    fn centers_are_close_to_members() {
        let truth = plane([0.2, 1.0, 0.3], 0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cands: Vec<_> = (0..50)
            .map(|_| candidate(perturbed(&truth, &mut rng, 2f64.to_radians(), 0.1)))
            .collect();
        let config = ClusterConfig {
            min_points: 5,
            ..ClusterConfig::for_diameter(10.0)
        };
        for c in cluster_planes(&cands, &config).unwrap() {
            let mean: f64 = c
                .members
                .iter()
                .map(|&i| plane_distance(&c.center, &cands[i].plane, config.angle_scale, config.offset_scale))
                .sum::<f64>()
                / c.members.len() as f64;
            assert!(mean <= config.eps);
        }
    }

    fn arb_plane() -> impl Strategy<Value = Plane> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -5.0..5.0f64)
            .prop_filter("non-zero", |(x, y, z, _)| x * x + y * y + z * z > 1e-4)
            .prop_map(|(x, y, z, d)| Plane::new(Vec3::new(x, y, z), d).unwrap().canonical())
    }

    proptest! {
        #[test]
        fn distance_is_a_pseudometric(a in arb_plane(), b in arb_plane(), c in arb_plane(), s in 0.01..2.0f64, o in 0.01..5.0f64) {
            let ab = plane_distance(&a, &b, s, o);
            let ba = plane_distance(&b, &a, s, o);
            let bc = plane_distance(&b, &c, s, o);
            let ac = plane_distance(&a, &c, s, o);
            prop_assert!((ab - ba).abs() <= 1e-9);
            prop_assert!(ac <= ab + bc + 1e-9);
            prop_assert!(plane_distance(&a, &a, s, o) <= 1e-12);
            prop_assert!(plane_distance(&a, &a.flipped(), s, o) <= 1e-12);
        }
    }
}
