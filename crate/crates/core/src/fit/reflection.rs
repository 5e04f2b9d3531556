//! Reflection-plane fit: minimise `sum_k |p_i^k - R_{n,d}(p_j^k)|^2` over
//! unit `n` and offset `d`.
//!
//! Expanding the reflection gives, per pair `(a, b)`,
//!
//! ```text
//! |a - R(b)|^2 = |a - b|^2 + 4 (n·a + d)(n·b + d)
//! ```
//!
//! so the optimal offset for a fixed normal is `d = -n·m` with `m` the mean
//! midpoint, and the normal minimises `n^T M n` where `M` is the symmetrised
//! cross-covariance of the centred pair sides. The smallest eigenvector of
//! `M` is therefore the exact minimiser; a damped Gauss-Newton pass on the
//! raw residuals follows it to polish rounding.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FitReport, PointPairSet, RansacConfig, RobustFitConfig};
use crate::error::{Error, Result};
use crate::geom::{Mat3, Plane, Vec3};

/// `|p_i - R(p_j)|` for one pair.
pub fn reflection_residual(plane: &Plane, a: &Vec3, b: &Vec3) -> f64 {
    (a - plane.reflect(b)).norm()
}

/// Sum of squared reflection residuals.
pub fn reflection_objective(pairs: &PointPairSet, plane: &Plane) -> f64 {
    pairs
        .pairs
        .iter()
        .map(|(a, b)| (a - plane.reflect(b)).norm_squared())
        .sum()
}

fn objective_on(pairs: &[(Vec3, Vec3)], idx: &[usize], plane: &Plane) -> f64 {
    idx.iter()
        .map(|&k| {
            let (a, b) = &pairs[k];
            (a - plane.reflect(b)).norm_squared()
        })
        .sum()
}

/// Global minimiser of the reflection objective over the selected pairs.
fn closed_form_on(pairs: &[(Vec3, Vec3)], idx: &[usize]) -> Result<Plane> {
    if idx.is_empty() {
        return Err(Error::InsufficientData("no pairs".into()));
    }
    let mid = idx
        .iter()
        .map(|&k| (pairs[k].0 + pairs[k].1) * 0.5)
        .sum::<Vec3>()
        / idx.len() as f64;
    let mut m = Mat3::zeros();
    for &k in idx {
        let (a, b) = &pairs[k];
        let (a, b) = (a - mid, b - mid);
        m += a * b.transpose();
    }
    let m = (m + m.transpose()) * 0.5;
    if m.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("non-finite pair coordinates".into()));
    }
    let eig = SymmetricEigen::new(m);
    let k = eig.eigenvalues.imin();
    let normal: Vec3 = eig.eigenvectors.column(k).into_owned();
    Plane::through_point(normal, &mid)
}

/// Exact minimiser of the reflection objective over all pairs, without
/// degeneracy checks or refinement.
pub fn closed_form_reflection_plane(pairs: &PointPairSet) -> Result<Plane> {
    let idx: Vec<usize> = (0..pairs.len()).collect();
    Ok(closed_form_on(&pairs.pairs, &idx)?.canonical())
}

fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    let axis = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vec3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let b1 = n.cross(&axis).normalize();
    (b1, n.cross(&b1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub plane: Plane,
    pub iterations: usize,
    /// Objective before the first step and after every accepted step.
    pub objective_trace: Vec<f64>,
}

/// Damped Gauss-Newton on the reflection residuals with the normal moved in
/// a two-parameter tangent chart. Steps that do not lower the objective are
/// halved; refinement stops once no decrease is found, the step norm drops
/// below `step_tolerance`, or `max_iterations` is reached.
pub fn refine_reflection_plane(
    pairs: &PointPairSet,
    init: &Plane,
    max_iterations: usize,
    step_tolerance: f64,
) -> RefineOutcome {
    let idx: Vec<usize> = (0..pairs.len()).collect();
    refine_on(&pairs.pairs, &idx, init, max_iterations, step_tolerance)
}

fn refine_on(
    pairs: &[(Vec3, Vec3)],
    idx: &[usize],
    init: &Plane,
    max_iterations: usize,
    step_tolerance: f64,
) -> RefineOutcome {
    let mut plane = *init;
    let mut current = objective_on(pairs, idx, &plane);
    let mut trace = vec![current];
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let n = plane.normal();
        let d = plane.offset();
        let (b1, b2) = tangent_basis(&n);
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for &k in idx {
            let (a, b) = &pairs[k];
            let t = n.dot(b) + d;
            let r = a - b + n * (2.0 * t);
            let j1 = (n * b.dot(&b1) + b1 * t) * 2.0;
            let j2 = (n * b.dot(&b2) + b2 * t) * 2.0;
            let j3 = n * 2.0;
            let cols = [j1, j2, j3];
            for p in 0..3 {
                jtr[p] += cols[p].dot(&r);
                for q in 0..3 {
                    jtj[(p, q)] += cols[p].dot(&cols[q]);
                }
            }
        }
        let Some(step) = jtj.cholesky().map(|c| -c.solve(&jtr)) else {
            break;
        };
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let delta = step * scale;
            let moved = n + b1 * delta[0] + b2 * delta[1];
            if let Ok(candidate) = Plane::new(moved, (d + delta[2]) * moved.norm()) {
                let value = objective_on(pairs, idx, &candidate);
                if value < current {
                    accepted = Some((candidate, value, delta.norm()));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((candidate, value, step_norm)) = accepted else {
            break;
        };
        plane = candidate;
        current = value;
        trace.push(current);
        if step_norm < step_tolerance {
            break;
        }
    }
    RefineOutcome {
        plane,
        iterations,
        objective_trace: trace,
    }
}

fn rms_on(pairs: &[(Vec3, Vec3)], idx: &[usize], plane: &Plane) -> f64 {
    (objective_on(pairs, idx, plane) / idx.len() as f64).sqrt()
}

/// Fit the reflection plane relating `p_i` to `p_j` across all pairs, or
/// across a RANSAC consensus set when `config.ransac` is set.
pub fn fit_reflection_plane(pairs: &PointPairSet, config: &RobustFitConfig) -> Result<FitReport> {
    pairs.check_finite()?;
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    let extent = pairs.extent();
    let min_separation = config.degeneracy_fraction * extent;
    let usable: Vec<usize> = pairs
        .pairs
        .iter()
        .enumerate()
        .filter(|(_, (a, b))| (a - b).norm() >= min_separation && (a - b).norm() > 0.0)
        .map(|(k, _)| k)
        .collect();
    if usable.is_empty() {
        return Err(Error::Degenerate(
            "every pair is self-symmetric; the plane is undetermined".into(),
        ));
    }
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} pairs carry normal information",
            usable.len()
        )));
    }

    match &config.ransac {
        None => {
            let all: Vec<usize> = (0..pairs.len()).collect();
            fit_subset(&pairs.pairs, &all, config)
        }
        Some(ransac) => fit_ransac(&pairs.pairs, &usable, extent, ransac, config),
    }
}

fn fit_subset(pairs: &[(Vec3, Vec3)], idx: &[usize], config: &RobustFitConfig) -> Result<FitReport> {
    let init = closed_form_on(pairs, idx)?;
    let refined = refine_on(pairs, idx, &init, config.max_iterations, config.step_tolerance);
    let plane = refined.plane.canonical();
    Ok(FitReport {
        plane,
        rms_residual: rms_on(pairs, idx, &plane),
        inlier_count: idx.len(),
        iterations: refined.iterations,
    })
}

fn consensus(pairs: &[(Vec3, Vec3)], plane: &Plane, threshold: f64) -> (Vec<usize>, f64) {
    let mut inliers = Vec::new();
    let mut cost = 0.0;
    for (k, (a, b)) in pairs.iter().enumerate() {
        let r = reflection_residual(plane, a, b);
        if r < threshold {
            inliers.push(k);
            cost += r;
        }
    }
    (inliers, cost)
}

fn fit_ransac(
    pairs: &[(Vec3, Vec3)],
    usable: &[usize],
    extent: f64,
    ransac: &RansacConfig,
    config: &RobustFitConfig,
) -> Result<FitReport> {
    let threshold = ransac.inlier_threshold * extent;
    let mut rng = ChaCha8Rng::seed_from_u64(ransac.seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..ransac.iterations {
        let sample: Vec<usize> = rand::seq::index::sample(&mut rng, usable.len(), 3)
            .into_iter()
            .map(|i| usable[i])
            .collect();
        let Ok(hypothesis) = closed_form_on(pairs, &sample) else {
            continue;
        };
        let (inliers, cost) = consensus(pairs, &hypothesis, threshold);
        let better = match &best {
            None => true,
            Some((b, c)) => inliers.len() > b.len() || (inliers.len() == b.len() && cost < *c),
        };
        if better {
            best = Some((inliers, cost));
        }
    }
    let min_count = ((ransac.min_inlier_fraction * pairs.len() as f64).ceil() as usize).max(3);
    let Some((mut inliers, _)) = best else {
        return Err(Error::InsufficientData("no valid RANSAC hypothesis".into()));
    };
    if inliers.len() < min_count {
        return Err(Error::InsufficientData(format!(
            "consensus of {} pairs is below the minimum of {min_count}",
            inliers.len()
        )));
    }

    // refit on the consensus until the inlier set settles
    let mut report = fit_subset(pairs, &inliers, config)?;
    let mut iterations = report.iterations;
    for _ in 0..10 {
        let (next, _) = consensus(pairs, &report.plane, threshold);
        if next == inliers || next.len() < min_count {
            break;
        }
        inliers = next;
        report = fit_subset(pairs, &inliers, config)?;
        iterations += report.iterations;
    }
    report.iterations = iterations;
    Ok(report)
}
