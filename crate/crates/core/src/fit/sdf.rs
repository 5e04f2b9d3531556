//! Plane fit to `(point, signed distance)` samples:
//! `min sum_k w_k ((n·p_k + d) - s_k)^2` subject to `|n| = 1`.
//!
//! The offset is eliminated in closed form, leaving
//! `min_{|n|=1} n^T A n - 2 b^T n`. Its global minimiser satisfies
//! `(A - lambda I) n = b` with `lambda <= lambda_min(A)`, found by a
//! safeguarded Newton iteration on the secular equation `|n(lambda)| = 1`.

use nalgebra::SymmetricEigen;

use super::{FitReport, SdfSampleSet};
use crate::error::{Error, Result};
use crate::geom::{Mat3, Plane, Vec3};

/// Weighted sum of squared signed-distance residuals.
pub fn sdf_objective(samples: &SdfSampleSet, plane: &Plane) -> f64 {
    samples
        .samples
        .iter()
        .map(|s| s.weight * (plane.signed_distance(&s.point) - s.sdf).powi(2))
        .sum()
}

/// Plane whose signed distances best match the samples. The returned plane
/// keeps the orientation the samples imply, so it is canonical only when
/// that orientation is.
pub fn fit_plane_from_sdf(samples: &SdfSampleSet) -> Result<FitReport> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    if samples.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need at least 4 samples, got {}",
            samples.len()
        )));
    }
    for (k, s) in samples.samples.iter().enumerate() {
        if !(s.weight > 0.0 && s.weight.is_finite()) {
            return Err(Error::InvalidInput(format!("sample {k} has non-positive weight")));
        }
        if !(s.sdf.is_finite() && s.point.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput(format!("sample {k} is not finite")));
        }
    }

    let total: f64 = samples.samples.iter().map(|s| s.weight).sum();
    let p_mean = samples.samples.iter().map(|s| s.point * s.weight).sum::<Vec3>() / total;
    let s_mean = samples.samples.iter().map(|s| s.sdf * s.weight).sum::<f64>() / total;
    let mut a = Mat3::zeros();
    let mut b = Vec3::zeros();
    for s in &samples.samples {
        let dp = s.point - p_mean;
        a += dp * dp.transpose() * s.weight;
        b += dp * ((s.sdf - s_mean) * s.weight);
    }

    let eig = SymmetricEigen::new(a);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let largest = eig.eigenvalues[order[2]];
    if largest <= 0.0 || eig.eigenvalues[order[1]] <= 1e-12 * largest {
        return Err(Error::Degenerate("sample points are collinear or coincident".into()));
    }

    let (normal, iterations) = min_quadratic_on_sphere(&a, &b);
    // not canonicalised: flipping the sign would negate every predicted distance
    let plane = Plane::new(normal, s_mean - normal.dot(&p_mean))?;
    let sq: f64 = samples
        .samples
        .iter()
        .map(|s| (plane.signed_distance(&s.point) - s.sdf).powi(2))
        .sum();
    Ok(FitReport {
        plane,
        rms_residual: (sq / samples.len() as f64).sqrt(),
        inlier_count: samples.len(),
        iterations,
    })
}

/// Global minimiser of `n^T A n - 2 b^T n` over unit `n` for symmetric `A`.
/// Returns the minimiser and the number of secular-equation iterations.
pub fn min_quadratic_on_sphere(a: &Mat3, b: &Vec3) -> (Vec3, usize) {
    let eig = SymmetricEigen::new(*a);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lambda: [f64; 3] = order.map(|i| eig.eigenvalues[i]);
    let basis: [Vec3; 3] = order.map(|i| eig.eigenvectors.column(i).into_owned());
    let coeff: [f64; 3] = basis.map(|q| q.dot(b));

    let scale = lambda[2].abs().max(lambda[0].abs()).max(f64::MIN_POSITIVE);
    let b_norm = b.norm();
    let lowest = lambda[0];
    // eigen-directions sharing the smallest eigenvalue
    let in_bottom = |i: usize| lambda[i] - lowest <= 1e-12 * scale;

    let bottom_coeff: f64 = (0..3).filter(|&i| in_bottom(i)).map(|i| coeff[i].powi(2)).sum::<f64>().sqrt();
    if bottom_coeff <= 1e-14 * b_norm || b_norm == 0.0 {
        // hard case: b has no component along the lowest eigenspace
        let mut x = Vec3::zeros();
        for i in (0..3).filter(|&i| !in_bottom(i)) {
            x += basis[i] * (coeff[i] / (lambda[i] - lowest));
        }
        let x_norm_sq = x.norm_squared();
        if x_norm_sq <= 1.0 {
            let q = oriented(&basis[0]);
            return (x + q * (1.0 - x_norm_sq).sqrt(), 0);
        }
    }

    // easy case: find mu = lowest - lambda > 0 with |x(mu)| = 1, where
    // x(mu)_i = coeff_i / (lambda_i - lowest + mu). |x| decreases in mu and
    // |x(|b|)| <= 1, so the root lies in (0, |b|].
    let gap = lambda.map(|l| l - lowest);
    let x_norm = |mu: f64| -> f64 {
        (0..3)
            .map(|i| (coeff[i] / (gap[i] + mu)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let (mut lo, mut hi) = (0.0f64, b_norm.max(f64::MIN_POSITIVE));
    let mut mu = hi;
    let mut iterations = 0;
    for _ in 0..200 {
        iterations += 1;
        let norm = x_norm(mu);
        // g(mu) = 1/|x| - 1 is increasing and close to linear
        let g = 1.0 / norm - 1.0;
        if g == 0.0 {
            break;
        }
        if g < 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let slope: f64 = (0..3).map(|i| coeff[i].powi(2) / (gap[i] + mu).powi(3)).sum::<f64>() / norm.powi(3);
        let mut next = mu - g / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - mu).abs() <= 4.0 * f64::EPSILON * mu.max(f64::MIN_POSITIVE) || hi - lo <= 4.0 * f64::EPSILON * hi {
            mu = next;
            break;
        }
        mu = next;
    }
    let mut x = Vec3::zeros();
    for i in 0..3 {
        x += basis[i] * (coeff[i] / (gap[i] + mu));
    }
    (x.normalize(), iterations)
}

fn oriented(q: &Vec3) -> Vec3 {
    Plane::new(*q, 0.0).map(|p| p.canonical().normal()).unwrap_or(*q)
}
