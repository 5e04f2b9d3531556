//! Depth rendering by ray casting a triangle soup, and point-to-surface
//! distance.

use crate::geom::{CameraModel, DepthMap, Vec3};

/// Ray parameter of the hit between `origin + t dir` and a triangle.
fn intersect(origin: &Vec3, dir: &Vec3, tri: &[Vec3; 3]) -> Option<f64> {
    const EDGE_SLACK: f64 = 1e-12;
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let a = s.dot(&p) * inv;
    if !(-EDGE_SLACK..=1.0 + EDGE_SLACK).contains(&a) {
        return None;
    }
    let q = s.cross(&e1);
    let b = dir.dot(&q) * inv;
    if b < -EDGE_SLACK || a + b > 1.0 + EDGE_SLACK {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > 1e-9).then_some(t)
}

/// Depth of the nearest surface at every integer pixel; rays that miss
/// are invalid.
pub(crate) fn render_depth(triangles: &[[Vec3; 3]], camera: &CameraModel, width: usize, height: usize) -> DepthMap {
    // in camera coordinates the ray through (u, v) is t * ((u-cx)/fx, (v-cy)/fy, 1),
    // so the hit parameter is the depth itself
    let local: Vec<[Vec3; 3]> = triangles
        .iter()
        .map(|t| t.map(|p| camera.world_to_camera(&p)))
        .collect();
    let origin = Vec3::zeros();
    let mut depth = DepthMap::invalid(width, height);
    for v in 0..height {
        for u in 0..width {
            let dir = Vec3::new(
                (u as f64 - camera.cx) / camera.fx,
                (v as f64 - camera.cy) / camera.fy,
                1.0,
            );
            let nearest = local
                .iter()
                .filter_map(|t| intersect(&origin, &dir, t))
                .fold(f64::INFINITY, f64::min);
            if nearest.is_finite() {
                depth.set(u, v, nearest);
            }
        }
    }
    depth
}

/// Closest point on a triangle to `p`.
fn closest_on_triangle(p: &Vec3, tri: &[Vec3; 3]) -> Vec3 {
    let [a, b, c] = tri;
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

pub(crate) fn distance_to_triangles(p: &Vec3, triangles: &[[Vec3; 3]]) -> f64 {
    triangles
        .iter()
        .map(|t| (closest_on_triangle(p, t) - p).norm())
        .fold(f64::INFINITY, f64::min)
}
