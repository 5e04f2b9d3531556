//! Decides whether a plane is visible in a depth image: enough valid
//! pixels in the central crop, and enough of them on each side.

use crate::geom::{CameraModel, DepthMap, Plane};

/// Fewer valid pixels in the crop than this and the plane is not visible.
pub const MIN_VALID_PIXELS: usize = 1000;
/// Minimum share of valid pixels required on each side of the plane.
pub const MIN_SIDE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VisibilityCounts {
    pub valid: usize,
    pub positive: usize,
    pub negative: usize,
}

/// Pixel range `[lo, hi)` of the central 80% along an axis of length `len`.
fn central_range(len: usize) -> (usize, usize) {
    let margin = len / 10;
    (margin, len - margin)
}

pub fn visibility_counts(depth: &DepthMap, camera: &CameraModel, plane: &Plane) -> VisibilityCounts {
    let (u0, u1) = central_range(depth.width);
    let (v0, v1) = central_range(depth.height);
    let mut counts = VisibilityCounts::default();
    for v in v0..v1 {
        for u in u0..u1 {
            let Some(z) = depth.get(u, v) else { continue };
            counts.valid += 1;
            let s = plane.signed_distance(&camera.unproject_pixel(u as f64, v as f64, z));
            if s > 0.0 {
                counts.positive += 1;
            } else if s < 0.0 {
                counts.negative += 1;
            }
        }
    }
    counts
}

pub fn visibility_filter(depth: &DepthMap, camera: &CameraModel, plane: &Plane) -> bool {
    let c = visibility_counts(depth, camera, plane);
    if c.valid < MIN_VALID_PIXELS {
        return false;
    }
    let pos = c.positive as f64 / c.valid as f64;
    let neg = c.negative as f64 / c.valid as f64;
    !(pos < MIN_SIDE_FRACTION || neg < MIN_SIDE_FRACTION)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Mat3, Vec3};

    // identity camera: a pixel (u, v) at depth z maps to ((u - cx) z / f, (v - cy) z / f, z)
    fn camera(w: usize, h: usize) -> CameraModel {
        CameraModel::new(100.0, 100.0, (w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0, Mat3::identity(), Vec3::zeros()).unwrap()
    }

    fn flat(w: usize, h: usize) -> DepthMap {
        DepthMap::new(w, h, vec![2.0; w * h]).unwrap()
    }

    fn vertical_through_column(cam: &CameraModel, u: f64) -> Plane {
        // x = (u - cx) * z / f at z = 2 for a fronto-parallel wall
        Plane::new(Vec3::x(), -(u - cam.cx) * 2.0 / cam.fx).unwrap()
    }

    #[test]
    fn crop_is_central_eighty_percent() {
        assert_eq!(central_range(50), (5, 45));
        assert_eq!(central_range(10), (1, 9));
        assert_eq!(central_range(9), (0, 9));
        // pixels outside the crop do not count even when valid
        let (w, h) = (50, 50);
        let mut d = DepthMap::invalid(w, h);
        for u in 0..w {
            d.set(u, 0, 2.0);
            d.set(u, 4, 2.0);
            d.set(u, 45, 2.0);
        }
        for v in 0..h {
            d.set(4, v, 2.0);
            d.set(49, v, 2.0);
        }
        d.set(5, 5, 2.0);
        let cam = camera(w, h);
        assert_eq!(visibility_counts(&d, &cam, &Plane::new(Vec3::z(), 0.0).unwrap()).valid, 1);
    }

    #[test]
    fn half_split_is_visible() {
        let (w, h) = (50, 50);
        let cam = camera(w, h);
        // crop columns 5..45; plane between columns 24 and 25 splits 20/20
        let plane = vertical_through_column(&cam, 24.5);
        let c = visibility_counts(&flat(w, h), &cam, &plane);
        assert_eq!(c, VisibilityCounts { valid: 1600, positive: 800, negative: 800 });
        assert!(visibility_filter(&flat(w, h), &cam, &plane));
    }

    #[test]
    fn one_sided_is_not_visible() {
        let (w, h) = (50, 50);
        let cam = camera(w, h);
        let plane = vertical_through_column(&cam, -3.0);
        assert!(!visibility_filter(&flat(w, h), &cam, &plane));
        assert!(!visibility_filter(&flat(w, h), &cam, &plane.flipped()));
    }

    #[test]
    fn side_fraction_boundary() {
        // 1000 valid pixels in a 40-column crop: 25 rows of 40
        let (w, h) = (50, 50);
        let cam = camera(w, h);
        let mut d = DepthMap::invalid(w, h);
        for v in 5..30 {
            for u in 5..45 {
                d.set(u, v, 2.0);
            }
        }
        // columns 5 and 6 on the negative side: 50 of 1000 pixels, exactly 5%
        let plane = vertical_through_column(&cam, 6.5);
        let c = visibility_counts(&d, &cam, &plane);
        assert_eq!((c.valid, c.negative), (1000, 50));
        assert!(visibility_filter(&d, &cam, &plane));
        // only column 5: 25 of 1000
        assert!(!visibility_filter(&d, &cam, &vertical_through_column(&cam, 5.5)));
    }

    #[test]
    fn too_few_valid_pixels() {
        let (w, h) = (50, 50);
        let cam = camera(w, h);
        let mut d = DepthMap::invalid(w, h);
        let mut placed = 0;
        'fill: for v in 5..45 {
            for u in 5..45 {
                if placed == 999 {
                    break 'fill;
                }
                d.set(u, v, 2.0);
                placed += 1;
            }
        }
        let plane = vertical_through_column(&cam, 24.5);
        assert_eq!(visibility_counts(&d, &cam, &plane).valid, 999);
        assert!(!visibility_filter(&d, &cam, &plane));
        d.set(44, 44, 2.0);
        assert!(visibility_filter(&d, &cam, &plane));
    }

    #[test]
    fn points_on_the_plane_count_for_neither_side() {
        let (w, h) = (50, 50);
        let cam = camera(w, h);
        // the wall itself: every point has zero signed distance
        let wall = Plane::new(Vec3::z(), -2.0).unwrap();
        let c = visibility_counts(&flat(w, h), &cam, &wall);
        assert_eq!((c.positive, c.negative), (0, 0));
        assert!(!visibility_filter(&flat(w, h), &cam, &wall));
    }
}
