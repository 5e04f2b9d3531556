use symplane_web::{cluster_view, complete_view, fit_view};

#[test]
fn fit_recovers_plane_under_outliers() {
    let view = fit_view("octagon-tower", 4, 1, 400, 0.002, 0.3, 3).unwrap();
    assert!(view.angle_error_deg < 0.5);
    assert!(view.offset_error < 0.005);
    assert!(view.inliers < view.total);
    assert!(view.pairs.len() <= 200);
}

#[test]
fn cluster_finds_each_plane() {
    let view = cluster_view("cross-plan", 4, 30, 0.3, 20, 1.0, 10, 1).unwrap();
    assert_eq!(view.clusters.len(), 4);
    assert_eq!(view.candidates.len(), 4 * 30 + 20);
    assert!(view.candidates.iter().all(|c| (0.0..180.0).contains(&c.azimuth_deg)));
}

#[test]
fn completion_restores_the_cloud() {
    let view = complete_view("box-facade", 4, 2, 2, 0).unwrap();
    assert!(view.max_gap < 1e-9);
    assert!(!view.added.is_empty());
    assert_eq!(view.input.len() + view.added.len(), view.scene.points.len());
}

#[test]
fn bad_arguments_are_reported() {
    assert!(fit_view("pyramid", 1, 0, 100, 0.0, 0.0, 0).is_err());
    assert!(fit_view("box-facade", 3, 0, 100, 0.0, 0.0, 0).is_err());
    assert!(complete_view("box-facade", 2, 5, 2, 0).is_err());
}
