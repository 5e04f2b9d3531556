//! End-to-end workflows over scene bundles: annotation from mirrored
//! correspondences, plane recovery from per-image signed distance maps,
//! evaluation, completion, and writing synthetic bundles.

use std::collections::HashMap;
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_planes, CandidatePlane, ClusterConfig, PlaneCluster};
use crate::error::{Error, Result};
use crate::fit::{fit_plane_from_sdf, fit_reflection_plane, FitReport, PointPairSet, RansacConfig, RobustFitConfig, SdfSample, SdfSampleSet};
use crate::geom::{unproject, CameraModel, DepthMap, Plane, PointCloud, PointMap, SignedDistanceMap, Vec3};
use crate::io::{
    BundleManifest, CorrespondenceRecord, ImageDetections, ImageEntry, PlaneRecord, Precision, SceneBundle, CLOUD, COMPLETED,
    GT_PLANES, PLANES, REPORT,
};
use crate::metrics::{evaluate_image, visibility_filter, EvalReport, MetricConventions, PlaneSet, DEFAULT_FSCORE_THRESHOLDS};
use crate::synth::{generate_scene, scene_records, synthetic_prediction, GroundTruthScene, SceneSpec};

/// Column of pixel `u_flipped` of a horizontally mirrored image in the
/// original image.
pub fn unflip(u_flipped: usize, width: usize) -> Result<usize> {
    if u_flipped >= width {
        return Err(Error::OutOfBounds {
            u: u_flipped,
            v: 0,
            width,
            height: 0,
        });
    }
    Ok(width - 1 - u_flipped)
}

/// Clustering settings with the offset scale relative to the scene size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSettings {
    pub eps: f64,
    pub min_points: usize,
    pub angle_scale_deg: f64,
    /// Offset scale as a fraction of the scene diameter.
    pub offset_scale: f64,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        let base = ClusterConfig::default();
        Self {
            eps: base.eps,
            min_points: base.min_points,
            angle_scale_deg: base.angle_scale.to_degrees(),
            offset_scale: 0.02,
        }
    }
}

impl ClusterSettings {
    pub fn for_diameter(&self, diameter: f64) -> ClusterConfig {
        ClusterConfig {
            eps: self.eps,
            min_points: self.min_points,
            angle_scale: self.angle_scale_deg.to_radians(),
            offset_scale: self.offset_scale * diameter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdfSettings {
    pub logit_threshold: f64,
    /// Pixels below this quantile of an instance's confidences are dropped.
    pub confidence_quantile: f64,
}

impl Default for SdfSettings {
    fn default() -> Self {
        Self {
            logit_threshold: 0.0,
            confidence_quantile: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub thresholds: Vec<f64>,
    pub conventions: MetricConventions,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            thresholds: DEFAULT_FSCORE_THRESHOLDS.to_vec(),
            conventions: MetricConventions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub scene: SceneSpec,
    pub matches_per_record: usize,
    /// Fraction of pixel matches replaced by random pixels.
    pub record_outlier_fraction: f64,
    /// Instance queries per image in the synthetic predictions.
    pub queries: usize,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self {
            scene: SceneSpec::default(),
            matches_per_record: 500,
            record_outlier_fraction: 0.0,
            queries: 8,
        }
    }
}

/// Everything the command-line workflows can be configured with. Read from
/// a TOML document; every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub fit: RobustFitConfig,
    pub cluster: ClusterSettings,
    pub sdf: SdfSettings,
    pub closure_depth: usize,
    pub eval: EvalSettings,
    pub synth: SynthSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            fit: RobustFitConfig::with_ransac(0),
            cluster: ClusterSettings::default(),
            sdf: SdfSettings::default(),
            closure_depth: 2,
            eval: EvalSettings::default(),
            synth: SynthSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format("config", e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Seed for the `index`-th independent task derived from a base seed.
pub fn task_seed(base: u64, index: usize) -> u64 {
    // splitmix64 step: well spread even for consecutive inputs
    let mut z = base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn ordered_map<T: Sync, R: Send>(items: &[T], f: impl Fn(usize, &T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(|(i, x)| f(i, x)).collect()
    }
}

#[derive(Debug)]
pub struct AnnotateOutcome {
    pub candidates: Vec<CandidatePlane>,
    pub clusters: Vec<PlaneCluster>,
    /// Records whose fit failed, with the reason.
    pub failures: Vec<(String, Error)>,
}

/// Fits one reflection plane per pair set (RANSAC on, seeded per set from
/// `seed`), weights each by its inlier count and clusters the results.
pub fn annotate_pairs(
    pair_sets: &[(String, PointPairSet)],
    fit: &RobustFitConfig,
    cluster: &ClusterConfig,
    seed: u64,
) -> Result<AnnotateOutcome> {
    let ransac = fit.ransac.unwrap_or_default();
    let fits = ordered_map(pair_sets, |i, (_, pairs)| {
        let config = RobustFitConfig {
            ransac: Some(RansacConfig {
                seed: task_seed(seed, i),
                ..ransac
            }),
            ..*fit
        };
        fit_reflection_plane(pairs, &config)
    });
    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    for ((id, _), result) in pair_sets.iter().zip(fits) {
        match result {
            Ok(report) => candidates.push(CandidatePlane {
                plane: report.plane,
                weight: report.inlier_count as f64,
                source_id: id.clone(),
            }),
            Err(e) => {
                warn!("record {id}: {e}");
                failures.push((id.clone(), e));
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::InsufficientData(format!(
            "none of {} records produced a plane",
            pair_sets.len()
        )));
    }
    let clusters = cluster_planes(&candidates, cluster)?;
    Ok(AnnotateOutcome {
        candidates,
        clusters,
        failures,
    })
}

/// 3D point pairs of one correspondence record; matches without depth on
/// either side are skipped.
pub fn record_pairs(
    record: &CorrespondenceRecord,
    camera_a: &CameraModel,
    depth_a: &DepthMap,
    camera_b: &CameraModel,
    depth_b: &DepthMap,
) -> Result<PointPairSet> {
    let mut pairs = Vec::with_capacity(record.matches.len());
    for m in &record.matches {
        let [ua, va, ub, vb] = m.map(|x| x as usize);
        let ub = if record.flipped_b { unflip(ub, depth_b.width)? } else { ub };
        for (u, v, d) in [(ua, va, depth_a), (ub, vb, depth_b)] {
            if u >= d.width || v >= d.height {
                return Err(Error::OutOfBounds {
                    u,
                    v,
                    width: d.width,
                    height: d.height,
                });
            }
        }
        let (Ok(a), Ok(b)) = (unproject(depth_a, camera_a, (ua, va)), unproject(depth_b, camera_b, (ub, vb))) else {
            continue;
        };
        pairs.push((a, b));
    }
    PointPairSet::new(pairs)
}

/// Annotation of a bundle: unproject every correspondence record, fit and
/// cluster planes, then write `candidates.jsonl` and `planes.json`.
pub fn annotate_scene(bundle: &SceneBundle, config: &PipelineConfig) -> Result<AnnotateOutcome> {
    let records = bundle.records()?;
    if records.is_empty() {
        return Err(Error::InsufficientData("bundle has no correspondence records".into()));
    }
    let cameras = bundle.cameras()?;
    let mut depths: HashMap<&str, DepthMap> = HashMap::new();
    for r in &records {
        for id in [&r.image_a, &r.image_b] {
            if !depths.contains_key(id.as_str()) {
                depths.insert(id, bundle.depth(id)?);
            }
        }
    }
    let mut pair_sets = Vec::with_capacity(records.len());
    let mut skipped = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let id = format!("{i}:{}/{}", r.image_a, r.image_b);
        let (ia, ib) = (bundle.image_index(&r.image_a)?, bundle.image_index(&r.image_b)?);
        let pairs = record_pairs(r, &cameras[ia], &depths[r.image_a.as_str()], &cameras[ib], &depths[r.image_b.as_str()])?;
        if pairs.len() < 3 {
            warn!("record {id}: only {} matches with depth", pairs.len());
            skipped.push((id, Error::InsufficientData(format!("{} matches with depth", pairs.len()))));
        } else {
            pair_sets.push((id, pairs));
        }
    }
    if pair_sets.is_empty() {
        return Err(Error::InsufficientData("no record has matches with valid depth".into()));
    }
    let diameter = match bundle.manifest.diameter {
        Some(d) => d,
        None => PointCloud::new(pair_sets.iter().flat_map(|(_, p)| p.pairs.iter().flat_map(|(a, b)| [*a, *b])).collect())?
            .extent(),
    };
    let mut outcome = annotate_pairs(&pair_sets, &config.fit, &config.cluster.for_diameter(diameter), config.seed)?;
    skipped.append(&mut outcome.failures);
    outcome.failures = skipped;
    info!(
        "{} candidates, {} clusters, {} records skipped",
        outcome.candidates.len(),
        outcome.clusters.len(),
        outcome.failures.len()
    );
    bundle.write_candidates(&outcome.candidates)?;
    bundle.write_planes(PLANES, &cluster_records(&outcome.clusters))?;
    Ok(outcome)
}

/// Scene diameter from the manifest, falling back to the extent of the
/// bundle cloud.
pub fn bundle_diameter(bundle: &SceneBundle) -> Result<f64> {
    if let Some(d) = bundle.manifest.diameter {
        return Ok(d);
    }
    if bundle.has(CLOUD) {
        return Ok(bundle.read_cloud(CLOUD)?.0.extent());
    }
    Err(Error::InvalidBundle("no diameter in the manifest and no cloud to measure".into()))
}

/// Clusters the stored `candidates.jsonl` and writes `planes.json`.
pub fn cluster_scene(bundle: &SceneBundle, settings: &ClusterSettings, diameter: f64) -> Result<Vec<PlaneCluster>> {
    let candidates = bundle.read_candidates()?;
    if candidates.is_empty() {
        return Err(Error::InsufficientData("no candidate planes".into()));
    }
    let clusters = cluster_planes(&candidates, &settings.for_diameter(diameter))?;
    bundle.write_planes(PLANES, &cluster_records(&clusters))?;
    Ok(clusters)
}

pub fn cluster_records(clusters: &[PlaneCluster]) -> Vec<PlaneRecord> {
    clusters.iter().map(|c| PlaneRecord::new(&c.center, c.support)).collect()
}

/// Plane fitted for one instance query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryFit {
    pub query: usize,
    pub report: FitReport,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionPlanes {
    pub fits: Vec<QueryFit>,
    /// Queries that passed the logit threshold but could not be fitted.
    pub warnings: Vec<(usize, String)>,
}

/// Lower `q`-quantile of `values`.
fn quantile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    values[((values.len() - 1) as f64 * q).floor() as usize]
}

/// Planes from per-query signed distance maps over a point map: queries
/// with logit at least `logit_threshold` are kept, and each is fitted on
/// the pixels whose confidence reaches the `confidence_quantile` of that
/// query's confidences.
pub fn planes_from_prediction(
    point_map: &PointMap,
    sdf_maps: &[SignedDistanceMap],
    logits: &[f64],
    logit_threshold: f64,
    confidence_quantile: f64,
) -> Result<PredictionPlanes> {
    if sdf_maps.len() != logits.len() {
        return Err(Error::InvalidInput(format!(
            "{} signed distance maps but {} logits",
            sdf_maps.len(),
            logits.len()
        )));
    }
    if !(0.0..=1.0).contains(&confidence_quantile) {
        return Err(Error::InvalidInput("confidence quantile must lie in [0, 1]".into()));
    }
    for m in sdf_maps {
        if (m.width, m.height) != (point_map.width, point_map.height) {
            return Err(Error::InvalidInput(format!(
                "signed distance map is {}x{}, point map {}x{}",
                m.width, m.height, point_map.width, point_map.height
            )));
        }
    }
    let mut out = PredictionPlanes::default();
    for (q, (map, &logit)) in sdf_maps.iter().zip(logits).enumerate() {
        if !(logit >= logit_threshold) {
            continue;
        }
        let joint: Vec<usize> = (0..map.sdf.len()).filter(|&k| map.valid[k] && point_map.valid[k]).collect();
        let selected: Vec<usize> = match &map.confidence {
            Some(conf) if !joint.is_empty() => {
                let mut c: Vec<f64> = joint.iter().map(|&k| conf[k]).collect();
                let cut = quantile(&mut c, confidence_quantile);
                joint.into_iter().filter(|&k| conf[k] >= cut).collect()
            }
            _ => joint,
        };
        if selected.len() < 4 {
            warn!("query {q}: {} pixels selected, need 4", selected.len());
            out.warnings.push((q, format!("{} pixels selected", selected.len())));
            continue;
        }
        let samples = SdfSampleSet {
            samples: selected
                .iter()
                .map(|&k| SdfSample {
                    point: point_map.points[k],
                    sdf: map.sdf[k],
                    weight: 1.0,
                })
                .collect(),
        };
        match fit_plane_from_sdf(&samples) {
            Ok(report) => out.fits.push(QueryFit { query: q, report }),
            Err(e) => {
                warn!("query {q}: {e}");
                out.warnings.push((q, e.to_string()));
            }
        }
    }
    Ok(out)
}

/// Runs [`planes_from_prediction`] on every image of the bundle's
/// prediction manifest and writes `detections.json`.
pub fn detect_planes(bundle: &SceneBundle, settings: &SdfSettings) -> Result<Vec<ImageDetections>> {
    let entries = bundle.predictions()?;
    let mut detections = Vec::with_capacity(entries.len());
    for e in &entries {
        let point_map = bundle.read_point_map(&e.point_map)?;
        let maps = e.queries.iter().map(|q| bundle.read_sdf_map(&q.sdf)).collect::<Result<Vec<_>>>()?;
        let logits: Vec<f64> = e.queries.iter().map(|q| q.logit).collect();
        let found = planes_from_prediction(&point_map, &maps, &logits, settings.logit_threshold, settings.confidence_quantile)?;
        for (q, w) in &found.warnings {
            warn!("image {} query {q}: {w}", e.image);
        }
        detections.push(ImageDetections {
            image: e.image.clone(),
            planes: found.fits.iter().map(|f| PlaneRecord::new(&f.report.plane.canonical(), f.report.inlier_count as f64)).collect(),
        });
    }
    bundle.write_detections(&detections)?;
    Ok(detections)
}

/// Spatial hash for merging points closer than a tolerance.
struct PointSet {
    tolerance: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    points: Vec<Vec3>,
}

impl PointSet {
    fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            cells: HashMap::new(),
            points: Vec::new(),
        }
    }

    fn cell(&self, p: &Vec3) -> [i64; 3] {
        [0, 1, 2].map(|i| (p[i] / self.tolerance).floor() as i64)
    }

    fn contains(&self, p: &Vec3) -> bool {
        let c = self.cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        if ids.iter().any(|&i| (self.points[i] - p).norm() <= self.tolerance) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    fn push(&mut self, p: Vec3) {
        let c = self.cell(&p);
        self.cells.entry(c).or_default().push(self.points.len());
        self.points.push(p);
    }
}

/// Tolerance below which generated points are merged into existing ones.
pub const COMPLETION_MERGE_TOLERANCE: f64 = 1e-9;

/// Valid points of `point_map` together with their images under every
/// composition of up to `closure_depth` reflections across `planes`.
/// Input points are kept as they are; generated points within
/// [`COMPLETION_MERGE_TOLERANCE`] of an existing point are dropped.
pub fn complete_cloud(point_map: &PointMap, planes: &[Plane], closure_depth: usize) -> Result<PointCloud> {
    if planes.is_empty() {
        return Err(Error::InvalidInput("completion needs at least one plane".into()));
    }
    let mut set = PointSet::new(COMPLETION_MERGE_TOLERANCE);
    for p in point_map.valid_points() {
        set.push(*p);
    }
    let mut frontier: Vec<Vec3> = set.points.clone();
    for _ in 0..closure_depth {
        let mut next = Vec::new();
        for plane in planes {
            for p in &frontier {
                let q = plane.reflect(p);
                if !set.contains(&q) {
                    set.push(q);
                    next.push(q);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    PointCloud::new(set.points)
}

/// A cloud as a one-row point map with every point valid.
pub fn cloud_as_point_map(cloud: &PointCloud) -> PointMap {
    PointMap {
        width: cloud.len(),
        height: 1,
        points: cloud.points.clone(),
        valid: vec![true; cloud.len()],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub image: String,
    /// Indices of the ground-truth planes visible in the image.
    pub visible: Vec<usize>,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedImage {
    pub image: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub images_evaluated: usize,
    pub median_geodesic: f64,
    pub median_dense_error: f64,
    /// `(threshold in degrees, mean F-score)`.
    pub mean_fscore: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneReport {
    pub images: Vec<ImageReport>,
    pub skipped: Vec<SkippedImage>,
    pub summary: Option<SceneSummary>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Per-image input to [`evaluate_images`].
#[derive(Debug, Clone)]
pub struct ImageEvalInput {
    pub image: String,
    pub predicted: Vec<Plane>,
    /// Indices into the ground-truth list.
    pub visible: Vec<usize>,
}

/// Per-image reports and the scene medians / means. Images without any
/// visible ground-truth plane are skipped.
pub fn evaluate_images(
    inputs: &[ImageEvalInput],
    gt_all: &[Plane],
    cloud: &PointCloud,
    settings: &EvalSettings,
) -> Result<SceneReport> {
    let gt = PlaneSet::new(gt_all.iter().copied())?;
    let results = ordered_map(inputs, |_, input| -> Result<Option<ImageReport>> {
        if input.visible.is_empty() {
            return Ok(None);
        }
        if let Some(&j) = input.visible.iter().find(|&&j| j >= gt_all.len()) {
            return Err(Error::InvalidInput(format!("visible index {j} out of range")));
        }
        let pred = PlaneSet::new(input.predicted.iter().copied())?;
        let vis = gt.subset(&input.visible)?;
        let report = evaluate_image(&pred, &gt, &vis, cloud, &settings.thresholds, &settings.conventions)?;
        Ok(Some(ImageReport {
            image: input.image.clone(),
            visible: input.visible.clone(),
            report,
        }))
    });
    let mut images = Vec::new();
    let mut skipped = Vec::new();
    for (input, r) in inputs.iter().zip(results) {
        match r? {
            Some(rep) => images.push(rep),
            None => skipped.push(SkippedImage {
                image: input.image.clone(),
                reason: "no visible ground-truth plane".into(),
            }),
        }
    }
    let summary = (!images.is_empty()).then(|| {
        let geo: Vec<f64> = images.iter().map(|r| r.report.geodesic).collect();
        let dense: Vec<f64> = images.iter().map(|r| r.report.dense_error).collect();
        let mut thresholds = settings.thresholds.clone();
        thresholds.sort_by(f64::total_cmp);
        let mean_fscore = thresholds
            .iter()
            .map(|&t| {
                let sum: f64 = images.iter().filter_map(|r| r.report.fscore(t)).sum();
                (t, sum / images.len() as f64)
            })
            .collect();
        SceneSummary {
            images_evaluated: images.len(),
            median_geodesic: median(&geo).expect("non-empty"),
            median_dense_error: median(&dense).expect("non-empty"),
            mean_fscore,
        }
    });
    Ok(SceneReport {
        images,
        skipped,
        summary,
    })
}

fn read_plane_list(bundle: &SceneBundle, name: &str) -> Result<Vec<Plane>> {
    if !bundle.has(name) {
        return Err(Error::InvalidBundle(format!("missing {name}")));
    }
    bundle.read_planes(name)?.iter().map(PlaneRecord::plane).collect()
}

/// Evaluates `detections.json` against `planes_gt.json`, computing
/// visibility per image from its depth map, and writes `report.json`.
pub fn evaluate_scene(bundle: &SceneBundle, settings: &EvalSettings) -> Result<SceneReport> {
    let gt = read_plane_list(bundle, GT_PLANES)?;
    if !bundle.has(CLOUD) {
        return Err(Error::InvalidBundle(format!("missing {CLOUD}")));
    }
    let (cloud, _) = bundle.read_cloud(CLOUD)?;
    let detections = bundle.detections()?;
    let cameras = bundle.cameras()?;
    let mut inputs = Vec::with_capacity(detections.len());
    for d in &detections {
        let i = bundle.image_index(&d.image)?;
        let depth = bundle.depth(&d.image)?;
        let visible = (0..gt.len()).filter(|&j| visibility_filter(&depth, &cameras[i], &gt[j])).collect();
        let predicted = d.planes.iter().map(PlaneRecord::plane).collect::<Result<Vec<_>>>()?;
        inputs.push(ImageEvalInput {
            image: d.image.clone(),
            predicted,
            visible,
        });
    }
    let report = evaluate_images(&inputs, &gt, &cloud, settings)?;
    bundle.write_document(REPORT, &report)?;
    Ok(report)
}

/// Completes either one image's unprojected depth or the bundle cloud
/// with the given planes and writes `completed.ply`.
pub fn complete_in_bundle(
    bundle: &SceneBundle,
    image: Option<&str>,
    planes: &[Plane],
    closure_depth: usize,
) -> Result<PointCloud> {
    let map = match image {
        Some(id) => {
            let cameras = bundle.cameras()?;
            PointMap::from_depth(&bundle.depth(id)?, &cameras[bundle.image_index(id)?])
        }
        None => cloud_as_point_map(&bundle.read_cloud(CLOUD)?.0),
    };
    let completed = complete_cloud(&map, planes, closure_depth)?;
    bundle.write_cloud(COMPLETED, &completed, Precision::F32)?;
    Ok(completed)
}

/// Writes a complete synthetic bundle: manifest, cameras, depth maps,
/// correspondences, cloud, ground-truth planes and per-image predictions.
pub fn write_synthetic_bundle(root: &Path, settings: &SynthSettings, seed: u64) -> Result<(SceneBundle, GroundTruthScene)> {
    let spec = SceneSpec {
        seed,
        ..settings.scene.clone()
    };
    let scene = generate_scene(&spec)?;
    let (w, h) = spec.resolution;
    let manifest = BundleManifest {
        images: scene
            .image_ids
            .iter()
            .map(|id| ImageEntry {
                id: id.clone(),
                width: w,
                height: h,
            })
            .collect(),
        diameter: Some(spec.diameter),
        source: Some(serde_json::to_value(&spec).map_err(|e| Error::format("scene spec", e))?),
    };
    let bundle = SceneBundle::create(root, manifest)?;
    bundle.write_cameras(&scene.cameras)?;
    for (id, depth) in scene.image_ids.iter().zip(&scene.depths) {
        bundle.write_depth(id, depth, Precision::F64)?;
    }
    let records = scene_records(&scene, settings.matches_per_record, settings.record_outlier_fraction, task_seed(seed, 1))?;
    bundle.write_records(&records)?;
    bundle.write_cloud(CLOUD, &scene.cloud, Precision::F32)?;
    bundle.write_planes(GT_PLANES, &scene.planes.iter().map(|p| PlaneRecord::new(p, 1.0)).collect::<Vec<_>>())?;
    let mut entries = Vec::with_capacity(scene.cameras.len());
    for (i, id) in scene.image_ids.iter().enumerate() {
        let pred = synthetic_prediction(&scene, i, settings.queries, task_seed(seed, 2))?;
        let queries: Vec<(SignedDistanceMap, f64)> = pred.sdf_maps.into_iter().zip(pred.logits).collect();
        entries.push(bundle.write_prediction(id, &pred.point_map, &queries)?);
    }
    bundle.write_prediction_manifest(&entries)?;
    Ok((bundle, scene))
}
