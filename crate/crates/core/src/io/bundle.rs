//! A scene bundle is a directory holding everything known about one scene:
//!
//! ```text
//! scene.json              manifest: image ids and sizes, optional diameter
//! cameras.json            one camera record per image, manifest order
//! depth/<id>.symd         depth map per image
//! correspondences.jsonl   mirrored-image pixel matches
//! cloud.ply               scene point cloud
//! planes_gt.json          ground-truth planes
//! candidates.jsonl        per-record fitted planes (written by annotate)
//! planes.json             clustered planes (written by annotate / cluster)
//! predictions.json        per-image point maps and signed distance maps
//! detections.json         per-image planes (written by planes-from-sdf)
//! report.json             evaluation report
//! completed.ply           completed cloud
//! ```

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::{read_depth, read_point_map, read_sdf_map, write_depth, write_point_map, write_sdf_map, Precision};
use super::ply::{read_ply, write_ply};
use super::text::{read_json, read_jsonl, write_json, write_jsonl, CameraRecord, CandidateRecord, CorrespondenceRecord, PlaneRecord};
use crate::cluster::CandidatePlane;
use crate::error::{Error, Result};
use crate::geom::{CameraModel, DepthMap, PointCloud, PointMap, SignedDistanceMap};

pub const MANIFEST: &str = "scene.json";
pub const CAMERAS: &str = "cameras.json";
pub const DEPTH_DIR: &str = "depth";
pub const CORRESPONDENCES: &str = "correspondences.jsonl";
pub const CLOUD: &str = "cloud.ply";
pub const GT_PLANES: &str = "planes_gt.json";
pub const CANDIDATES: &str = "candidates.jsonl";
pub const PLANES: &str = "planes.json";
pub const PREDICTIONS: &str = "predictions.json";
pub const PREDICTION_DIR: &str = "predictions";
pub const DETECTIONS: &str = "detections.json";
pub const REPORT: &str = "report.json";
pub const COMPLETED: &str = "completed.ply";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageEntry {
    pub id: String,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleManifest {
    pub images: Vec<ImageEntry>,
    /// Scene scale used for offset tolerances; estimated from the data when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
    /// Free-form provenance, e.g. the generator settings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<serde_json::Value>,
}

/// One image's network-style outputs, paths relative to the bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionEntry {
    pub image: String,
    pub point_map: String,
    pub queries: Vec<QueryEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryEntry {
    pub sdf: String,
    pub logit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageDetections {
    pub image: String,
    pub planes: Vec<PlaneRecord>,
}

#[derive(Debug, Clone)]
pub struct SceneBundle {
    root: PathBuf,
    pub manifest: BundleManifest,
}

fn open_file(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidBundle(format!("cannot open {}: {e}", path.display())))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !id.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidBundle(format!("image id '{id}' must be a plain file name")))
    }
}

impl SceneBundle {
    /// Creates (or overwrites the manifest of) a bundle at `root`.
    pub fn create(root: impl Into<PathBuf>, manifest: BundleManifest) -> Result<Self> {
        let bundle = Self {
            root: root.into(),
            manifest,
        };
        bundle.check_manifest()?;
        fs::create_dir_all(&bundle.root)?;
        let mut w = create_file(&bundle.path(MANIFEST))?;
        write_json(&mut w, &bundle.manifest)?;
        finish(w)?;
        Ok(bundle)
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let manifest: BundleManifest = read_json(open_file(&root.join(MANIFEST))?, "bundle manifest")?;
        let bundle = Self { root, manifest };
        bundle.check_manifest()?;
        Ok(bundle)
    }

    fn check_manifest(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for img in &self.manifest.images {
            check_id(&img.id)?;
            if !seen.insert(img.id.as_str()) {
                return Err(Error::InvalidBundle(format!("duplicate image id '{}'", img.id)));
            }
            if img.width == 0 || img.height == 0 {
                return Err(Error::InvalidBundle(format!("image '{}' has zero size", img.id)));
            }
        }
        if let Some(d) = self.manifest.diameter {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidBundle("diameter must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, relative: &str) -> PathBuf {
        self.root.join(relative)
    }

    pub fn has(&self, relative: &str) -> bool {
        self.path(relative).is_file()
    }

    pub fn image_index(&self, id: &str) -> Result<usize> {
        self.manifest
            .images
            .iter()
            .position(|i| i.id == id)
            .ok_or_else(|| Error::InvalidBundle(format!("unknown image '{id}'")))
    }

    /// Cameras in manifest order.
    pub fn cameras(&self) -> Result<Vec<CameraModel>> {
        let records: Vec<CameraRecord> = read_json(open_file(&self.path(CAMERAS))?, "camera file")?;
        if records.len() != self.manifest.images.len() {
            return Err(Error::InvalidBundle(format!(
                "{} cameras for {} images",
                records.len(),
                self.manifest.images.len()
            )));
        }
        records
            .iter()
            .zip(&self.manifest.images)
            .map(|(r, img)| {
                if r.id != img.id {
                    return Err(Error::InvalidBundle(format!("camera '{}' listed where '{}' expected", r.id, img.id)));
                }
                r.camera()
            })
            .collect()
    }

    pub fn write_cameras(&self, cameras: &[CameraModel]) -> Result<()> {
        if cameras.len() != self.manifest.images.len() {
            return Err(Error::InvalidInput("one camera per image required".into()));
        }
        let records: Vec<CameraRecord> = self
            .manifest
            .images
            .iter()
            .zip(cameras)
            .map(|(img, c)| CameraRecord::new(img.id.clone(), c))
            .collect();
        let mut w = create_file(&self.path(CAMERAS))?;
        write_json(&mut w, &records)?;
        finish(w)
    }

    fn depth_path(&self, id: &str) -> PathBuf {
        self.root.join(DEPTH_DIR).join(format!("{id}.symd"))
    }

    pub fn depth(&self, id: &str) -> Result<DepthMap> {
        let img = &self.manifest.images[self.image_index(id)?];
        let d = read_depth(&mut open_file(&self.depth_path(id))?)?;
        if (d.width, d.height) != (img.width, img.height) {
            return Err(Error::InvalidBundle(format!(
                "depth map of '{id}' is {}x{}, manifest says {}x{}",
                d.width, d.height, img.width, img.height
            )));
        }
        Ok(d)
    }

    pub fn write_depth(&self, id: &str, depth: &DepthMap, precision: Precision) -> Result<()> {
        self.image_index(id)?;
        let mut w = create_file(&self.depth_path(id))?;
        write_depth(&mut w, depth, precision)?;
        finish(w)
    }

    pub fn records(&self) -> Result<Vec<CorrespondenceRecord>> {
        let records: Vec<CorrespondenceRecord> = read_jsonl(open_file(&self.path(CORRESPONDENCES))?, "correspondence file")?;
        for r in &records {
            for id in [&r.image_a, &r.image_b] {
                self.image_index(id)?;
            }
        }
        Ok(records)
    }

    pub fn write_records(&self, records: &[CorrespondenceRecord]) -> Result<()> {
        let mut w = create_file(&self.path(CORRESPONDENCES))?;
        write_jsonl(&mut w, records)?;
        finish(w)
    }

    pub fn read_cloud(&self, relative: &str) -> Result<(PointCloud, Option<Vec<f64>>)> {
        read_ply(&mut open_file(&self.path(relative))?)
    }

    pub fn write_cloud(&self, relative: &str, cloud: &PointCloud, precision: Precision) -> Result<()> {
        let mut w = create_file(&self.path(relative))?;
        write_ply(&mut w, cloud, None, precision)?;
        finish(w)
    }

    pub fn read_planes(&self, relative: &str) -> Result<Vec<PlaneRecord>> {
        read_json(open_file(&self.path(relative))?, "plane file")
    }

    pub fn write_planes(&self, relative: &str, planes: &[PlaneRecord]) -> Result<()> {
        let mut w = create_file(&self.path(relative))?;
        write_json(&mut w, planes)?;
        finish(w)
    }

    pub fn read_candidates(&self) -> Result<Vec<CandidatePlane>> {
        let recs: Vec<CandidateRecord> = read_jsonl(open_file(&self.path(CANDIDATES))?, "candidate file")?;
        recs.iter().map(CandidateRecord::candidate).collect()
    }

    pub fn write_candidates(&self, candidates: &[CandidatePlane]) -> Result<()> {
        let recs: Vec<CandidateRecord> = candidates.iter().map(CandidateRecord::new).collect();
        let mut w = create_file(&self.path(CANDIDATES))?;
        write_jsonl(&mut w, &recs)?;
        finish(w)
    }

    pub fn predictions(&self) -> Result<Vec<PredictionEntry>> {
        let entries: Vec<PredictionEntry> = read_json(open_file(&self.path(PREDICTIONS))?, "prediction manifest")?;
        for e in &entries {
            self.image_index(&e.image)?;
        }
        Ok(entries)
    }

    pub fn read_point_map(&self, relative: &str) -> Result<PointMap> {
        read_point_map(&mut open_file(&self.path(relative))?)
    }

    pub fn read_sdf_map(&self, relative: &str) -> Result<SignedDistanceMap> {
        read_sdf_map(&mut open_file(&self.path(relative))?)
    }

    /// Writes one image's prediction files under `predictions/` and returns
    /// the manifest entry describing them.
    pub fn write_prediction(
        &self,
        image: &str,
        point_map: &PointMap,
        queries: &[(SignedDistanceMap, f64)],
    ) -> Result<PredictionEntry> {
        self.image_index(image)?;
        let pm = format!("{PREDICTION_DIR}/{image}.symp");
        let mut w = create_file(&self.path(&pm))?;
        write_point_map(&mut w, point_map, Precision::F64)?;
        finish(w)?;
        let mut entries = Vec::new();
        for (q, (map, logit)) in queries.iter().enumerate() {
            let rel = format!("{PREDICTION_DIR}/{image}_q{q}.syms");
            let mut w = create_file(&self.path(&rel))?;
            write_sdf_map(&mut w, map, Precision::F64)?;
            finish(w)?;
            entries.push(QueryEntry { sdf: rel, logit: *logit });
        }
        Ok(PredictionEntry {
            image: image.to_string(),
            point_map: pm,
            queries: entries,
        })
    }

    pub fn write_prediction_manifest(&self, entries: &[PredictionEntry]) -> Result<()> {
        let mut w = create_file(&self.path(PREDICTIONS))?;
        write_json(&mut w, entries)?;
        finish(w)
    }

    pub fn detections(&self) -> Result<Vec<ImageDetections>> {
        let d: Vec<ImageDetections> = read_json(open_file(&self.path(DETECTIONS))?, "detection file")?;
        for e in &d {
            self.image_index(&e.image)?;
        }
        Ok(d)
    }

    pub fn write_detections(&self, detections: &[ImageDetections]) -> Result<()> {
        let mut w = create_file(&self.path(DETECTIONS))?;
        write_json(&mut w, detections)?;
        finish(w)
    }

    pub fn write_document<T: Serialize + ?Sized>(&self, relative: &str, value: &T) -> Result<()> {
        let mut w = create_file(&self.path(relative))?;
        write_json(&mut w, value)?;
        finish(w)
    }

    /// Checks that cameras, depth maps and correspondences are present,
    /// parse, and agree with the manifest.
    pub fn validate(&self) -> Result<()> {
        self.cameras()?;
        for img in &self.manifest.images {
            self.depth(&img.id)?;
        }
        if self.has(CORRESPONDENCES) {
            for r in self.records()? {
                let a = &self.manifest.images[self.image_index(&r.image_a)?];
                let b = &self.manifest.images[self.image_index(&r.image_b)?];
                for m in &r.matches {
                    let [ua, va, ub, vb] = m.map(|x| x as usize);
                    if ua >= a.width || va >= a.height || ub >= b.width || vb >= b.height {
                        return Err(Error::InvalidBundle(format!(
                            "match {m:?} outside images '{}'/'{}'",
                            r.image_a, r.image_b
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Mat3, Vec3};

    fn manifest(ids: &[&str]) -> BundleManifest {
        BundleManifest {
            images: ids.iter().map(|id| ImageEntry { id: id.to_string(), width: 3, height: 2 }).collect(),
            diameter: Some(2.0),
            source: None,
        }
    }

    #[test]
    fn round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let b = SceneBundle::create(dir.path(), manifest(&["a", "b"])).unwrap();
        let cam = CameraModel::new(2.0, 2.0, 1.0, 0.5, Mat3::identity(), Vec3::new(0.0, 0.0, 1.0)).unwrap();
        b.write_cameras(&[cam.clone(), cam.clone()]).unwrap();
        let depth = DepthMap::new(3, 2, vec![1.0, 2.0, f64::NAN, 4.0, 5.0, 6.0]).unwrap();
        b.write_depth("a", &depth, Precision::F64).unwrap();
        b.write_depth("b", &depth, Precision::F32).unwrap();
        b.write_records(&[CorrespondenceRecord {
            image_a: "a".into(),
            image_b: "b".into(),
            flipped_b: true,
            matches: vec![[0, 0, 2, 1]],
        }])
        .unwrap();

        let b2 = SceneBundle::open(dir.path()).unwrap();
        assert_eq!(b2.manifest, b.manifest);
        assert_eq!(b2.cameras().unwrap(), vec![cam.clone(), cam]);
        assert_eq!(format!("{:?}", b2.depth("a").unwrap()), format!("{depth:?}"));
        b2.validate().unwrap();

        b.write_records(&[CorrespondenceRecord {
            image_a: "a".into(),
            image_b: "b".into(),
            flipped_b: true,
            matches: vec![[3, 0, 0, 0]],
        }])
        .unwrap();
        assert!(matches!(b2.validate(), Err(Error::InvalidBundle(_))));
        assert!(matches!(b2.depth("zzz"), Err(Error::InvalidBundle(_))));
    }

    #[test]
    fn rejects_bad_manifests() {
        let dir = tempfile::tempdir().unwrap();
        assert!(SceneBundle::create(dir.path(), manifest(&["a", "a"])).is_err());
        assert!(SceneBundle::create(dir.path(), manifest(&["../x"])).is_err());
        assert!(matches!(SceneBundle::open(dir.path().join("missing")), Err(Error::InvalidBundle(_))));
    }

    #[test]
    fn missing_camera_file_is_a_bundle_error() {
        let dir = tempfile::tempdir().unwrap();
        let b = SceneBundle::create(dir.path(), manifest(&["a"])).unwrap();
        assert!(matches!(b.cameras(), Err(Error::InvalidBundle(_))));
    }
}
