//! Text formats: JSON documents for planes, cameras and reports; one JSON
//! object per line for correspondences and candidate planes. Floats are
//! written in shortest round-trip form, so reading back is value-exact.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cluster::CandidatePlane;
use crate::error::{Error, Result};
use crate::geom::{CameraModel, Mat3, Plane, Vec3};

/// Pixel matches between image `a` and the horizontally mirrored image `b`.
/// Each match is `[u_a, v_a, u_b_flipped, v_b_flipped]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrespondenceRecord {
    pub image_a: String,
    pub image_b: String,
    pub flipped_b: bool,
    pub matches: Vec<[u32; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneRecord {
    pub normal: [f64; 3],
    pub offset: f64,
    pub support: f64,
}

impl PlaneRecord {
    pub fn new(plane: &Plane, support: f64) -> Self {
        let n = plane.normal();
        Self {
            normal: [n.x, n.y, n.z],
            offset: plane.offset(),
            support,
        }
    }

    /// The stored plane; the normal must already be unit length.
    pub fn plane(&self) -> Result<Plane> {
        Plane::from_unit(Vec3::from(self.normal), self.offset)
            .map_err(|e| Error::format("plane record", e))
    }
}

pub const WORLD_TO_CAMERA: &str = "world-to-camera";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRecord {
    pub id: String,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Row-major.
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    pub convention: String,
}

impl CameraRecord {
    pub fn new(id: impl Into<String>, camera: &CameraModel) -> Self {
        let r = &camera.rotation;
        let t = &camera.translation;
        Self {
            id: id.into(),
            fx: camera.fx,
            fy: camera.fy,
            cx: camera.cx,
            cy: camera.cy,
            rotation: [r[(0, 0)], r[(0, 1)], r[(0, 2)], r[(1, 0)], r[(1, 1)], r[(1, 2)], r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            translation: [t.x, t.y, t.z],
            convention: WORLD_TO_CAMERA.to_string(),
        }
    }

    pub fn camera(&self) -> Result<CameraModel> {
        if self.convention != WORLD_TO_CAMERA {
            return Err(Error::format(
                "camera record",
                format!("unsupported convention '{}'", self.convention),
            ));
        }
        CameraModel::new(
            self.fx,
            self.fy,
            self.cx,
            self.cy,
            Mat3::from_row_slice(&self.rotation),
            Vec3::from(self.translation),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateRecord {
    pub normal: [f64; 3],
    pub offset: f64,
    pub weight: f64,
    pub source_id: String,
}

impl CandidateRecord {
    pub fn new(c: &CandidatePlane) -> Self {
        let n = c.plane.normal();
        Self {
            normal: [n.x, n.y, n.z],
            offset: c.plane.offset(),
            weight: c.weight,
            source_id: c.source_id.clone(),
        }
    }

    pub fn candidate(&self) -> Result<CandidatePlane> {
        let plane = PlaneRecord {
            normal: self.normal,
            offset: self.offset,
            support: self.weight,
        }
        .plane()?;
        Ok(CandidatePlane {
            plane,
            weight: self.weight,
            source_id: self.source_id.clone(),
        })
    }
}

/// Pretty-printed JSON document followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(w: &mut impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::format("JSON", e))?;
    writeln!(w)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(r: impl std::io::Read, what: &'static str) -> Result<T> {
    serde_json::from_reader(r).map_err(|e| Error::format(what, e))
}

pub fn write_jsonl<T: Serialize>(w: &mut impl Write, records: &[T]) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut *w, rec).map_err(|e| Error::format("JSON", e))?;
        writeln!(w)?;
    }
    Ok(())
}

/// One record per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(r: impl BufRead, what: &'static str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::format(what, format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}
