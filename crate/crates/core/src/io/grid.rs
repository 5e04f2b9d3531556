//! Binary containers for per-pixel grids.
//!
//! Every container starts with a 14-byte header: four magic bytes, a
//! little-endian `u16` version, then `u32` width and `u32` height. Version 1
//! stores samples as little-endian `f32`, version 2 as `f64`. Samples are
//! row-major and NaN marks an invalid pixel.
//!
//! * `SYMD` depth map: one sample per pixel.
//! * `SYMP` point map: three samples (x, y, z) per pixel.
//! * `SYMS` signed distance map: one flags byte after the header (bit 0:
//!   confidence present), the distance samples, then the confidence samples.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::geom::{DepthMap, PointMap, SignedDistanceMap, Vec3};

pub const DEPTH_MAGIC: &[u8; 4] = b"SYMD";
pub const POINT_MAP_MAGIC: &[u8; 4] = b"SYMP";
pub const SDF_MAGIC: &[u8; 4] = b"SYMS";

/// Largest accepted pixel count, guarding allocations on corrupt headers.
const MAX_PIXELS: u64 = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl Precision {
    fn version(self) -> u16 {
        match self {
            Precision::F32 => 1,
            Precision::F64 => 2,
        }
    }

    fn from_version(what: &'static str, v: u16) -> Result<Self> {
        match v {
            1 => Ok(Precision::F32),
            2 => Ok(Precision::F64),
            other => Err(Error::format(what, format!("unsupported version {other}"))),
        }
    }
}

fn write_header(w: &mut impl Write, magic: &[u8; 4], precision: Precision, width: usize, height: usize) -> Result<()> {
    let dims = |x: usize| u32::try_from(x).map_err(|_| Error::InvalidInput(format!("dimension {x} exceeds u32")));
    w.write_all(magic)?;
    w.write_u16::<LittleEndian>(precision.version())?;
    w.write_u32::<LittleEndian>(dims(width)?)?;
    w.write_u32::<LittleEndian>(dims(height)?)?;
    Ok(())
}

fn read_header(r: &mut impl Read, magic: &[u8; 4], what: &'static str) -> Result<(Precision, usize, usize)> {
    let mut found = [0u8; 4];
    read_exact(r, &mut found, what)?;
    if &found != magic {
        return Err(Error::format(what, format!("bad magic {found:?}")));
    }
    let version = r.read_u16::<LittleEndian>().map_err(|e| truncated(what, e))?;
    let precision = Precision::from_version(what, version)?;
    let width = r.read_u32::<LittleEndian>().map_err(|e| truncated(what, e))? as usize;
    let height = r.read_u32::<LittleEndian>().map_err(|e| truncated(what, e))? as usize;
    if (width as u64) * (height as u64) > MAX_PIXELS {
        return Err(Error::format(what, format!("{width}x{height} is too large")));
    }
    Ok((precision, width, height))
}

fn truncated(what: &'static str, e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::format(what, "truncated")
    } else {
        Error::Io(e)
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|e| truncated(what, e))
}

fn write_samples(w: &mut impl Write, precision: Precision, values: impl Iterator<Item = f64>) -> Result<()> {
    for x in values {
        match precision {
            Precision::F32 => w.write_f32::<LittleEndian>(x as f32)?,
            Precision::F64 => w.write_f64::<LittleEndian>(x)?,
        }
    }
    Ok(())
}

fn read_samples(r: &mut impl Read, precision: Precision, n: usize, what: &'static str) -> Result<Vec<f64>> {
    let size = match precision {
        Precision::F32 => 4,
        Precision::F64 => 8,
    };
    let mut bytes = vec![0u8; n * size];
    read_exact(r, &mut bytes, what)?;
    Ok(match precision {
        Precision::F32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")) as f64)
            .collect(),
        Precision::F64 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
    })
}

fn expect_end(r: &mut impl Read, what: &'static str) -> Result<()> {
    let mut extra = [0u8; 1];
    match r.read(&mut extra)? {
        0 => Ok(()),
        _ => Err(Error::format(what, "trailing bytes")),
    }
}

pub fn write_depth(w: &mut impl Write, depth: &DepthMap, precision: Precision) -> Result<()> {
    write_header(w, DEPTH_MAGIC, precision, depth.width, depth.height)?;
    let samples = depth.depth.iter().map(|&z| if z.is_finite() && z > 0.0 { z } else { f64::NAN });
    write_samples(w, precision, samples)
}

pub fn read_depth(r: &mut impl Read) -> Result<DepthMap> {
    const WHAT: &str = "depth map";
    let (precision, width, height) = read_header(r, DEPTH_MAGIC, WHAT)?;
    let depth = read_samples(r, precision, width * height, WHAT)?;
    expect_end(r, WHAT)?;
    DepthMap::new(width, height, depth)
}

pub fn write_point_map(w: &mut impl Write, map: &PointMap, precision: Precision) -> Result<()> {
    write_header(w, POINT_MAP_MAGIC, precision, map.width, map.height)?;
    let samples = map
        .points
        .iter()
        .zip(&map.valid)
        .flat_map(|(p, &ok)| if ok { [p.x, p.y, p.z] } else { [f64::NAN; 3] });
    write_samples(w, precision, samples)
}

pub fn read_point_map(r: &mut impl Read) -> Result<PointMap> {
    const WHAT: &str = "point map";
    let (precision, width, height) = read_header(r, POINT_MAP_MAGIC, WHAT)?;
    let raw = read_samples(r, precision, 3 * width * height, WHAT)?;
    expect_end(r, WHAT)?;
    let mut points = Vec::with_capacity(width * height);
    let mut valid = Vec::with_capacity(width * height);
    for c in raw.chunks_exact(3) {
        let ok = c.iter().all(|x| x.is_finite());
        valid.push(ok);
        points.push(if ok { Vec3::new(c[0], c[1], c[2]) } else { Vec3::zeros() });
    }
    PointMap::new(width, height, points, valid)
}

pub fn write_sdf_map(w: &mut impl Write, map: &SignedDistanceMap, precision: Precision) -> Result<()> {
    write_header(w, SDF_MAGIC, precision, map.width, map.height)?;
    w.write_u8(map.confidence.is_some() as u8)?;
    let masked = |values: &[f64]| -> Vec<f64> {
        values.iter().zip(&map.valid).map(|(&x, &ok)| if ok { x } else { f64::NAN }).collect()
    };
    write_samples(w, precision, masked(&map.sdf).into_iter())?;
    if let Some(c) = &map.confidence {
        write_samples(w, precision, masked(c).into_iter())?;
    }
    Ok(())
}

pub fn read_sdf_map(r: &mut impl Read) -> Result<SignedDistanceMap> {
    const WHAT: &str = "signed distance map";
    let (precision, width, height) = read_header(r, SDF_MAGIC, WHAT)?;
    let flags = r.read_u8().map_err(|e| truncated(WHAT, e))?;
    if flags > 1 {
        return Err(Error::format(WHAT, format!("unknown flags {flags:#x}")));
    }
    let n = width * height;
    let mut sdf = read_samples(r, precision, n, WHAT)?;
    let confidence = if flags & 1 == 1 { Some(read_samples(r, precision, n, WHAT)?) } else { None };
    expect_end(r, WHAT)?;
    let valid: Vec<bool> = sdf.iter().map(|x| x.is_finite()).collect();
    for (x, &ok) in sdf.iter_mut().zip(&valid) {
        if !ok {
            *x = 0.0;
        }
    }
    let confidence = confidence.map(|c| c.into_iter().zip(&valid).map(|(x, &ok)| if ok { x } else { 1.0 }).collect());
    SignedDistanceMap::new(width, height, sdf, confidence, valid)
}
