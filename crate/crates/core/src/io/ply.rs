//! Binary little-endian PLY point clouds: a single `vertex` element with
//! `x`, `y`, `z` and an optional `confidence` property.

use std::io::{BufRead, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::grid::Precision;
use crate::error::{Error, Result};
use crate::geom::{PointCloud, Vec3};

const WHAT: &str = "PLY file";

pub fn write_ply(
    w: &mut impl Write,
    cloud: &PointCloud,
    confidence: Option<&[f64]>,
    precision: Precision,
) -> Result<()> {
    if let Some(c) = confidence {
        if c.len() != cloud.len() {
            return Err(Error::InvalidInput(format!(
                "{} confidences for {} points",
                c.len(),
                cloud.len()
            )));
        }
    }
    let ty = match precision {
        Precision::F32 => "float",
        Precision::F64 => "double",
    };
    writeln!(w, "ply")?;
    writeln!(w, "format binary_little_endian 1.0")?;
    writeln!(w, "element vertex {}", cloud.len())?;
    for name in ["x", "y", "z"] {
        writeln!(w, "property {ty} {name}")?;
    }
    if confidence.is_some() {
        writeln!(w, "property {ty} confidence")?;
    }
    writeln!(w, "end_header")?;
    let put = |w: &mut dyn Write, x: f64| -> std::io::Result<()> {
        match precision {
            Precision::F32 => w.write_f32::<LittleEndian>(x as f32),
            Precision::F64 => w.write_f64::<LittleEndian>(x),
        }
    };
    for (i, p) in cloud.points.iter().enumerate() {
        for x in p.iter() {
            put(w, *x)?;
        }
        if let Some(c) = confidence {
            put(w, c[i])?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            other => return Err(Error::format(WHAT, format!("unknown property type '{other}'"))),
        })
    }

    fn read(self, r: &mut impl std::io::Read) -> std::io::Result<f64> {
        Ok(match self {
            Scalar::I8 => r.read_i8()? as f64,
            Scalar::U8 => r.read_u8()? as f64,
            Scalar::I16 => r.read_i16::<LittleEndian>()? as f64,
            Scalar::U16 => r.read_u16::<LittleEndian>()? as f64,
            Scalar::I32 => r.read_i32::<LittleEndian>()? as f64,
            Scalar::U32 => r.read_u32::<LittleEndian>()? as f64,
            Scalar::F32 => r.read_f32::<LittleEndian>()? as f64,
            Scalar::F64 => r.read_f64::<LittleEndian>()?,
        })
    }
}

/// Reads the vertex positions and, when present, the `confidence`
/// property. Other scalar vertex properties are skipped.
pub fn read_ply(r: &mut impl BufRead) -> Result<(PointCloud, Option<Vec<f64>>)> {
    let mut line = String::new();
    let mut next_line = |r: &mut dyn BufRead| -> Result<String> {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::format(WHAT, "header ended early"));
        }
        Ok(line.trim_end_matches(['\n', '\r']).to_string())
    };
    if next_line(r)? != "ply" {
        return Err(Error::format(WHAT, "missing 'ply' signature"));
    }
    let mut count: Option<usize> = None;
    let mut props: Vec<(String, Scalar)> = Vec::new();
    let mut in_vertex = false;
    loop {
        let l = next_line(r)?;
        let words: Vec<&str> = l.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            ["format", "binary_little_endian", _] => {}
            ["format", other, ..] => return Err(Error::format(WHAT, format!("unsupported format '{other}'"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", "vertex", n] => {
                if count.is_some() {
                    return Err(Error::format(WHAT, "duplicate vertex element"));
                }
                count = Some(n.parse().map_err(|_| Error::format(WHAT, format!("bad vertex count '{n}'")))?);
                in_vertex = true;
            }
            ["element", name, _] => return Err(Error::format(WHAT, format!("unsupported element '{name}'"))),
            ["property", "list", ..] => return Err(Error::format(WHAT, "list properties are not supported")),
            ["property", ty, name] if in_vertex => props.push((name.to_string(), Scalar::parse(ty)?)),
            _ => return Err(Error::format(WHAT, format!("unexpected header line '{l}'"))),
        }
    }
    let count = count.ok_or_else(|| Error::format(WHAT, "no vertex element"))?;
    let index = |name: &str| props.iter().position(|(n, _)| n == name);
    let (ix, iy, iz) = match (index("x"), index("y"), index("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(Error::format(WHAT, "vertex needs x, y and z")),
    };
    let ic = index("confidence");
    let eof = |e: std::io::Error| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::format(WHAT, "truncated vertex data")
        } else {
            Error::Io(e)
        }
    };
    let mut points = Vec::with_capacity(count.min(1 << 24));
    let mut confidence = ic.map(|_| Vec::with_capacity(count.min(1 << 24)));
    let mut row = vec![0.0; props.len()];
    for _ in 0..count {
        for (slot, (_, ty)) in row.iter_mut().zip(&props) {
            *slot = ty.read(r).map_err(eof)?;
        }
        points.push(Vec3::new(row[ix], row[iy], row[iz]));
        if let (Some(c), Some(i)) = (confidence.as_mut(), ic) {
            c.push(row[i]);
        }
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::format(WHAT, "trailing bytes after vertex data"));
    }
    Ok((PointCloud::new(points)?, confidence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let cloud = PointCloud::new(vec![Vec3::new(1.0, 2.0, 3.0)]).unwrap();
        let mut buf = Vec::new();
        write_ply(&mut buf, &cloud, Some(&[0.5]), Precision::F32).unwrap();
        let header = "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty float confidence\nend_header\n";
        assert!(buf.starts_with(header.as_bytes()));
        assert_eq!(buf.len(), header.len() + 16);
        let (back, conf) = read_ply(&mut &buf[..]).unwrap();
        assert_eq!(back, cloud);
        assert_eq!(conf, Some(vec![0.5]));
    }

    #[test]
    fn skips_unknown_scalar_properties() {
        let mut buf = b"ply\nformat binary_little_endian 1.0\ncomment made by hand\nelement vertex 1\nproperty uchar red\nproperty float x\nproperty float y\nproperty float z\nend_header\n".to_vec();
        buf.push(200);
        for x in [1.0f32, -2.0, 0.25] {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        let (cloud, conf) = read_ply(&mut &buf[..]).unwrap();
        assert_eq!(cloud.points, vec![Vec3::new(1.0, -2.0, 0.25)]);
        assert!(conf.is_none());
    }

    #[test]
    fn rejects_malformed() {
        for text in [
            "plx\n",
            "ply\nformat ascii 1.0\nelement vertex 0\nend_header\n",
            "ply\nformat binary_little_endian 1.0\nelement face 1\nend_header\n",
            "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nend_header\n",
            "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        ] {
            assert!(matches!(read_ply(&mut text.as_bytes()), Err(Error::Format { .. })), "{text}");
        }
    }

    proptest! {
        #[test]
        fn round_trip(points in prop::collection::vec(prop::array::uniform3(-1e6f64..1e6), 0..40), conf in any::<bool>()) {
            let cloud = PointCloud::new(points.iter().map(|p| Vec3::from(*p)).collect()).unwrap();
            let c: Vec<f64> = (0..cloud.len()).map(|i| i as f64 * 0.5).collect();
            let mut buf = Vec::new();
            write_ply(&mut buf, &cloud, conf.then_some(&c[..]), Precision::F64).unwrap();
            let (back, back_conf) = read_ply(&mut &buf[..]).unwrap();
            prop_assert_eq!(back, cloud.clone());
            prop_assert_eq!(back_conf, conf.then(|| c.clone()));
            // f32: the second write is byte-identical
            let mut b32 = Vec::new();
            write_ply(&mut b32, &cloud, None, Precision::F32).unwrap();
            let (once, _) = read_ply(&mut &b32[..]).unwrap();
            let mut again = Vec::new();
            write_ply(&mut again, &once, None, Precision::F32).unwrap();
            prop_assert_eq!(b32, again);
        }
    }
}
