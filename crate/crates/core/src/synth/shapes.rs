//! Building footprints with a prescribed set of vertical mirror lines,
//! extruded into open-bottomed prisms with a pyramid roof.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    BoxFacade,
    CrossPlan,
    OctagonTower,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::BoxFacade, Shape::CrossPlan, Shape::OctagonTower];

    /// Symmetry counts this shape can be built with.
    pub fn symmetry_counts(self) -> &'static [usize] {
        match self {
            Shape::BoxFacade | Shape::CrossPlan => &[1, 2, 4],
            Shape::OctagonTower => &[1, 2, 4, 8],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::BoxFacade => "box-facade",
            Shape::CrossPlan => "cross-plan",
            Shape::OctagonTower => "octagon-tower",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|shape| shape.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown shape '{s}'")))
    }
}

/// Every valid `(shape, symmetry count)` combination.
pub fn all_variants() -> Vec<(Shape, usize)> {
    Shape::ALL
        .into_iter()
        .flat_map(|s| s.symmetry_counts().iter().map(move |&k| (s, k)))
        .collect()
}

pub(crate) struct Building {
    /// Counter-clockwise footprint in the ground plane.
    pub footprint: Vec<[f64; 2]>,
    pub wall_height: f64,
    pub roof_rise: f64,
    /// Angles of the vertical mirror lines through the z axis, radians.
    pub mirror_angles: Vec<f64>,
}

fn radial(radii: &[f64]) -> Vec<[f64; 2]> {
    let n = radii.len() as f64;
    radii
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let a = 2.0 * PI * i as f64 / n;
            [r * a.cos(), r * a.sin()]
        })
        .collect()
}

fn cross(east: f64, west: f64, north: f64, south: f64, w: f64) -> Vec<[f64; 2]> {
    vec![
        [east, -w],
        [east, w],
        [w, w],
        [w, north],
        [-w, north],
        [-w, w],
        [-west, w],
        [-west, -w],
        [-w, -w],
        [-w, -south],
        [w, -south],
        [w, -w],
    ]
}

fn rectangle(a: f64, b: f64) -> Vec<[f64; 2]> {
    vec![[-a, -b], [a, -b], [a, b], [-a, b]]
}

pub(crate) fn building(shape: Shape, k: usize) -> Result<Building> {
    if !shape.symmetry_counts().contains(&k) {
        return Err(Error::InvalidInput(format!(
            "{shape} cannot have {k} symmetry planes (allowed: {:?})",
            shape.symmetry_counts()
        )));
    }
    let footprint = match (shape, k) {
        (Shape::BoxFacade, 1) => {
            // rectangle with a porch centered on the east wall
            let (a, b, p, q) = (1.0, 0.6, 0.25, 0.3);
            vec![[-a, -b], [a, -b], [a, -p], [a + q, -p], [a + q, p], [a, p], [a, b], [-a, b]]
        }
        (Shape::BoxFacade, 2) => rectangle(1.0, 0.6),
        (Shape::BoxFacade, _) => rectangle(0.8, 0.8),
        (Shape::CrossPlan, 1) => cross(0.7, 1.3, 0.6, 0.6, 0.3),
        (Shape::CrossPlan, 2) => cross(1.0, 1.0, 0.6, 0.6, 0.3),
        (Shape::CrossPlan, _) => cross(1.0, 1.0, 1.0, 1.0, 0.3),
        (Shape::OctagonTower, 1) => radial(&[1.0, 0.85, 0.7, 0.8, 0.6, 0.8, 0.7, 0.85]),
        (Shape::OctagonTower, 2) => radial(&[1.0, 0.8, 0.65, 0.8, 1.0, 0.8, 0.65, 0.8]),
        (Shape::OctagonTower, 4) => radial(&[1.0, 0.75, 1.0, 0.75, 1.0, 0.75, 1.0, 0.75]),
        (Shape::OctagonTower, _) => radial(&[1.0; 8]),
    };
    let (wall_height, roof_rise) = match shape {
        Shape::OctagonTower => (2.0, 0.8),
        _ => (1.0, 0.5),
    };
    let mirror_angles = (0..k).map(|i| PI * i as f64 / k as f64).collect();
    Ok(Building {
        footprint,
        wall_height,
        roof_rise,
        mirror_angles,
    })
}

impl Building {
    pub fn apex(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.wall_height + self.roof_rise)
    }

    pub fn triangles(&self) -> Vec<[Vec3; 3]> {
        let n = self.footprint.len();
        let h = self.wall_height;
        let apex = self.apex();
        let mut out = Vec::with_capacity(3 * n);
        for i in 0..n {
            let [ax, ay] = self.footprint[i];
            let [bx, by] = self.footprint[(i + 1) % n];
            let (a0, b0) = (Vec3::new(ax, ay, 0.0), Vec3::new(bx, by, 0.0));
            let (a1, b1) = (Vec3::new(ax, ay, h), Vec3::new(bx, by, h));
            out.push([a0, b0, b1]);
            out.push([a0, b1, a1]);
            out.push([a1, b1, apex]);
        }
        out
    }

    /// Unit normals of the mirror planes (all through the z axis).
    pub fn mirror_normals(&self) -> Vec<Vec3> {
        self.mirror_angles
            .iter()
            .map(|a| Vec3::new(-a.sin(), a.cos(), 0.0))
            .collect()
    }

    /// All compositions of the mirrors (the dihedral group they generate).
    pub fn symmetry_group(&self) -> Vec<Mat3> {
        let generators: Vec<Mat3> = self
            .mirror_normals()
            .iter()
            .map(|n| Mat3::identity() - n * n.transpose() * 2.0)
            .collect();
        let mut group = vec![Mat3::identity()];
        let mut frontier = 0;
        while frontier < group.len() {
            let g = group[frontier];
            frontier += 1;
            for m in &generators {
                let h = m * g;
                if !group.iter().any(|e| (e - h).abs().max() < 1e-9) {
                    group.push(h);
                }
            }
        }
        group
    }
}
