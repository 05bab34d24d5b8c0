//! Obstacle environments: unions of spheres plus optional half-planes, and
//! the five benchmark scenes.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kinematics::Dim;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Reverses the constraint: points must stay inside the sphere.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub keep_inside: bool,
}

impl Sphere {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        Self {
            center,
            radius,
            keep_inside: false,
        }
    }

    /// Signed clearance of an embedded point; negative means violation.
    pub fn clearance(&self, dim: Dim, point: &Vector3<f64>) -> f64 {
        let dist = (point - dim.embed(&self.center)).norm();
        if self.keep_inside {
            self.radius - dist
        } else {
            dist - self.radius
        }
    }
}

/// `x · normal <= offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfPlane {
    pub fn clearance(&self, dim: Dim, point: &Vector3<f64>) -> f64 {
        self.offset - dim.embed(&self.normal).dot(point)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub spheres: Vec<Sphere>,
    #[serde(default)]
    pub half_planes: Vec<HalfPlane>,
    /// Linear scale applied to the reference geometry.
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Environment {
    pub fn empty() -> Self {
        Self {
            name: "free".into(),
            scale: 1.0,
            ..Default::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty() && self.half_planes.is_empty()
    }

    pub fn validate(&self, dim: Dim) -> Result<()> {
        let d = dim.value();
        for (i, s) in self.spheres.iter().enumerate() {
            if s.center.len() != d {
                return Err(Error::Shape(format!("sphere {i} center is not in R^{d}")));
            }
            if !(s.radius > 0.0) {
                return Err(Error::Domain(format!("sphere {i} radius must be positive")));
            }
        }
        for (i, h) in self.half_planes.iter().enumerate() {
            if h.normal.len() != d {
                return Err(Error::Shape(format!("half-plane {i} normal is not in R^{d}")));
            }
            let norm = h.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!("half-plane {i} normal is not unit")));
            }
        }
        Ok(())
    }

    /// Smallest clearance of `point` over every obstacle and half-plane.
    pub fn clearance(&self, dim: Dim, point: &Vector3<f64>) -> f64 {
        self.spheres
            .iter()
            .map(|s| s.clearance(dim, point))
            .chain(self.half_planes.iter().map(|h| h.clearance(dim, point)))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvironmentKind {
    Octahedron,
    Cube,
    Icosahedron,
    Columns,
    Corridor,
}

impl EnvironmentKind {
    pub const ALL: [EnvironmentKind; 5] = [
        EnvironmentKind::Octahedron,
        EnvironmentKind::Cube,
        EnvironmentKind::Icosahedron,
        EnvironmentKind::Columns,
        EnvironmentKind::Corridor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvironmentKind::Octahedron => "octahedron",
            EnvironmentKind::Cube => "cube",
            EnvironmentKind::Icosahedron => "icosahedron",
            EnvironmentKind::Columns => "columns",
            EnvironmentKind::Corridor => "corridor",
        }
    }
}

impl fmt::Display for EnvironmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvironmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownEnvironment(s.to_string()))
    }
}

/// Reference segment count for environment geometry.
pub const REFERENCE_SEGMENTS: usize = 3;

// Reference geometry at n = 3 (robot reach 1.05 m at mid-extension).
const SOLID_RADIUS: f64 = 0.55;
const SOLID_SPHERE: f64 = 0.15;
const ICOSA_SPHERE: f64 = 0.12;

/// Builds one of the benchmark scenes around a robot base at the origin with
/// its backbone along +z. Geometry scales linearly with `n / 3` unless
/// `scale` overrides the factor.
pub fn make_environment(kind: EnvironmentKind, n: usize, scale: Option<f64>) -> Result<Environment> {
    if n == 0 {
        return Err(Error::Domain("environment needs n >= 1".into()));
    }
    let s = scale.unwrap_or(n as f64 / REFERENCE_SEGMENTS as f64);
    if !(s > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {s}")));
    }
    let unit_spheres: Vec<(Vector3<f64>, f64)> = match kind {
        EnvironmentKind::Octahedron => {
            let mut v = Vec::new();
            for axis in 0..3 {
                for sign in [1.0, -1.0] {
                    let mut c = Vector3::zeros();
                    c[axis] = sign * SOLID_RADIUS;
                    v.push((c, SOLID_SPHERE));
                }
            }
            v
        }
        EnvironmentKind::Cube => {
            let h = SOLID_RADIUS / 3f64.sqrt();
            let mut v = Vec::new();
            for x in [-h, h] {
                for y in [-h, h] {
                    for z in [-h, h] {
                        v.push((Vector3::new(x, y, z), SOLID_SPHERE));
                    }
                }
            }
            v
        }
        EnvironmentKind::Icosahedron => {
            let phi = 0.5 * (1.0 + 5f64.sqrt());
            let mut v = Vec::new();
            for a in [-1.0, 1.0] {
                for b in [-phi, phi] {
                    for p in [
                        Vector3::new(0.0, a, b),
                        Vector3::new(a, b, 0.0),
                        Vector3::new(b, 0.0, a),
                    ] {
                        v.push((p.normalize() * SOLID_RADIUS, ICOSA_SPHERE));
                    }
                }
            }
            v
        }
        EnvironmentKind::Columns => {
            // 7 vertical stacks of 6 spheres on a ring around the base
            let mut v = Vec::new();
            for k in 0..7 {
                let a = 2.0 * PI * k as f64 / 7.0;
                for i in 0..6 {
                    v.push((
                        Vector3::new(0.6 * a.cos(), 0.6 * a.sin(), 0.1 + 0.2 * i as f64),
                        0.09,
                    ));
                }
            }
            v
        }
        EnvironmentKind::Corridor => {
            // channel along x: two 9 x 11 walls and a 9 x 7 ceiling
            let mut v = Vec::new();
            for ix in 0..9 {
                let x = -0.6 + 0.15 * ix as f64;
                for wall in [-0.45, 0.45] {
                    for iz in 0..11 {
                        v.push((Vector3::new(x, wall, 0.12 * iz as f64), 0.08));
                    }
                }
                for iy in 0..7 {
                    v.push((Vector3::new(x, -0.36 + 0.12 * iy as f64, 1.25), 0.08));
                }
            }
            v
        }
    };
    Ok(Environment {
        name: kind.name().to_string(),
        spheres: unit_spheres
            .into_iter()
            .map(|(c, r)| Sphere::new((c * s).as_slice().to_vec(), r * s))
            .collect(),
        half_planes: Vec::new(),
        scale: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_sizes() {
        let counts: Vec<usize> = EnvironmentKind::ALL
            .iter()
            .map(|&k| make_environment(k, 3, None).unwrap().spheres.len())
            .collect();
        assert_eq!(counts, vec![6, 8, 12, 42, 261]);
    }

    #[test]
    fn octahedron_vertices() {
        let env = make_environment(EnvironmentKind::Octahedron, 3, None).unwrap();
        for s in &env.spheres {
            let nonzero: Vec<f64> = s.center.iter().copied().filter(|v| *v != 0.0).collect();
            assert_eq!(nonzero.len(), 1);
            assert!((nonzero[0].abs() - SOLID_RADIUS).abs() < 1e-15);
        }
    }

    #[test]
    fn scaling_is_linear() {
        let small = make_environment(EnvironmentKind::Cube, 3, None).unwrap();
        let big = make_environment(EnvironmentKind::Cube, 6, None).unwrap();
        for (a, b) in small.spheres.iter().zip(&big.spheres) {
            for (x, y) in a.center.iter().zip(&b.center) {
                assert!((2.0 * x - y).abs() < 1e-14);
            }
            assert!((2.0 * a.radius - b.radius).abs() < 1e-14);
        }
        assert!(make_environment(EnvironmentKind::Cube, 0, None).is_err());
        assert!("pyramid".parse::<EnvironmentKind>().is_err());
    }

    #[test]
    fn no_scene_swallows_the_base() {
        for kind in EnvironmentKind::ALL {
            let env = make_environment(kind, 3, None).unwrap();
            assert!(env.clearance(Dim::Spatial, &Vector3::zeros()) > 0.0, "{kind}");
        }
    }
}
