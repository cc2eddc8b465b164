//! Disk parameterization of a face mesh.
//!
//! [`harmonic_disk_map`] pins the boundary loop to the unit circle by arc
//! length and solves a discrete Laplace equation for the interior.
//! [`improve_conformality`] then corrects the inner region with a linear
//! Beltrami solve in the upper half-plane chart, [`align_rotation`] turns
//! the disk so the forehead points up, and [`angle_distortion`] measures the
//! result.

mod align;
mod beltrami;
mod distortion;
mod harmonic;
mod improve;

pub use align::{align_rotation, alignment_angle};
pub use beltrami::{
    beltrami_coefficient, flatten_triangle, lbs_triplets, mesh_beltrami, Complex,
};
pub use distortion::{angle_distortion, DistortionReport, Histogram};
pub use harmonic::{
    boundary_circle, cotangent_triplets, harmonic_disk_map, uniform_triplets, HarmonicMap,
    WeightMode,
};
pub use improve::{
    boundary_distance, improve_conformality, inner_faces, mean_abs_mu, Improvement,
};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::mesh::format_sig9;
use crate::{Error, Result};

pub type Uv = [f64; 2];

/// Per-vertex `(u, v)` in the closed unit disk; this is also the mapping
/// table between mesh vertices and image space.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamMap {
    pub uv: Vec<Uv>,
}

impl ParamMap {
    pub fn new(uv: Vec<Uv>) -> Result<Self> {
        if uv.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite uv coordinate".into()));
        }
        Ok(ParamMap { uv })
    }

    pub fn len(&self) -> usize {
        self.uv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uv.is_empty()
    }

    /// Counter-clockwise rotation about the origin.
    pub fn rotated(&self, angle: f64) -> ParamMap {
        let (s, c) = angle.sin_cos();
        ParamMap {
            uv: self
                .uv
                .iter()
                .map(|&[u, v]| [c * u - s * v, s * u + c * v])
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> ParamMap {
        ParamMap {
            uv: self.uv.iter().map(|p| p.map(|c| c * factor)).collect(),
        }
    }

    /// Signed area of each mapped triangle.
    pub fn signed_areas(&self, faces: &[[usize; 3]]) -> Vec<f64> {
        faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.uv[i]);
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
            })
            .collect()
    }

    /// Triangles with non-positive signed area.
    pub fn flipped_faces(&self, faces: &[[usize; 3]]) -> usize {
        self.signed_areas(faces).into_iter().filter(|&a| a <= 0.0).count()
    }

    /// Mapping table text: `<vertex_index> <u> <v>` per line, 0-based index,
    /// nine significant digits.
    pub fn to_table(&self) -> String {
        let mut s = String::with_capacity(self.uv.len() * 32);
        for (i, [u, v]) in self.uv.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {}", format_sig9(*u), format_sig9(*v));
        }
        s
    }

    pub fn parse_table(text: &str, origin: &str) -> Result<Self> {
        let mut uv = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.into(),
                line: n + 1,
                message,
            };
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 3 {
                return Err(err(format!("expected `index u v`, got {} fields", t.len())));
            }
            let idx: usize = t[0].parse().map_err(|_| err(format!("bad index `{}`", t[0])))?;
            if idx != uv.len() {
                return Err(err(format!("index {idx} out of sequence, expected {}", uv.len())));
            }
            let u: f64 = t[1].parse().map_err(|_| err(format!("bad number `{}`", t[1])))?;
            let v: f64 = t[2].parse().map_err(|_| err(format!("bad number `{}`", t[2])))?;
            uv.push([u, v]);
        }
        ParamMap::new(uv)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_table(&text, &path.display().to_string())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_table()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let m = ParamMap::new(vec![[0.5, -0.25], [1.0 / 3.0, 0.0], [-1.0, 1e-7]]).unwrap();
        let t = m.to_table();
        assert!(t.starts_with("0 0.5 -0.25\n1 0.333333333 0\n"));
        let back = ParamMap::parse_table(&t, "m").unwrap();
        assert_eq!(back.to_table(), t);
        assert!(ParamMap::parse_table("1 0 0\n", "m").is_err());
    }
}
