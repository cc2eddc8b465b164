//! Triangle meshes with per-vertex color.

mod io;
mod topology;

pub use io::{format_sig9, load_mesh, parse_mesh, save_mesh, write_mesh};
pub use topology::{fill_holes, validate_disk_topology, vertex_adjacency, TopologyReport};

use crate::{Error, Result};

pub type Point3 = [f64; 3];
pub type Color = [f64; 3];
pub type Face = [usize; 3];

/// Triangle mesh. Faces are counter-clockwise when viewed from +Z, which is
/// also the facing direction of a scanned face.
///
/// Construction checks index range, distinct corners, finite positions and
/// colors in `[0, 1]`. Manifoldness and disk topology are reported by
/// [`validate_disk_topology`] instead of being enforced here.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point3>,
    colors: Vec<Color>,
    faces: Vec<Face>,
}

impl Mesh {
    pub fn new(vertices: Vec<Point3>, colors: Vec<Color>, faces: Vec<Face>) -> Result<Self> {
        if vertices.len() != colors.len() {
            return Err(Error::InvalidMesh(format!(
                "{} vertices but {} colors",
                vertices.len(),
                colors.len()
            )));
        }
        for (i, p) in vertices.iter().enumerate() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
            }
        }
        for (i, c) in colors.iter().enumerate() {
            if c.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::InvalidMesh(format!(
                    "color of vertex {i} is outside [0, 1]"
                )));
            }
        }
        let n = vertices.len();
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {i} references a vertex outside [0, {n})"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {i} repeats a vertex")));
            }
        }
        Ok(Mesh {
            vertices,
            colors,
            faces,
        })
    }

    /// Mesh with uniform mid-grey color.
    pub fn from_geometry(vertices: Vec<Point3>, faces: Vec<Face>) -> Result<Self> {
        let colors = vec![[0.5; 3]; vertices.len()];
        Self::new(vertices, colors, faces)
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Same connectivity and colors with new positions.
    pub fn with_positions(&self, vertices: Vec<Point3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} positions for {} vertices",
                vertices.len(),
                self.vertices.len()
            )));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMesh("non-finite position".into()));
        }
        Ok(Mesh {
            vertices,
            colors: self.colors.clone(),
            faces: self.faces.clone(),
        })
    }

    pub(crate) fn from_parts_unchecked(
        vertices: Vec<Point3>,
        colors: Vec<Color>,
        faces: Vec<Face>,
    ) -> Self {
        debug_assert_eq!(vertices.len(), colors.len());
        Mesh {
            vertices,
            colors,
            faces,
        }
    }

    pub fn into_parts(self) -> (Vec<Point3>, Vec<Color>, Vec<Face>) {
        (self.vertices, self.colors, self.faces)
    }

    /// Scaled copy: positions multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        self.with_positions(self.vertices.iter().map(|p| p.map(|c| c * s)).collect())
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f].map(|i| self.vertices[i]);
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn bounding_box(&self) -> Option<(Point3, Point3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), p| {
            (
                [lo[0].min(p[0]), lo[1].min(p[1]), lo[2].min(p[2])],
                [hi[0].max(p[0]), hi[1].max(p[1]), hi[2].max(p[2])],
            )
        }))
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        self.bounding_box()
            .map(|(lo, hi)| norm(sub(hi, lo)))
            .unwrap_or(0.0)
    }

    /// Unique undirected edges as `(min, max)` pairs, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| {
                [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])].map(|(a, b)| (a.min(b), a.max(b)))
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Median 3D length over unique edges; 0 for a mesh without faces.
    pub fn median_edge_length(&self) -> f64 {
        let mut lengths: Vec<f64> = self
            .edges()
            .into_iter()
            .map(|(a, b)| distance(self.vertices[a], self.vertices[b]))
            .collect();
        if lengths.is_empty() {
            return 0.0;
        }
        lengths.sort_by(f64::total_cmp);
        let m = lengths.len() / 2;
        if lengths.len() % 2 == 1 {
            lengths[m]
        } else {
            0.5 * (lengths[m - 1] + lengths[m])
        }
    }
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: Point3, b: Point3) -> f64 {
    norm(sub(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Mesh {
        Mesh::from_geometry(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_out_of_range_and_repeated_indices() {
        let v = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(Mesh::from_geometry(v.clone(), vec![[0, 1, 3]]).is_err());
        assert!(Mesh::from_geometry(v, vec![[0, 1, 1]]).is_err());
    }

    #[test]
    fn rejects_colors_outside_unit_interval() {
        let v = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let c = vec![[0.0; 3], [1.2, 0.0, 0.0], [0.0; 3]];
        assert!(Mesh::new(v, c, vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn triangle_measures() {
        let m = triangle();
        assert_eq!(m.face_area(0), 0.5);
        assert_eq!(m.edges(), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(m.median_edge_length(), 1.0);
        assert!((m.bounding_box_diagonal() - 2f64.sqrt()).abs() < 1e-15);
    }
}
