//! Deterministic synthetic meshes with closed-form ground truth.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::labels::Label;
use crate::mesh::{Face, Mesh, Point3};

/// `n × n` grid in the plane z = 0 with the given spacing. Vertex `(x, y)`
/// has index `y * n + x`; every cell is split along its rising diagonal.
pub fn plane_grid(n: usize, spacing: f64) -> Mesh {
    let mut vertices = Vec::with_capacity(n * n);
    let mut colors = Vec::with_capacity(n * n);
    let denom = (n.max(2) - 1) as f64;
    for y in 0..n {
        for x in 0..n {
            vertices.push([x as f64 * spacing, y as f64 * spacing, 0.0]);
            colors.push([x as f64 / denom, y as f64 / denom, 0.5]);
        }
    }
    let mut faces = Vec::with_capacity(2 * (n - 1) * (n - 1));
    for y in 0..n.saturating_sub(1) {
        for x in 0..n - 1 {
            let a = y * n + x;
            faces.push([a, a + 1, a + n + 1]);
            faces.push([a, a + n + 1, a + n]);
        }
    }
    Mesh::from_parts_unchecked(vertices, colors, faces)
}

/// Grid plane with independent uniform noise in `[-amplitude, amplitude]`
/// added to z. The true surface is z = 0.
pub fn noisy_plane(n: usize, spacing: f64, amplitude: f64, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = plane_grid(n, spacing);
    let (mut v, c, f) = grid.into_parts();
    for p in &mut v {
        p[2] = rng.gen_range(-amplitude..=amplitude);
    }
    Mesh::from_parts_unchecked(v, c, f)
}

/// Grid plane with its center vertex lifted to `height`. Returns the mesh
/// and the index of the lifted vertex.
pub fn spike_plane(n: usize, spacing: f64, height: f64) -> (Mesh, usize) {
    let (mut v, c, f) = plane_grid(n, spacing).into_parts();
    let spike = (n / 2) * n + n / 2;
    v[spike][2] = height;
    (Mesh::from_parts_unchecked(v, c, f), spike)
}

/// Unit-spacing grid with the center vertex and its six faces removed,
/// leaving an inner hole bounded by six vertices.
pub fn holed_grid(n: usize) -> Mesh {
    let (v, c, f) = plane_grid(n, 1.0).into_parts();
    let center = (n / 2) * n + n / 2;
    let remap = |i: usize| if i > center { i - 1 } else { i };
    let faces: Vec<Face> = f
        .into_iter()
        .filter(|t| !t.contains(&center))
        .map(|t| t.map(remap))
        .collect();
    let mut vertices = v;
    let mut colors = c;
    vertices.remove(center);
    colors.remove(center);
    Mesh::from_parts_unchecked(vertices, colors, faces)
}

/// Concentric-ring triangulation of the unit disk: ring `k` has `6k`
/// vertices at uniform angles. Returns positions through `place(k, angle)`.
fn ring_disk(rings: usize, place: impl Fn(usize, f64) -> Point3) -> (Vec<Point3>, Vec<Face>) {
    assert!(rings >= 1);
    let start = |k: usize| if k == 0 { 0 } else { 1 + 3 * k * (k - 1) };
    let mut vertices = vec![place(0, 0.0)];
    for k in 1..=rings {
        let m = 6 * k;
        for j in 0..m {
            vertices.push(place(k, 2.0 * PI * j as f64 / m as f64));
        }
    }
    let mut faces = Vec::with_capacity(6 * rings * rings);
    for j in 0..6 {
        faces.push([0, start(1) + j, start(1) + (j + 1) % 6]);
    }
    for k in 1..rings {
        let (m, mo) = (6 * k, 6 * (k + 1));
        let inner = |i: usize| start(k) + i % m;
        let outer = |j: usize| start(k + 1) + j % mo;
        let (mut i, mut j) = (0, 0);
        while i < m || j < mo {
            // compare (i + 1) / m with (j + 1) / mo exactly
            let advance_inner = j == mo || (i < m && (i + 1) * mo < (j + 1) * m);
            if advance_inner {
                faces.push([inner(i), outer(j), inner(i + 1)]);
                i += 1;
            } else {
                faces.push([inner(i), outer(j), outer(j + 1)]);
                j += 1;
            }
        }
    }
    (vertices, faces)
}

fn position_colors(vertices: &[Point3]) -> Vec<[f64; 3]> {
    vertices
        .iter()
        .map(|p| {
            [
                ((p[0] + 1.0) * 0.5).clamp(0.0, 1.0),
                ((p[1] + 1.0) * 0.5).clamp(0.0, 1.0),
                p[2].clamp(0.0, 1.0),
            ]
        })
        .collect()
}

/// Planar unit disk (z = 0) with `rings` concentric rings; boundary vertices
/// lie on the unit circle at uniform spacing.
pub fn planar_disk(rings: usize) -> Mesh {
    let (v, f) = ring_disk(rings, |k, a| {
        let r = k as f64 / rings as f64;
        [r * a.cos(), r * a.sin(), 0.0]
    });
    let c = position_colors(&v);
    Mesh::from_parts_unchecked(v, c, f)
}

/// Upper unit hemisphere (z ≥ 0) facing +Z. Ring `k` sits at polar angle
/// `(π/2)·k/rings`, so the equator is the boundary. `1 + 3·rings·(rings+1)`
/// vertices.
pub fn hemisphere(rings: usize) -> Mesh {
    let (v, f) = ring_disk(rings, |k, a| {
        let theta = FRAC_PI_2 * k as f64 / rings as f64;
        let (s, c) = theta.sin_cos();
        [s * a.cos(), s * a.sin(), c]
    });
    let c = position_colors(&v);
    Mesh::from_parts_unchecked(v, c, f)
}

/// Spherical cap on the unit sphere: all points within `radius` (radians)
/// of `center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cap {
    pub label: Label,
    pub center: Point3,
    pub radius: f64,
}

impl Cap {
    fn at(label: Label, polar: f64, azimuth_deg: f64, radius: f64) -> Self {
        let az = azimuth_deg.to_radians();
        Cap {
            label,
            center: [polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()],
            radius,
        }
    }

    pub fn contains(&self, p: Point3) -> bool {
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let d = (p[0] * self.center[0] + p[1] * self.center[1] + p[2] * self.center[2]) / n;
        d.clamp(-1.0, 1.0).acos() <= self.radius
    }

    /// Area on the unit sphere: `2π(1 − cos r)`.
    pub fn area(&self) -> f64 {
        2.0 * PI * (1.0 - self.radius.cos())
    }
}

/// Face-like layout of non-overlapping caps (eyebrows, eyes, nose, mouth)
/// on the +Z hemisphere with +Y pointing to the forehead.
pub fn face_caps() -> Vec<Cap> {
    vec![
        Cap::at(3, 0.0, 0.0, 0.22),
        Cap::at(2, 0.45, 60.0, 0.15),
        Cap::at(2, 0.45, 120.0, 0.15),
        Cap::at(1, 0.8, 65.0, 0.13),
        Cap::at(1, 0.8, 115.0, 0.13),
        Cap::at(4, 0.6, 270.0, 0.2),
    ]
}

fn label_at(caps: &[Cap], p: Point3) -> Label {
    caps.iter().find(|c| c.contains(p)).map_or(0, |c| c.label)
}

#[derive(Clone, Debug)]
pub struct PaintedHemisphere {
    pub mesh: Mesh,
    pub caps: Vec<Cap>,
    /// Label of the cap containing each vertex.
    pub vertex_labels: Vec<Label>,
    /// Label of the cap containing each face's centroid direction.
    pub face_labels: Vec<Label>,
}

pub fn painted_hemisphere(rings: usize) -> PaintedHemisphere {
    let mesh = hemisphere(rings);
    let caps = face_caps();
    let vertex_labels = mesh.vertices().iter().map(|&p| label_at(&caps, p)).collect();
    let face_labels = mesh
        .faces()
        .iter()
        .map(|f| {
            let [a, b, c] = f.map(|i| mesh.vertices()[i]);
            label_at(&caps, [a[0] + b[0] + c[0], a[1] + b[1] + c[1], a[2] + b[2] + c[2]])
        })
        .collect();
    PaintedHemisphere {
        mesh,
        caps,
        vertex_labels,
        face_labels,
    }
}

/// Stereographic projection from the south pole, `(x, y) / (1 + z)`: an
/// exactly conformal map of the upper unit hemisphere onto the unit disk.
pub fn stereographic(p: Point3) -> [f64; 2] {
    [p[0] / (1.0 + p[2]), p[1] / (1.0 + p[2])]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::validate_disk_topology;

    #[test]
    fn plane_is_flat() {
        assert!(plane_grid(12, 0.5).vertices().iter().all(|p| p[2] == 0.0));
    }

    #[test]
    fn hemisphere_on_unit_sphere() {
        let m = hemisphere(16);
        assert_eq!(m.vertex_count(), 1 + 3 * 16 * 17);
        for p in m.vertices() {
            assert!((p[0] * p[0] + p[1] * p[1] + p[2] * p[2] - 1.0).abs() <= 1e-12);
            assert!(p[2] >= 0.0);
        }
        let r = validate_disk_topology(&m).unwrap();
        assert!(r.is_disk());
        assert_eq!(r.boundary_loops[0].len(), 96);
    }

    #[test]
    fn ring_faces_are_counter_clockwise() {
        let m = planar_disk(9);
        for f in 0..m.face_count() {
            let [a, b, c] = m.faces()[f].map(|i| m.vertices()[i]);
            let s = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            assert!(s > 0.0, "face {f} is clockwise");
        }
    }

    #[test]
    fn painted_areas_match_caps() {
        let p = painted_hemisphere(64);
        for label in 1..=4u8 {
            let expected: f64 = p.caps.iter().filter(|c| c.label == label).map(Cap::area).sum();
            let got: f64 = (0..p.mesh.face_count())
                .filter(|&f| p.face_labels[f] == label)
                .map(|f| p.mesh.face_area(f))
                .sum();
            let rel = (got - expected).abs() / expected;
            assert!(rel <= 0.02, "label {label}: {got} vs {expected} ({rel})");
        }
    }

    #[test]
    fn noisy_plane_is_seeded() {
        let a = noisy_plane(8, 1.0, 0.1, 7);
        let b = noisy_plane(8, 1.0, 0.1, 7);
        let c = noisy_plane(8, 1.0, 0.1, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.vertices().iter().all(|p| p[2].abs() <= 0.1));
    }
}
