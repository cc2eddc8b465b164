use super::ParamMap;
use crate::mesh::{cross, dot, norm, sub, Mesh, Point3};

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` edges in degrees.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Fixed-width bins over `[lo, hi]`; values outside land in the end bins.
    pub fn build(values: impl Iterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Self {
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for v in values {
            let b = ((v - lo) / width).floor();
            let b = if b.is_nan() { 0 } else { (b.max(0.0) as usize).min(bins - 1) };
            counts[b] += 1;
        }
        Histogram { edges, counts }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistortionReport {
    /// `(2D angle − 3D angle)` in degrees per face corner, `3·f + corner`;
    /// `None` where the 3D triangle has zero area.
    pub per_corner_delta: Vec<Option<f64>>,
    /// 1° bins over [−90°, 90°], tails clamped.
    pub histogram: Histogram,
    pub mean_abs: f64,
    pub flipped_faces: usize,
}

fn corner_angles(p: [Point3; 3]) -> Option<[f64; 3]> {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let a = sub(p[(k + 1) % 3], p[k]);
        let b = sub(p[(k + 2) % 3], p[k]);
        let (na, nb) = (norm(a), norm(b));
        if !(na > 0.0 && nb > 0.0) {
            return None;
        }
        out[k] = (dot(a, b) / (na * nb)).clamp(-1.0, 1.0).acos();
    }
    Some(out)
}

fn has_area(p: [Point3; 3]) -> bool {
    norm(cross(sub(p[1], p[0]), sub(p[2], p[0]))) > 0.0
}

pub fn angle_distortion(mesh: &Mesh, map: &ParamMap) -> DistortionReport {
    let pos = mesh.vertices();
    let mut per_corner_delta = Vec::with_capacity(3 * mesh.face_count());
    for f in mesh.faces() {
        let p3 = f.map(|i| pos[i]);
        let a3 = if has_area(p3) { corner_angles(p3) } else { None };
        let a2 = corner_angles(f.map(|i| [map.uv[i][0], map.uv[i][1], 0.0]));
        for k in 0..3 {
            per_corner_delta.push(match (a3, a2) {
                (Some(a3), Some(a2)) => Some((a2[k] - a3[k]).to_degrees()),
                (Some(a3), None) => Some(-a3[k].to_degrees()),
                _ => None,
            });
        }
    }
    let present: Vec<f64> = per_corner_delta.iter().flatten().copied().collect();
    let mean_abs = if present.is_empty() {
        0.0
    } else {
        present.iter().map(|d| d.abs()).sum::<f64>() / present.len() as f64
    };
    DistortionReport {
        histogram: Histogram::build(present.iter().copied(), -90.0, 90.0, 180),
        per_corner_delta,
        mean_abs,
        flipped_faces: map.flipped_faces(mesh.faces()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::param::{harmonic_disk_map, WeightMode};

    #[test]
    fn identity_of_planar_mesh() {
        let m = fixtures::planar_disk(5);
        let map = ParamMap::new(m.vertices().iter().map(|p| [p[0], p[1]]).collect()).unwrap();
        let r = angle_distortion(&m, &map);
        assert_eq!(r.per_corner_delta.len(), 3 * m.face_count());
        assert!(r.mean_abs < 1e-10);
        assert_eq!(r.flipped_faces, 0);
        assert_eq!(r.histogram.counts.iter().sum::<usize>(), 3 * m.face_count());
    }

    #[test]
    fn similarity_and_rotation_invariance() {
        let m = fixtures::hemisphere(7);
        let map = harmonic_disk_map(&m, WeightMode::Cotangent).unwrap().map;
        let base = angle_distortion(&m, &map);
        for other in [map.scaled(2.0), map.rotated(1.234)] {
            let r = angle_distortion(&m, &other);
            for (a, b) in r.per_corner_delta.iter().zip(&base.per_corner_delta) {
                assert!((a.unwrap() - b.unwrap()).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn zero_area_corners_are_missing() {
        let m = Mesh::from_geometry(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2], [0, 1, 3]],
        )
        .unwrap();
        let map = ParamMap::new(vec![[0.0, 0.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]).unwrap();
        let r = angle_distortion(&m, &map);
        assert!(r.per_corner_delta[..3].iter().all(Option::is_none));
        assert!(r.per_corner_delta[3..].iter().all(Option::is_some));
        assert_eq!(r.histogram.counts.iter().sum::<usize>(), 3);
    }

    #[test]
    fn tails_are_clamped() {
        let h = Histogram::build([-200.0, 95.0, 0.5].into_iter(), -90.0, 90.0, 180);
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[179], 1);
        assert_eq!(h.counts[90], 1);
        assert_eq!(h.edges.len(), 181);
    }
}
