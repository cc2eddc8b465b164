//! Face images and label images over the unit disk, and label re-mapping.
//!
//! The disk inscribes the image square: pixel `(c, r)` (row 0 at the top)
//! has its center at `u = (c + 0.5)/W·2 − 1`, `v = 1 − (r + 0.5)/H·2`. A
//! pixel is covered when its center lies in some mapped triangle.

mod io;
mod locator;

pub use io::{
    decode_face_image, decode_label_image, encode_face_image, encode_label_image, export_depth_png,
    export_rgb_png, read_face_image, read_label_image, write_face_image, write_label_image,
};
pub use locator::{barycentric, Hit, TriangleLocator};

use log::warn;
use rayon::prelude::*;

use crate::labels::{Label, NUM_CLASSES};
use crate::param::{ParamMap, Uv};
use crate::{Error, Mesh, Result};

/// R, G, B, D.
pub const CHANNELS: usize = 4;

pub const MIN_SIZE: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct FaceImage {
    pub width: usize,
    pub height: usize,
    /// Planar row-major R, G, B and normalized depth, all in [0, 1].
    pub channels: [Vec<f32>; CHANNELS],
    pub coverage: Vec<bool>,
}

impl FaceImage {
    pub fn from_parts(
        width: usize,
        height: usize,
        channels: [Vec<f32>; CHANNELS],
        coverage: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height;
        if coverage.len() != n || channels.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch(format!("planes do not match {width}x{height}")));
        }
        for (ci, plane) in channels.iter().enumerate() {
            for (i, &v) in plane.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Format(format!("channel {ci} pixel {i}: value {v} outside [0, 1]")));
                }
                if !coverage[i] && v != 0.0 {
                    return Err(Error::Format(format!("channel {ci} pixel {i}: uncovered but nonzero")));
                }
            }
        }
        Ok(FaceImage {
            width,
            height,
            channels,
            coverage,
        })
    }

    pub fn covered_count(&self) -> usize {
        self.coverage.iter().filter(|&&c| c).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelImage {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<Label>,
    /// All true for images read from disk; the file format has no mask.
    pub coverage: Vec<bool>,
}

impl LabelImage {
    /// Every pixel covered and set to `label`.
    pub fn filled(width: usize, height: usize, label: Label) -> Self {
        LabelImage {
            width,
            height,
            labels: vec![label; width * height],
            coverage: vec![true; width * height],
        }
    }

    pub fn get(&self, col: usize, row: usize) -> Label {
        self.labels[row * self.width + col]
    }
}

pub fn pixel_center(col: usize, row: usize, width: usize, height: usize) -> Uv {
    [
        (col as f64 + 0.5) / width as f64 * 2.0 - 1.0,
        1.0 - (row as f64 + 0.5) / height as f64 * 2.0,
    ]
}

/// Pixel `(col, row)` containing `p`, clamped to the image.
pub fn pixel_of(p: Uv, width: usize, height: usize) -> (usize, usize) {
    let clamp = |x: f64, n: usize| (x.floor().max(0.0) as usize).min(n - 1);
    (
        clamp((p[0] + 1.0) * 0.5 * width as f64, width),
        clamp((1.0 - p[1]) * 0.5 * height as f64, height),
    )
}

fn check_inputs(mesh: &Mesh, map: &ParamMap, width: usize, height: usize) -> Result<()> {
    if width < MIN_SIZE || height < MIN_SIZE {
        return Err(Error::InvalidParameter(format!(
            "image size {width}x{height} is below {MIN_SIZE}x{MIN_SIZE}"
        )));
    }
    if map.len() != mesh.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "map has {} entries for {} vertices",
            map.len(),
            mesh.vertex_count()
        )));
    }
    Ok(())
}

/// Containing triangle of every pixel center, row-major.
pub fn pixel_hits(locator: &TriangleLocator, width: usize, height: usize) -> Vec<Option<Hit>> {
    (0..height)
        .into_par_iter()
        .flat_map_iter(|r| (0..width).map(move |c| locator.locate(pixel_center(c, r, width, height))))
        .collect()
}

/// Renders colors and normalized depth by barycentric interpolation.
pub fn rasterize(mesh: &Mesh, map: &ParamMap, width: usize, height: usize) -> Result<FaceImage> {
    check_inputs(mesh, map, width, height)?;
    let locator = TriangleLocator::new(&map.uv, mesh.faces());
    let hits = pixel_hits(&locator, width, height);
    let (pos, col, faces) = (mesh.vertices(), mesh.colors(), mesh.faces());

    let interp = |h: &Hit, f: &dyn Fn(usize) -> f64| -> f64 {
        let face = faces[h.face];
        (0..3).map(|k| h.weights[k] * f(face[k])).sum()
    };
    let z: Vec<Option<f64>> = hits.par_iter().map(|h| h.as_ref().map(|h| interp(h, &|v| pos[v][2]))).collect();
    let (zmin, zmax) = z
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let flat = !(zmax > zmin);
    if flat && zmin.is_finite() {
        warn!("depth range is empty; depth channel set to 0.5");
    }

    let n = width * height;
    let mut channels: [Vec<f32>; CHANNELS] = std::array::from_fn(|_| vec![0.0; n]);
    for (i, h) in hits.iter().enumerate() {
        let Some(h) = h else { continue };
        for (c, plane) in channels.iter_mut().take(3).enumerate() {
            plane[i] = interp(h, &|v| col[v][c]).clamp(0.0, 1.0) as f32;
        }
        let d = if flat { 0.5 } else { (z[i].unwrap() - zmin) / (zmax - zmin) };
        channels[3][i] = d.clamp(0.0, 1.0) as f32;
    }
    Ok(FaceImage {
        width,
        height,
        channels,
        coverage: hits.iter().map(Option::is_some).collect(),
    })
}

/// Each covered pixel takes the label of the corner with the largest
/// barycentric weight (ties to the lower vertex index); uncovered pixels
/// are 0.
pub fn rasterize_labels(
    mesh: &Mesh,
    map: &ParamMap,
    vertex_labels: &[Label],
    width: usize,
    height: usize,
) -> Result<LabelImage> {
    check_inputs(mesh, map, width, height)?;
    if vertex_labels.len() != mesh.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} vertices",
            vertex_labels.len(),
            mesh.vertex_count()
        )));
    }
    if let Some(bad) = vertex_labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
        return Err(Error::InvalidParameter(format!("label {bad} is not in 0..{NUM_CLASSES}")));
    }
    let locator = TriangleLocator::new(&map.uv, mesh.faces());
    let hits = pixel_hits(&locator, width, height);
    let faces = mesh.faces();
    let labels = hits
        .iter()
        .map(|h| {
            let Some(h) = h else { return 0 };
            let face = faces[h.face];
            let best = (0..3)
                .max_by(|&a, &b| {
                    h.weights[a]
                        .total_cmp(&h.weights[b])
                        .then(face[b].cmp(&face[a]))
                })
                .unwrap();
            vertex_labels[face[best]]
        })
        .collect();
    Ok(LabelImage {
        width,
        height,
        labels,
        coverage: hits.iter().map(Option::is_some).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Remap {
    pub vertex_labels: Vec<Label>,
    pub face_labels: Vec<Label>,
    /// Vertices whose pixel is not covered by the mapped mesh; labeled 0.
    pub uncovered_vertices: usize,
}

/// Reads labels back through the mapping: a vertex takes the label of the
/// pixel containing its (u, v), a face that of the pixel containing its
/// parameter-space centroid. Coverage is recomputed from the mesh, so it
/// does not depend on the mask carried by `pred`.
pub fn remap_labels(mesh: &Mesh, map: &ParamMap, pred: &LabelImage) -> Result<Remap> {
    check_inputs(mesh, map, pred.width, pred.height)?;
    if pred.labels.len() != pred.width * pred.height {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for a {}x{} image",
            pred.labels.len(),
            pred.width,
            pred.height
        )));
    }
    let (w, h) = (pred.width, pred.height);
    let locator = TriangleLocator::new(&map.uv, mesh.faces());
    let mut uncovered = 0;
    let vertex_labels = map
        .uv
        .iter()
        .map(|&p| {
            let (c, r) = pixel_of(p, w, h);
            if locator.locate(pixel_center(c, r, w, h)).is_none() {
                uncovered += 1;
                0
            } else {
                pred.get(c, r)
            }
        })
        .collect();
    let face_labels = mesh
        .faces()
        .iter()
        .map(|f| {
            let [a, b, c] = f.map(|i| map.uv[i]);
            let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            let (col, row) = pixel_of(centroid, w, h);
            pred.get(col, row)
        })
        .collect();
    if uncovered > 0 {
        warn!("{uncovered} vertices fall on uncovered pixels and were labeled 0");
    }
    Ok(Remap {
        vertex_labels,
        face_labels,
        uncovered_vertices: uncovered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::param::{align_rotation, harmonic_disk_map, WeightMode};

    fn planar_map(mesh: &Mesh) -> ParamMap {
        ParamMap::new(mesh.vertices().iter().map(|p| [p[0], p[1]]).collect()).unwrap()
    }

    fn rgb_triangle() -> Mesh {
        Mesh::new(
            vec![[-0.9, -0.9, 0.0], [0.9, -0.9, 0.0], [0.0, 0.9, 0.0]],
            vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn pixel_convention() {
        assert_eq!(pixel_center(0, 0, 4, 4), [-0.75, 0.75]);
        assert_eq!(pixel_center(3, 3, 4, 4), [0.75, -0.75]);
        for (c, r) in [(0, 0), (2, 1), (3, 3)] {
            assert_eq!(pixel_of(pixel_center(c, r, 4, 4), 4, 4), (c, r));
        }
        assert_eq!(pixel_of([1.0, -1.0], 4, 4), (3, 3));
        assert_eq!(pixel_of([-5.0, 5.0], 4, 4), (0, 0));
    }

    #[test]
    fn barycenter_reads_thirds() {
        // with an odd size the barycenter (0, -0.3) is not a pixel center,
        // so probe the pixel whose center is the barycenter of a triangle
        // placed around it
        let (w, h) = (20, 20);
        let p = pixel_center(10, 13, w, h);
        let m = rgb_triangle();
        let shift = [p[0] - 0.0, p[1] - (-0.3)];
        let map = ParamMap::new(
            m.vertices().iter().map(|v| [v[0] + shift[0], v[1] + shift[1]]).collect(),
        )
        .unwrap();
        let img = rasterize(&m, &map, w, h).unwrap();
        let i = 13 * w + 10;
        assert!(img.coverage[i]);
        for c in 0..3 {
            assert!((img.channels[c][i] - 1.0 / 3.0).abs() < 1e-6, "{}", img.channels[c][i]);
        }
    }

    #[test]
    fn constant_color_everywhere() {
        let base = fixtures::planar_disk(6);
        let (v, _, f) = base.clone().into_parts();
        let colors = vec![[0.25, 0.5, 0.75]; v.len()];
        let m = Mesh::new(v, colors, f).unwrap();
        let img = rasterize(&m, &planar_map(&m), 64, 64).unwrap();
        assert!(img.covered_count() > 0);
        for i in 0..64 * 64 {
            let expect = if img.coverage[i] { [0.25, 0.5, 0.75, 0.5] } else { [0.0; 4] };
            for c in 0..CHANNELS {
                assert_eq!(img.channels[c][i], expect[c] as f32);
            }
        }
    }

    #[test]
    fn tilted_plane_depth_is_a_ramp() {
        let base = fixtures::planar_disk(10);
        let v: Vec<_> = base.vertices().iter().map(|p| [p[0], p[1], p[0]]).collect();
        let m = base.with_positions(v).unwrap();
        let (w, h) = (128, 128);
        let img = rasterize(&m, &planar_map(&m), w, h).unwrap();
        let covered: Vec<usize> = (0..w * h).filter(|&i| img.coverage[i]).collect();
        let us: Vec<f64> = covered.iter().map(|&i| pixel_center(i % w, i / w, w, h)[0]).collect();
        let (lo, hi) = us.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &u| (a.min(u), b.max(u)));
        for (&i, &u) in covered.iter().zip(&us) {
            let expected = (u - lo) / (hi - lo);
            assert!((img.channels[3][i] as f64 - expected).abs() <= 1.0 / 512.0);
        }
    }

    #[test]
    fn uncovered_pixels_are_zero_and_channels_bounded() {
        let m = fixtures::hemisphere(12);
        let map = harmonic_disk_map(&m, WeightMode::Cotangent).unwrap().map;
        let img = rasterize(&m, &map, 48, 40).unwrap();
        assert!(FaceImage::from_parts(img.width, img.height, img.channels.clone(), img.coverage.clone()).is_ok());
        // corners of the square are outside the disk
        assert!(!img.coverage[0] && !img.coverage[47]);
    }

    #[test]
    fn rejects_small_images_and_mismatched_maps() {
        let m = rgb_triangle();
        assert!(rasterize(&m, &planar_map(&m), 15, 64).is_err());
        let short = ParamMap::new(vec![[0.0, 0.0]]).unwrap();
        assert!(rasterize(&m, &short, 64, 64).is_err());
        assert!(rasterize_labels(&m, &planar_map(&m), &[0, 1], 64, 64).is_err());
        assert!(rasterize_labels(&m, &planar_map(&m), &[0, 1, 7], 64, 64).is_err());
    }

    #[test]
    fn label_rule_follows_largest_weight() {
        let m = rgb_triangle();
        let img = rasterize_labels(&m, &planar_map(&m), &[1, 1, 2], 64, 64).unwrap();
        let c = m.vertices();
        for i in 0..64 * 64 {
            if !img.coverage[i] {
                assert_eq!(img.labels[i], 0);
                continue;
            }
            let p = pixel_center(i % 64, i / 64, 64, 64);
            let w = barycentric(&[[c[0][0], c[0][1]], [c[1][0], c[1][1]], [c[2][0], c[2][1]]], p).unwrap();
            let expected = if w[2] > w[0] && w[2] > w[1] { 2 } else { 1 };
            assert_eq!(img.labels[i], expected);
        }
        let all3 = rasterize_labels(&m, &planar_map(&m), &[3, 3, 3], 64, 64).unwrap();
        assert!(all3.labels.iter().zip(&all3.coverage).all(|(&l, &c)| l == if c { 3 } else { 0 }));
    }

    #[test]
    fn label_areas_match_parameter_space_areas() {
        // the largest-weight region of each corner is exactly a third of the
        // triangle, so label area in parameter space is a sum of thirds
        let m = fixtures::hemisphere(30);
        let map = align_rotation(&m, &harmonic_disk_map(&m, WeightMode::Cotangent).unwrap().map);
        let labels: Vec<Label> = m
            .vertices()
            .iter()
            .map(|p| (((p[0] * 3.0).floor() + (p[1] * 3.0).floor()).rem_euclid(2.0) as u8) * 2 + 1)
            .collect();
        let mut area = [0.0; NUM_CLASSES];
        for (f, a) in m.faces().iter().zip(map.signed_areas(m.faces())) {
            for &v in f {
                area[labels[v] as usize] += a / 3.0;
            }
        }
        let total: f64 = area.iter().sum();
        let (w, h) = (256, 256);
        let img = rasterize_labels(&m, &map, &labels, w, h).unwrap();
        let covered = img.coverage.iter().filter(|&&c| c).count() as f64;
        for l in [1usize, 3] {
            let px = img.labels.iter().zip(&img.coverage).filter(|(&x, &c)| c && x as usize == l).count() as f64;
            let (got, want) = (px / covered, area[l] / total);
            assert!(((got - want) / want).abs() <= 0.02, "label {l}: {got} vs {want}");
        }
    }

    #[test]
    fn painted_hemisphere_round_trip() {
        let ph = fixtures::painted_hemisphere(40);
        let m = &ph.mesh;
        let map = align_rotation(m, &harmonic_disk_map(m, WeightMode::Cotangent).unwrap().map);
        let img = rasterize_labels(m, &map, &ph.vertex_labels, 256, 256).unwrap();
        let back = remap_labels(m, &map, &img).unwrap();
        let agree = back.vertex_labels.iter().zip(&ph.vertex_labels).filter(|(a, b)| a == b).count();
        assert!(agree as f64 >= 0.99 * m.vertex_count() as f64, "{agree}/{}", m.vertex_count());

        // idempotent under re-rasterization
        let again = rasterize_labels(m, &map, &back.vertex_labels, 256, 256).unwrap();
        let back2 = remap_labels(m, &map, &again).unwrap();
        let same = back2.vertex_labels.iter().zip(&back.vertex_labels).filter(|(a, b)| a == b).count();
        assert!(same as f64 >= 0.99 * m.vertex_count() as f64);
    }

    #[test]
    fn constant_prediction_labels_everything() {
        let m = fixtures::hemisphere(8);
        let map = harmonic_disk_map(&m, WeightMode::Cotangent).unwrap().map;
        let out = remap_labels(&m, &map, &LabelImage::filled(64, 64, 2)).unwrap();
        assert!(out.face_labels.iter().all(|&l| l == 2));
        let covered = out.vertex_labels.iter().filter(|&&l| l == 2).count();
        assert_eq!(covered + out.uncovered_vertices, m.vertex_count());
        assert!(out.vertex_labels.iter().all(|&l| l == 2 || l == 0));
    }

    #[test]
    fn face_inside_one_pixel_takes_that_pixel() {
        // a tiny face near the center, entirely inside pixel (8, 7) of 16x16
        let c = pixel_center(8, 7, 16, 16);
        let m = Mesh::from_geometry(
            vec![[c[0] - 0.01, c[1] - 0.01, 0.0], [c[0] + 0.01, c[1] - 0.01, 0.0], [c[0], c[1] + 0.01, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let mut pred = LabelImage::filled(16, 16, 0);
        pred.labels[7 * 16 + 8] = 4;
        let out = remap_labels(&m, &planar_map(&m), &pred).unwrap();
        assert_eq!(out.face_labels, vec![4]);
        assert_eq!(out.vertex_labels, vec![4, 4, 4]);
    }

    #[test]
    fn resolution_consistent() {
        let m = fixtures::hemisphere(24);
        let map = align_rotation(&m, &harmonic_disk_map(&m, WeightMode::Cotangent).unwrap().map);
        let lo = rasterize(&m, &map, 256, 256).unwrap();
        let hi = rasterize(&m, &map, 512, 512).unwrap();
        for c in 0..CHANNELS {
            let mut diff = 0.0;
            for r in 0..256 {
                for col in 0..256 {
                    let avg: f32 = [(0, 0), (0, 1), (1, 0), (1, 1)]
                        .iter()
                        .map(|(dr, dc)| hi.channels[c][(2 * r + dr) * 512 + 2 * col + dc])
                        .sum::<f32>()
                        / 4.0;
                    diff += (avg - lo.channels[c][r * 256 + col]).abs() as f64;
                }
            }
            let mean = diff / (256.0 * 256.0);
            assert!(mean <= 0.02, "channel {c}: {mean}");
        }
    }

    #[test]
    fn deterministic() {
        let m = fixtures::hemisphere(16);
        let map = harmonic_disk_map(&m, WeightMode::Cotangent).unwrap().map;
        let a = encode_face_image(&rasterize(&m, &map, 100, 90).unwrap());
        let b = encode_face_image(&rasterize(&m, &map, 100, 90).unwrap());
        assert_eq!(a, b);
    }
}
