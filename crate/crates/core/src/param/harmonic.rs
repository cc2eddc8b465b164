use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use log::{info, warn};

use super::{ParamMap, Uv};
use crate::mesh::{cross, distance, dot, norm, sub, validate_disk_topology, Face, Mesh, Point3};
use crate::sparse::{solve_dirichlet, CgSettings};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    /// `½(cot α + cot β)` per edge.
    Cotangent,
    /// Unit weight per edge (Tutte embedding).
    Uniform,
}

impl std::str::FromStr for WeightMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cotangent" => Ok(WeightMode::Cotangent),
            "uniform" => Ok(WeightMode::Uniform),
            other => Err(format!("unknown weight mode `{other}` (cotangent|uniform)")),
        }
    }
}

impl std::fmt::Display for WeightMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WeightMode::Cotangent => "cotangent",
            WeightMode::Uniform => "uniform",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicMap {
    pub map: ParamMap,
    /// Weights actually used; cotangent requests fall back to uniform when
    /// negative weights produce folded triangles.
    pub weights: WeightMode,
}

/// Cotangent stiffness triplets (positive diagonal, `-w_ij` off-diagonal).
pub fn cotangent_triplets(positions: &[Point3], faces: &[Face]) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::with_capacity(faces.len() * 12);
    for (fi, f) in faces.iter().enumerate() {
        let p = f.map(|i| positions[i]);
        let double_area = norm(cross(sub(p[1], p[0]), sub(p[2], p[0])));
        if !(double_area > 0.0) {
            warn!("face {fi} is degenerate; skipped in the Laplacian");
            continue;
        }
        for k in 0..3 {
            // angle at corner k is opposite edge (i, j)
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let cot = dot(sub(p[i], p[k]), sub(p[j], p[k])) / double_area;
            let w = 0.5 * cot;
            let (a, b) = (f[i], f[j]);
            t.extend([(a, a, w), (b, b, w), (a, b, -w), (b, a, -w)]);
        }
    }
    t
}

pub fn uniform_triplets(mesh: &Mesh) -> Vec<(usize, usize, f64)> {
    mesh.edges()
        .into_iter()
        .flat_map(|(a, b)| [(a, a, 1.0), (b, b, 1.0), (a, b, -1.0), (b, a, -1.0)])
        .collect()
}

/// Places an oriented boundary loop on the unit circle by cumulative 3D
/// edge length. The loop starts at its vertex with the largest 3D y (lowest
/// index on ties), placed at angle π/2, and proceeds counter-clockwise.
pub fn boundary_circle(mesh: &Mesh, boundary: &[usize]) -> Vec<(usize, Uv)> {
    let pos = mesh.vertices();
    let start = boundary
        .iter()
        .enumerate()
        .max_by(|(_, &a), (_, &b)| pos[a][1].total_cmp(&pos[b][1]).then(b.cmp(&a)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let n = boundary.len();
    let ordered: Vec<usize> = (0..n).map(|k| boundary[(start + k) % n]).collect();
    let total: f64 = (0..n).map(|k| distance(pos[ordered[k]], pos[ordered[(k + 1) % n]])).sum();
    let mut s = 0.0;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let angle = FRAC_PI_2 + TAU * s / total;
        out.push((ordered[k], [angle.cos(), angle.sin()]));
        s += distance(pos[ordered[k]], pos[ordered[(k + 1) % n]]);
    }
    out
}

fn solve_with(
    n: usize,
    triplets: &[(usize, usize, f64)],
    circle: &[(usize, Uv)],
) -> Result<ParamMap> {
    let mut fixed: Vec<Option<[f64; 2]>> = vec![None; n];
    for &(v, uv) in circle {
        fixed[v] = Some(uv);
    }
    let settings = CgSettings {
        tolerance: 1e-12,
        ..CgSettings::default()
    };
    ParamMap::new(solve_dirichlet(n, triplets, &fixed, settings)?)
}

/// Harmonic map of a topological disk onto the unit disk.
pub fn harmonic_disk_map(mesh: &Mesh, weights: WeightMode) -> Result<HarmonicMap> {
    let report = validate_disk_topology(mesh)?;
    report.require_disk()?;
    let circle = boundary_circle(mesh, &report.boundary_loops[0]);
    let n = mesh.vertex_count();

    if weights == WeightMode::Uniform {
        return Ok(HarmonicMap {
            map: solve_with(n, &uniform_triplets(mesh), &circle)?,
            weights,
        });
    }

    let triplets = cotangent_triplets(mesh.vertices(), mesh.faces());
    let map = solve_with(n, &triplets, &circle)?;
    let flipped = map.flipped_faces(mesh.faces());
    if flipped == 0 {
        return Ok(HarmonicMap { map, weights });
    }
    let mut edge_weight: HashMap<(usize, usize), f64> = HashMap::new();
    for &(a, b, w) in &triplets {
        if a < b {
            *edge_weight.entry((a, b)).or_default() -= w;
        }
    }
    let negative = edge_weight.values().filter(|&&w| w < 0.0).count();
    if negative == 0 {
        warn!("cotangent map has {flipped} flipped faces without negative weights");
        return Ok(HarmonicMap { map, weights });
    }
    info!("{negative} negative cotangent weights fold {flipped} faces; using uniform weights");
    Ok(HarmonicMap {
        map: solve_with(n, &uniform_triplets(mesh), &circle)?,
        weights: WeightMode::Uniform,
    })
}
