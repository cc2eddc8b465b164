//! Two-phase denoising of face meshes in the facing direction.
//!
//! A single severe-outlier pass first replaces vertices that sit far from
//! most of their one-ring by the one-ring mean (position and color). The
//! remaining noise is removed by iterating a weighted local-plane estimate:
//! for each neighbourhood size `kᵢ` a least-squares plane `z = ax + by + c`
//! is fit to the `kᵢ` nearest vertices and evaluated at the vertex's own
//! `(x, y)`. The estimates are blended with weights proportional to
//! `1 / (MSEᵢ · dᵢ²)`, where `dᵢ` is the farthest neighbour distance. Only z
//! moves. Iterations stop once the mean correction step drops below `mu`.

mod knn;

pub use knn::NeighborIndex;

use log::warn;
use rayon::prelude::*;

use crate::mesh::{distance, vertex_adjacency, Mesh, Point3};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenoiseParams {
    /// Distance threshold of the severe-outlier test.
    pub epsilon: f64,
    /// A vertex is severe when more than `alpha_a · N` of its `N`
    /// neighbours are farther than `epsilon`.
    pub alpha_a: f64,
    /// Strictly increasing neighbourhood sizes, each ≥ 3.
    pub k_list: Vec<usize>,
    /// Iteration stops when the mean correction step is below `mu`.
    pub mu: f64,
    pub max_iters: usize,
    /// Lower bound on a plane fit's MSE, keeping weights finite.
    pub mse_floor: f64,
}

impl DenoiseParams {
    /// Scale-aware defaults: `ε` = 3 × median edge length, `α_A` = 0.5,
    /// `k` = (8, 16, 24), `μ` = 1e-4 × bbox diagonal, 20 iterations and an
    /// MSE floor of 1e-12 × diagonal².
    pub fn for_mesh(mesh: &Mesh) -> Self {
        let diag = mesh.bounding_box_diagonal().max(f64::MIN_POSITIVE);
        let edge = mesh.median_edge_length();
        DenoiseParams {
            epsilon: if edge > 0.0 { 3.0 * edge } else { diag },
            alpha_a: 0.5,
            k_list: vec![8, 16, 24],
            mu: 1e-4 * diag,
            max_iters: 20,
            mse_floor: 1e-12 * diag * diag,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.alpha_a > 0.0 && self.alpha_a <= 1.0) {
            return bad("alpha_a must lie in (0, 1]");
        }
        if self.k_list.is_empty() {
            return bad("k list is empty");
        }
        if self.k_list.iter().any(|&k| k < 3) {
            return bad("every k must be at least 3");
        }
        if self.k_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad("k list must be strictly increasing");
        }
        if !(self.mu > 0.0) {
            return bad("mu must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.mse_floor > 0.0) {
            return bad("mse_floor must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DenoiseTrace {
    pub severe_count: usize,
    /// Mean correction step after each iteration.
    pub mcs_history: Vec<f64>,
    pub iterations_run: usize,
}

/// Replaces severe outliers by the mean of their one-ring. Detection reads
/// the input positions only, so replacements never cascade within the pass.
pub fn detect_and_replace_severe(
    mesh: &Mesh,
    adjacency: &[Vec<usize>],
    params: &DenoiseParams,
) -> Result<(Mesh, usize)> {
    if adjacency.len() != mesh.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "adjacency for {} vertices, mesh has {}",
            adjacency.len(),
            mesh.vertex_count()
        )));
    }
    let pos = mesh.vertices();
    let col = mesh.colors();
    let (mut new_pos, mut new_col, faces) = mesh.clone().into_parts();
    let mut count = 0;
    for (v, nbrs) in adjacency.iter().enumerate() {
        if nbrs.is_empty() {
            warn!("vertex {v} has no neighbours; skipped by the outlier test");
            continue;
        }
        let far = nbrs.iter().filter(|&&u| distance(pos[v], pos[u]) > params.epsilon).count();
        if far as f64 > params.alpha_a * nbrs.len() as f64 {
            let n = nbrs.len() as f64;
            let mut p = [0.0; 3];
            let mut c = [0.0; 3];
            for &u in nbrs {
                for k in 0..3 {
                    p[k] += pos[u][k];
                    c[k] += col[u][k];
                }
            }
            new_pos[v] = p.map(|x| x / n);
            new_col[v] = c.map(|x| (x / n).clamp(0.0, 1.0));
            count += 1;
        }
    }
    Ok((Mesh::from_parts_unchecked(new_pos, new_col, faces), count))
}

/// Least-squares plane `z = a·x + b·y + c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Mean squared z-residual, floored at the caller's `mse_floor`.
    pub mse: f64,
}

impl PlaneFit {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y + self.c
    }
}

pub fn fit_local_plane(points: &[Point3], mse_floor: f64) -> Result<PlaneFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "plane fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mut mean = [0.0; 3];
    for p in points {
        for k in 0..3 {
            mean[k] += p[k] / n;
        }
    }
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy, dz) = (p[0] - mean[0], p[1] - mean[1], p[2] - mean[2]);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sxz += dx * dz;
        syz += dy * dz;
    }
    let det = sxx * syy - sxy * sxy;
    let scale = sxx + syy;
    if !(scale > 0.0) || det <= 1e-12 * scale * scale {
        return Err(Error::CollinearPoints);
    }
    let a = (sxz * syy - syz * sxy) / det;
    let b = (syz * sxx - sxz * sxy) / det;
    let c = mean[2] - a * mean[0] - b * mean[1];
    let sse: f64 = points
        .iter()
        .map(|p| {
            let r = p[2] - (a * p[0] + b * p[1] + c);
            r * r
        })
        .sum();
    Ok(PlaneFit {
        a,
        b,
        c,
        mse: (sse / n).max(mse_floor),
    })
}

/// Blend weights `wᵢ ∝ 1 / (MSEᵢ · dᵢ²)` from `(mse, d_max)` pairs,
/// normalized to sum to one.
pub fn correction_weights(fits: &[(f64, f64)]) -> Vec<f64> {
    let raw: Vec<f64> = fits.iter().map(|&(mse, d)| 1.0 / (mse * d * d)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// One plane estimate per neighbourhood size and the blended result.
#[derive(Clone, Debug)]
pub struct VertexCorrection {
    pub position: Point3,
    /// `(k, predicted z, mse, d_max)` for each successful fit.
    pub estimates: Vec<(usize, f64, f64, f64)>,
    pub weights: Vec<f64>,
}

/// Corrects one vertex against a prebuilt neighbour index over `mesh`.
pub fn correct_vertex_with(
    v: usize,
    mesh: &Mesh,
    index: &NeighborIndex<'_>,
    params: &DenoiseParams,
) -> VertexCorrection {
    let pos = mesh.vertices();
    let p = pos[v];
    let k_max = *params.k_list.last().unwrap();
    let neighbors = index.nearest(v, k_max);

    let mut estimates = Vec::with_capacity(params.k_list.len());
    let mut points = Vec::with_capacity(k_max);
    for &k in &params.k_list {
        if neighbors.len() < k {
            break;
        }
        points.clear();
        points.extend(neighbors[..k].iter().map(|&(i, _)| pos[i]));
        let d_max = neighbors[k - 1].1;
        match fit_local_plane(&points, params.mse_floor) {
            Ok(fit) if d_max > 0.0 => estimates.push((k, fit.eval(p[0], p[1]), fit.mse, d_max)),
            _ => {}
        }
    }
    if estimates.is_empty() {
        warn!("vertex {v}: no usable plane fit, left unchanged");
        return VertexCorrection {
            position: p,
            estimates,
            weights: Vec::new(),
        };
    }
    let weights =
        correction_weights(&estimates.iter().map(|e| (e.2, e.3)).collect::<Vec<_>>());
    let z = estimates.iter().zip(&weights).map(|(e, w)| w * e.1).sum();
    VertexCorrection {
        position: [p[0], p[1], z],
        estimates,
        weights,
    }
}

/// Corrected position of vertex `v`; x and y are kept.
pub fn correct_vertex(v: usize, mesh: &Mesh, params: &DenoiseParams) -> Result<Point3> {
    params.validate()?;
    let k_max = *params.k_list.last().unwrap();
    if mesh.vertex_count() <= k_max {
        return Err(Error::InvalidParameter(format!(
            "mesh has {} vertices, neighbourhoods need {}",
            mesh.vertex_count(),
            k_max + 1
        )));
    }
    let index = NeighborIndex::new(mesh.vertices(), mesh.median_edge_length());
    Ok(correct_vertex_with(v, mesh, &index, params).position)
}

/// One synchronous correction sweep: every vertex reads `mesh` and the
/// result is a fresh mesh.
pub fn correction_sweep(mesh: &Mesh, params: &DenoiseParams) -> Result<Mesh> {
    let index = NeighborIndex::new(mesh.vertices(), mesh.median_edge_length());
    let next: Vec<Point3> = (0..mesh.vertex_count())
        .into_par_iter()
        .map(|v| correct_vertex_with(v, mesh, &index, params).position)
        .collect();
    mesh.with_positions(next)
}

/// Mean Euclidean displacement between two generations of the same mesh.
pub fn mean_correction_step(before: &Mesh, after: &Mesh) -> f64 {
    let n = before.vertex_count();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = before
        .vertices()
        .iter()
        .zip(after.vertices())
        .map(|(a, b)| distance(*a, *b))
        .sum();
    total / n as f64
}

pub fn denoise(mesh: &Mesh, params: &DenoiseParams) -> Result<(Mesh, DenoiseTrace)> {
    params.validate()?;
    let k_max = *params.k_list.last().unwrap();
    if mesh.vertex_count() <= k_max {
        return Err(Error::InvalidParameter(format!(
            "mesh has {} vertices, neighbourhoods need {}",
            mesh.vertex_count(),
            k_max + 1
        )));
    }
    let adjacency = vertex_adjacency(mesh);
    let (mut current, severe_count) = detect_and_replace_severe(mesh, &adjacency, params)?;
    let mut trace = DenoiseTrace {
        severe_count,
        ..Default::default()
    };
    for _ in 0..params.max_iters {
        let next = correction_sweep(&current, params)?;
        let mcs = mean_correction_step(&current, &next);
        current = next;
        trace.mcs_history.push(mcs);
        trace.iterations_run += 1;
        if mcs < params.mu {
            break;
        }
    }
    Ok((current, trace))
}
