//! Inner-region conformality improvement.
//!
//! The disk is rotated so a chosen boundary anchor sits at `z = 1` and sent
//! to the upper half-plane by the Cayley transform `w = i(1 + z)/(1 − z)`,
//! which moves the anchor to infinity and the rest of the boundary onto the
//! real axis. There a map with the Beltrami coefficient of (half-plane →
//! surface) is solved for, so that its composition with the initial map is
//! conformal. Boundary vertices keep `Im w = 0` but slide freely along the
//! axis; the anchor's one-ring is pinned to a local pole model. The inverse
//! transform brings everything back to the disk with the boundary still on
//! the unit circle.

use std::collections::VecDeque;

use log::debug;

use super::beltrami::{beltrami_coefficient, flatten_triangle, lbs_triplets, mesh_beltrami, Complex};
use super::harmonic::cotangent_triplets;
use super::{ParamMap, Uv};
use crate::mesh::{cross, distance, dot, norm, sub, validate_disk_topology, vertex_adjacency, Mesh};
use crate::sparse::{solve_dirichlet, CgSettings};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Improvement {
    pub map: ParamMap,
    /// Whether the improved candidate replaced the initial map.
    pub accepted: bool,
    /// Mean inner-region |μ| of the initial map.
    pub mean_mu_init: f64,
    /// Mean inner-region |μ| of the candidate (accepted or not).
    pub mean_mu_candidate: f64,
}

/// Graph distance (in edges) from every vertex to the nearest boundary
/// vertex; `usize::MAX` for vertices unreachable from the boundary.
pub fn boundary_distance(mesh: &Mesh) -> Result<Vec<usize>> {
    let report = validate_disk_topology(mesh)?;
    let adj = vertex_adjacency(mesh);
    let mut dist = vec![usize::MAX; mesh.vertex_count()];
    let mut queue = VecDeque::new();
    for lp in &report.boundary_loops {
        for &v in lp {
            dist[v] = 0;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    Ok(dist)
}

/// Faces none of whose vertices lies within two edges of the boundary.
/// Small meshes without such faces fall back to faces off the boundary, and
/// then to all faces.
pub fn inner_faces(mesh: &Mesh) -> Result<Vec<usize>> {
    let dist = boundary_distance(mesh)?;
    let min_d = |f: &[usize; 3]| f.iter().map(|&v| dist[v]).min().unwrap();
    for threshold in [3, 1, 0] {
        let faces: Vec<usize> = mesh
            .faces()
            .iter()
            .enumerate()
            .filter(|(_, f)| min_d(f) >= threshold)
            .map(|(i, _)| i)
            .collect();
        if !faces.is_empty() {
            return Ok(faces);
        }
    }
    Ok(Vec::new())
}

/// Mean |μ| over the listed faces, skipping degenerate ones.
pub fn mean_abs_mu(mesh: &Mesh, map: &ParamMap, faces: &[usize]) -> f64 {
    let mu = mesh_beltrami(mesh, map);
    let values: Vec<f64> = faces.iter().filter_map(|&f| mu[f].map(|m| m.norm())).collect();
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn cayley(z: Complex) -> Complex {
    let i = Complex::i();
    i * (Complex::new(1.0, 0.0) + z) / (Complex::new(1.0, 0.0) - z)
}

fn inverse_cayley(w: Complex) -> Complex {
    let i = Complex::i();
    (w - i) / (w + i)
}

/// Real factor κ making `u + iκv` closest to conformal on the surface, in
/// the least-squares sense with each face's |f_z̄|² measured relative to its
/// |f_z|² (so faces near the pole do not dominate). The two real parts are
/// solved independently and only agree in scale up to the accuracy of the
/// pole model.
fn conformal_ratio(mesh: &Mesh, faces: &[[usize; 3]], u: &[f64], v: &[f64]) -> Option<f64> {
    let pos = mesh.vertices();
    let half_i = Complex::new(0.0, 0.5);
    let mut kappa = 1.0;
    for _ in 0..3 {
        let (mut num, mut den) = (0.0, 0.0);
        for f in faces {
            let Some(chart) = flatten_triangle(pos[f[0]], pos[f[1]], pos[f[2]]) else {
                continue;
            };
            let grad = |g: [f64; 3]| {
                // chart has p0 at the origin and p1 on the x axis
                let gx = (g[1] - g[0]) / chart[1][0];
                let gy = (g[2] - g[0] - gx * chart[2][0]) / chart[2][1];
                Complex::new(gx, gy)
            };
            let gu = grad(f.map(|i| u[i]));
            let gv = grad(f.map(|i| v[i]));
            // ∂z̄ g = (g_x + i g_y)/2, ∂z g = (g_x − i g_y)/2 for real g
            let alpha = gu * 0.5;
            let beta = half_i * gv;
            let fz = gu.conj() * 0.5 + half_i * gv.conj() * kappa;
            let scale = fz.norm_sqr();
            if !(scale > 0.0) || !scale.is_finite() {
                continue;
            }
            let weight = 0.5 * chart[1][0] * chart[2][1] / scale;
            num -= weight * (beta.conj() * alpha).re;
            den += weight * beta.norm_sqr();
        }
        let next = num / den;
        if !(next > 0.0) || !next.is_finite() {
            return None;
        }
        kappa = next;
    }
    Some(kappa)
}

/// Half-plane positions for the one-ring of boundary vertex `anchor`: the
/// fan is flattened by 3D corner angles, opened to a half-disk
/// (`ζ = r^{π/θ} e^{iφπ/θ}`, θ the total angle) and sent to the pole `−1/ζ`.
/// `None` when the fan is not a single chain between the two boundary
/// neighbours.
fn pole_ring(mesh: &Mesh, anchor: usize, boundary: &[usize]) -> Option<Vec<(usize, Complex)>> {
    let pos = mesh.vertices();
    let k = boundary.iter().position(|&b| b == anchor)?;
    let next = boundary[(k + 1) % boundary.len()];
    let prev = boundary[(k + boundary.len() - 1) % boundary.len()];
    // x → y for every face (anchor, x, y) in counter-clockwise order
    let mut step = std::collections::HashMap::new();
    for f in mesh.faces() {
        if let Some(c) = f.iter().position(|&v| v == anchor) {
            step.insert(f[(c + 1) % 3], f[(c + 2) % 3]);
        }
    }
    let pa = pos[anchor];
    let mut fan = vec![(next, 0.0)];
    let mut theta = 0.0;
    let mut cur = next;
    while cur != prev {
        let nxt = *step.get(&cur)?;
        let e1 = sub(pos[cur], pa);
        let e2 = sub(pos[nxt], pa);
        theta += norm(cross(e1, e2)).atan2(dot(e1, e2));
        fan.push((nxt, theta));
        cur = nxt;
        if fan.len() > step.len() + 1 {
            return None;
        }
    }
    if fan.len() != step.len() + 1 || !(theta > 0.0) {
        return None;
    }
    let s = std::f64::consts::PI / theta;
    let ring = fan
        .into_iter()
        .map(|(v, phi)| {
            let r = distance(pos[v], pa);
            let zeta = Complex::from_polar(r.powf(s), phi * s);
            (v, -Complex::new(1.0, 0.0) / zeta)
        })
        .collect::<Vec<_>>();
    ring.iter()
        .all(|(_, c)| c.re.is_finite() && c.im.is_finite())
        .then_some(ring)
}

fn half_plane_candidate(mesh: &Mesh, init: &ParamMap) -> Result<Option<ParamMap>> {
    let report = validate_disk_topology(mesh)?;
    report.require_disk()?;
    let boundary = &report.boundary_loops[0];
    let pos = mesh.vertices();
    let n = mesh.vertex_count();

    // the chin end of the face: lowest 3D y on the boundary
    let anchor = *boundary
        .iter()
        .min_by(|&&a, &&b| pos[a][1].total_cmp(&pos[b][1]).then(a.cmp(&b)))
        .unwrap();
    let za = Complex::new(init.uv[anchor][0], init.uv[anchor][1]);
    if za.norm() == 0.0 {
        return Ok(None);
    }
    let rot = za.conj() / za.norm();

    let mut is_boundary = vec![false; n];
    for &b in boundary {
        is_boundary[b] = true;
    }

    let w: Vec<Complex> = (0..n)
        .map(|i| {
            if i == anchor {
                return Complex::new(0.0, 0.0);
            }
            let z = rot * Complex::new(init.uv[i][0], init.uv[i][1]);
            let w = cayley(z);
            if is_boundary[i] {
                Complex::new(w.re, 0.0)
            } else {
                w
            }
        })
        .collect();
    if w.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Ok(None);
    }

    let kept: Vec<[usize; 3]> = mesh
        .faces()
        .iter()
        .filter(|f| !f.contains(&anchor))
        .copied()
        .collect();
    let domain: Vec<Uv> = w.iter().map(|c| [c.re, c.im]).collect();
    let nu: Vec<Option<Complex>> = kept
        .iter()
        .map(|f| {
            let chart = flatten_triangle(pos[f[0]], pos[f[1]], pos[f[2]])?;
            beltrami_coefficient(f.map(|i| domain[i]), chart)
        })
        .collect();
    // Faces with all corners on the boundary are flat in the half-plane.
    // The LBS element for the composite coefficient is the surface's own
    // cotangent element, so those faces use it directly.
    let flat: Vec<[usize; 3]> = kept
        .iter()
        .zip(&nu)
        .filter(|(_, m)| m.is_none())
        .map(|(f, _)| *f)
        .collect();
    if !flat.is_empty() {
        debug!("{} faces use the surface stiffness directly", flat.len());
    }
    let mut triplets = lbs_triplets(&domain, &kept, &nu);
    triplets.extend(cotangent_triplets(pos, &flat));

    // Ring values follow the local pole model w ≈ −1/ζ, with ζ a local
    // conformal coordinate at the anchor straightening the boundary. Taking
    // them from the initial map instead would impose its distortion on the
    // whole solve.
    let Some(ring) = pole_ring(mesh, anchor, boundary) else {
        return Ok(None);
    };
    let mut fixed_u = vec![None; n];
    let mut fixed_v = vec![None; n];
    fixed_u[anchor] = Some([0.0]);
    fixed_v[anchor] = Some([0.0]);
    for &(i, c) in &ring {
        fixed_u[i] = Some([c.re]);
        fixed_v[i] = Some([c.im]);
    }
    let mut free_u = 0;
    for i in 0..n {
        if fixed_u[i].is_none() {
            free_u += 1;
            if is_boundary[i] {
                fixed_v[i] = Some([0.0]);
            }
        }
    }
    if free_u == 0 {
        return Ok(None);
    }
    let settings = CgSettings {
        tolerance: 1e-12,
        ..CgSettings::default()
    };
    let u = solve_dirichlet(n, &triplets, &fixed_u, settings)?;
    let mut v = solve_dirichlet(n, &triplets, &fixed_v, settings)?;
    let u_flat: Vec<f64> = u.iter().map(|x| x[0]).collect();
    let v_flat: Vec<f64> = v.iter().map(|x| x[0]).collect();
    let Some(kappa) = conformal_ratio(mesh, &kept, &u_flat, &v_flat) else {
        return Ok(None);
    };
    debug!("half-plane aspect correction {kappa:.6}");
    for x in &mut v {
        x[0] *= kappa;
    }

    // The half-plane solution is fixed only up to w ↦ a·w + b (a > 0, b
    // real). Pick the pair that keeps the boundary vertices nearest the
    // initial w = ∓1 (a quarter turn either side of the anchor) in place.
    let free_boundary = || boundary.iter().copied().filter(|&b| fixed_u[b].is_none());
    let nearest = |target: f64| {
        free_boundary().min_by(|&a, &b| {
            (w[a].re - target)
                .abs()
                .total_cmp(&(w[b].re - target).abs())
                .then(a.cmp(&b))
        })
    };
    let (Some(p), Some(q)) = (nearest(-1.0), nearest(1.0)) else {
        return Ok(None);
    };
    let span = u[q][0] - u[p][0];
    if p == q || !(span > 0.0) || !(w[q].re > w[p].re) {
        return Ok(None);
    }
    let a = (w[q].re - w[p].re) / span;
    let b = w[p].re - a * u[p][0];

    let back = rot.conj();
    let uv: Vec<Uv> = (0..n)
        .map(|i| {
            if i == anchor {
                return init.uv[anchor];
            }
            let z = back * inverse_cayley(Complex::new(a * u[i][0] + b, a * v[i][0]));
            [z.re, z.im]
        })
        .collect();
    Ok(Some(ParamMap::new(uv)?))
}

/// Improves conformality of the inner region of `init`. The candidate is
/// kept only when it has no folded triangles and its mean |μ| over
/// [`inner_faces`] does not exceed that of `init`.
pub fn improve_conformality(mesh: &Mesh, init: &ParamMap) -> Result<Improvement> {
    if init.len() != mesh.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "map has {} entries for {} vertices",
            init.len(),
            mesh.vertex_count()
        )));
    }
    let flipped = init.flipped_faces(mesh.faces());
    if flipped > 0 {
        return Err(Error::InvalidParameter(format!(
            "initial map folds {flipped} triangles"
        )));
    }
    let inner = inner_faces(mesh)?;
    let mean_mu_init = mean_abs_mu(mesh, init, &inner);

    let candidate = half_plane_candidate(mesh, init)?;
    let Some(candidate) = candidate else {
        return Ok(Improvement {
            map: init.clone(),
            accepted: false,
            mean_mu_init,
            mean_mu_candidate: mean_mu_init,
        });
    };
    let mean_mu_candidate = mean_abs_mu(mesh, &candidate, &inner);
    let folds = candidate.flipped_faces(mesh.faces());
    let accepted = folds == 0 && mean_mu_candidate <= mean_mu_init;
    debug!(
        "inner |mu|: initial {mean_mu_init:.4e}, candidate {mean_mu_candidate:.4e} ({folds} folds), accepted {accepted}"
    );
    Ok(Improvement {
        map: if accepted { candidate } else { init.clone() },
        accepted,
        mean_mu_init,
        mean_mu_candidate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::param::{harmonic_disk_map, WeightMode};

    fn on_circle(mesh: &Mesh, map: &ParamMap) -> bool {
        let r = validate_disk_topology(mesh).unwrap();
        r.boundary_loops[0].iter().all(|&b| {
            let p = map.uv[b];
            ((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() <= 1e-9
        })
    }

    #[test]
    fn cayley_round_trip() {
        for z in [Complex::new(0.3, -0.4), Complex::new(-0.99, 0.0), Complex::new(0.0, 0.7)] {
            let w = cayley(z);
            assert!(w.im > 0.0);
            assert!((inverse_cayley(w) - z).norm() < 1e-14);
        }
        let unit = Complex::from_polar(1.0, 2.0);
        assert!(cayley(unit).im.abs() < 1e-12);
    }

    #[test]
    fn conformal_planar_disk_is_kept() {
        let m = fixtures::planar_disk(10);
        let init = harmonic_disk_map(&m, WeightMode::Cotangent).unwrap().map;
        let out = improve_conformality(&m, &init).unwrap();
        assert!(out.mean_mu_init <= 1e-8);
        assert!(mean_abs_mu(&m, &out.map, &inner_faces(&m).unwrap()) <= 1e-8);
        for (a, b) in out.map.uv.iter().zip(&init.uv) {
            assert!((a[0] - b[0]).abs() < 1e-8 && (a[1] - b[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn square_patch_gets_more_conformal() {
        // arc-length boundary placement is far from conformal on a square,
        // so sliding boundary vertices must help the inner region
        let g = fixtures::plane_grid(21, 0.05);
        let init = harmonic_disk_map(&g, WeightMode::Cotangent).unwrap().map;
        let out = improve_conformality(&g, &init).unwrap();
        assert!(out.accepted);
        assert!(out.mean_mu_candidate < 0.5 * out.mean_mu_init, "{out:?}");
        assert_eq!(out.map.flipped_faces(g.faces()), 0);
        assert!(on_circle(&g, &out.map));
    }

    #[test]
    fn never_worse_than_initial() {
        for m in [fixtures::hemisphere(12), fixtures::plane_grid(15, 1.0), fixtures::planar_disk(8)] {
            let init = harmonic_disk_map(&m, WeightMode::Cotangent).unwrap().map;
            let out = improve_conformality(&m, &init).unwrap();
            let inner = inner_faces(&m).unwrap();
            assert!(mean_abs_mu(&m, &out.map, &inner) <= mean_abs_mu(&m, &init, &inner));
            assert!(on_circle(&m, &out.map));
            assert_eq!(out.map.flipped_faces(m.faces()), 0);
        }
    }

    #[test]
    fn hemisphere_within_twice_the_exact_map() {
        // stereographic projection is exactly conformal, so its |μ| is pure
        // discretization error
        let m = fixtures::hemisphere(24);
        let init = harmonic_disk_map(&m, WeightMode::Cotangent).unwrap().map;
        let out = improve_conformality(&m, &init).unwrap();
        let inner = inner_faces(&m).unwrap();
        let exact = ParamMap::new(m.vertices().iter().map(|&p| fixtures::stereographic(p)).collect()).unwrap();
        let oracle = mean_abs_mu(&m, &exact, &inner);
        let ours = mean_abs_mu(&m, &out.map, &inner);
        assert!(ours <= 2.0 * oracle, "{ours} vs {oracle}");
    }

    #[test]
    fn folded_input_is_rejected() {
        let m = fixtures::planar_disk(4);
        let init = harmonic_disk_map(&m, WeightMode::Cotangent).unwrap().map;
        let mirrored = ParamMap::new(init.uv.iter().map(|p| [p[0], -p[1]]).collect()).unwrap();
        assert!(improve_conformality(&m, &mirrored).is_err());
    }

    #[test]
    fn inner_faces_avoid_boundary_rings() {
        let m = fixtures::planar_disk(8);
        let dist = boundary_distance(&m).unwrap();
        let inner = inner_faces(&m).unwrap();
        assert!(!inner.is_empty());
        for f in inner {
            assert!(m.faces()[f].iter().all(|&v| dist[v] >= 3));
        }
    }
}
