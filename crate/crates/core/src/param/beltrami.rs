//! Beltrami coefficients of piecewise-linear maps and the linear Beltrami
//! stiffness used to build a map with prescribed coefficients.

use log::warn;
pub use num_complex::Complex64 as Complex;

use super::{ParamMap, Uv};
use crate::mesh::{cross, dot, norm, sub, Face, Mesh, Point3};

/// Isometric 2D chart of a 3D triangle: `a` at the origin, `b` on the
/// positive x axis, `c` in the upper half-plane. `None` when degenerate.
pub fn flatten_triangle(a: Point3, b: Point3, c: Point3) -> Option<[Uv; 3]> {
    let e1 = sub(b, a);
    let e2 = sub(c, a);
    let l1 = norm(e1);
    let h = norm(cross(e1, e2));
    if !(l1 > 0.0) || !(h > 0.0) {
        return None;
    }
    Some([[0.0, 0.0], [l1, 0.0], [dot(e1, e2) / l1, h / l1]])
}

/// Beltrami coefficient `f_z̄ / f_z` of the affine map taking triangle
/// `src` onto `dst`. `None` for a degenerate source or a singular map.
pub fn beltrami_coefficient(src: [Uv; 3], dst: [Uv; 3]) -> Option<Complex> {
    let e1 = [src[1][0] - src[0][0], src[1][1] - src[0][1]];
    let e2 = [src[2][0] - src[0][0], src[2][1] - src[0][1]];
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let q = dst.map(|p| Complex::new(p[0], p[1]));
    let d1 = q[1] - q[0];
    let d2 = q[2] - q[0];
    let fx = (d1 * e2[1] - d2 * e1[1]) / det;
    let fy = (d2 * e1[0] - d1 * e2[0]) / det;
    let i = Complex::i();
    let fz = (fx - i * fy) * 0.5;
    let fzbar = (fx + i * fy) * 0.5;
    if fz.norm() == 0.0 {
        return None;
    }
    Some(fzbar / fz)
}

/// Per-face Beltrami coefficient of the map mesh → disk, with each 3D
/// triangle read in its own isometric chart.
pub fn mesh_beltrami(mesh: &Mesh, map: &ParamMap) -> Vec<Option<Complex>> {
    let pos = mesh.vertices();
    mesh.faces()
        .iter()
        .enumerate()
        .map(|(fi, f)| {
            let src = flatten_triangle(pos[f[0]], pos[f[1]], pos[f[2]]);
            if src.is_none() {
                warn!("face {fi} is degenerate in 3D; excluded from Beltrami statistics");
            }
            beltrami_coefficient(src?, f.map(|i| map.uv[i]))
        })
        .collect()
}

/// Stiffness triplets of `∇·(A_μ ∇u) = 0` over a planar domain mesh, where
/// for `μ = ρ + iτ`
///
/// ```text
/// A_μ = 1/(1 − |μ|²) · [ (ρ − 1)² + τ²      −2τ         ]
///                      [ −2τ               (ρ + 1)² + τ² ]
/// ```
///
/// Both coordinates of a map with Beltrami coefficient `μ` solve this
/// equation; with `μ = 0` it reduces to the cotangent Laplacian of the
/// domain. Faces with `μ = None` or a degenerate domain are skipped.
pub fn lbs_triplets(domain: &[Uv], faces: &[Face], mu: &[Option<Complex>]) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::with_capacity(faces.len() * 9);
    for (f, m) in faces.iter().zip(mu) {
        let Some(m) = *m else { continue };
        let (rho, tau) = (m.re, m.im);
        let denom = 1.0 - m.norm_sqr();
        if !(denom > 0.0) {
            continue;
        }
        let a11 = ((rho - 1.0).powi(2) + tau * tau) / denom;
        let a12 = -2.0 * tau / denom;
        let a22 = ((rho + 1.0).powi(2) + tau * tau) / denom;

        let p = f.map(|i| domain[i]);
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
        if area2 == 0.0 || !area2.is_finite() {
            continue;
        }
        // ∇φ_i = J(p_{i+2} − p_{i+1}) / (2A), J the +90° rotation
        let grad: [Uv; 3] = std::array::from_fn(|i| {
            let a = p[(i + 1) % 3];
            let b = p[(i + 2) % 3];
            [-(b[1] - a[1]) / area2, (b[0] - a[0]) / area2]
        });
        let area = 0.5 * area2.abs();
        for i in 0..3 {
            let ag = [
                a11 * grad[i][0] + a12 * grad[i][1],
                a12 * grad[i][0] + a22 * grad[i][1],
            ];
            for j in 0..3 {
                let k = area * (ag[0] * grad[j][0] + ag[1] * grad[j][1]);
                t.push((f[i], f[j], k));
            }
        }
    }
    t
}
