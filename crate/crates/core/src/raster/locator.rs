//! Point location in parameter space over a uniform bucket grid.

use crate::param::Uv;

/// Finds the mapped triangle containing a point. Buckets hold face indices
/// in increasing order, so on shared edges and vertices the lowest face
/// index wins.
#[derive(Clone, Debug)]
pub struct TriangleLocator {
    min: Uv,
    cell: f64,
    dims: (usize, usize),
    buckets: Vec<Vec<u32>>,
    corners: Vec<[Uv; 3]>,
    faces: Vec<[usize; 3]>,
}

/// A hit: face index and barycentric weights of its three corners.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub face: usize,
    pub weights: [f64; 3],
}

// tolerance on barycentric coordinates so points on a shared edge are not
// lost to rounding in both neighbours
const EDGE_EPS: f64 = 1e-12;

impl TriangleLocator {
    pub fn new(uv: &[Uv], faces: &[[usize; 3]]) -> Self {
        let corners: Vec<[Uv; 3]> = faces.iter().map(|f| f.map(|i| uv[i])).collect();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in corners.iter().flatten() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        if corners.is_empty() {
            lo = [0.0; 2];
            hi = [1.0; 2];
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        let per_side = ((faces.len() as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let cell = extent / per_side as f64;
        let dims = (
            (((hi[0] - lo[0]) / cell).floor() as usize + 1).min(per_side + 1),
            (((hi[1] - lo[1]) / cell).floor() as usize + 1).min(per_side + 1),
        );
        let mut buckets = vec![Vec::new(); dims.0 * dims.1];
        for (fi, c) in corners.iter().enumerate() {
            if signed_area2(c) == 0.0 {
                continue;
            }
            let (x0, y0) = cell_of(lo, cell, dims, [c[0][0].min(c[1][0]).min(c[2][0]), c[0][1].min(c[1][1]).min(c[2][1])]);
            let (x1, y1) = cell_of(lo, cell, dims, [c[0][0].max(c[1][0]).max(c[2][0]), c[0][1].max(c[1][1]).max(c[2][1])]);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    buckets[y * dims.0 + x].push(fi as u32);
                }
            }
        }
        TriangleLocator {
            min: lo,
            cell,
            dims,
            buckets,
            corners,
            faces: faces.to_vec(),
        }
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn locate(&self, p: Uv) -> Option<Hit> {
        let rel = [(p[0] - self.min[0]) / self.cell, (p[1] - self.min[1]) / self.cell];
        if !(rel[0] >= 0.0 && rel[1] >= 0.0) {
            return None;
        }
        let (x, y) = (rel[0].floor() as usize, rel[1].floor() as usize);
        if x >= self.dims.0 || y >= self.dims.1 {
            return None;
        }
        self.buckets[y * self.dims.0 + x].iter().find_map(|&fi| {
            let weights = barycentric(&self.corners[fi as usize], p)?;
            weights.iter().all(|&w| w >= -EDGE_EPS).then_some(Hit {
                face: fi as usize,
                weights,
            })
        })
    }
}

fn cell_of(lo: Uv, cell: f64, dims: (usize, usize), p: Uv) -> (usize, usize) {
    let x = ((p[0] - lo[0]) / cell).floor().max(0.0) as usize;
    let y = ((p[1] - lo[1]) / cell).floor().max(0.0) as usize;
    (x.min(dims.0 - 1), y.min(dims.1 - 1))
}

fn signed_area2(c: &[Uv; 3]) -> f64 {
    (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[1][1] - c[0][1]) * (c[2][0] - c[0][0])
}

/// Barycentric coordinates of `p` in triangle `c`; `None` if degenerate.
pub fn barycentric(c: &[Uv; 3], p: Uv) -> Option<[f64; 3]> {
    let area = signed_area2(c);
    if area == 0.0 || !area.is_finite() {
        return None;
    }
    let sub = |i: usize, j: usize| {
        let (a, b) = (c[i], c[j]);
        ((a[0] - p[0]) * (b[1] - p[1]) - (a[1] - p[1]) * (b[0] - p[0])) / area
    };
    Some([sub(1, 2), sub(2, 0), sub(0, 1)])
}
