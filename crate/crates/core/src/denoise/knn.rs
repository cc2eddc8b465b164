//! Uniform-grid k-nearest-neighbour queries over 3D points.

use crate::mesh::Point3;

/// Bucket grid over a fixed point set. Query results are ordered by
/// `(squared distance, index)`, so ties resolve to the lower index.
pub struct NeighborIndex<'a> {
    points: &'a [Point3],
    origin: Point3,
    cell: f64,
    dims: [usize; 3],
    cell_start: Vec<usize>,
    entries: Vec<usize>,
}

const MAX_CELLS: usize = 1 << 22;

impl<'a> NeighborIndex<'a> {
    /// `cell_size` should be near the typical point spacing.
    pub fn new(points: &'a [Point3], cell_size: f64) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if points.is_empty() {
            lo = [0.0; 3];
            hi = [0.0; 3];
        }
        let extent = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
        let mut cell = if cell_size > 0.0 && cell_size.is_finite() {
            cell_size
        } else {
            extent.iter().cloned().fold(1.0, f64::max)
        };
        let dims_for = |cell: f64| extent.map(|e| ((e / cell).floor() as usize + 1).max(1));
        let mut dims = dims_for(cell);
        while dims.iter().product::<usize>() > MAX_CELLS.max(4 * points.len()) {
            cell *= 1.5;
            dims = dims_for(cell);
        }

        let mut index = NeighborIndex {
            points,
            origin: lo,
            cell,
            dims,
            cell_start: Vec::new(),
            entries: Vec::new(),
        };
        let ncells = dims.iter().product::<usize>();
        let mut counts = vec![0usize; ncells + 1];
        let keys: Vec<usize> = points.iter().map(|p| index.key(index.coords(*p))).collect();
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 0..ncells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut entries = vec![0usize; points.len()];
        for (i, &k) in keys.iter().enumerate() {
            entries[fill[k]] = i;
            fill[k] += 1;
        }
        index.cell_start = counts;
        index.entries = entries;
        index
    }

    fn coords(&self, p: Point3) -> [usize; 3] {
        let mut c = [0; 3];
        for k in 0..3 {
            let f = ((p[k] - self.origin[k]) / self.cell).floor();
            c[k] = (f.max(0.0) as usize).min(self.dims[k] - 1);
        }
        c
    }

    fn key(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// The `k` points nearest to point `query` (itself excluded), nearest
    /// first, with their distances.
    pub fn nearest(&self, query: usize, k: usize) -> Vec<(usize, f64)> {
        let q = self.points[query];
        let qc = self.coords(q);
        let k = k.min(self.points.len().saturating_sub(1));
        let mut found: Vec<(f64, usize)> = Vec::with_capacity(4 * k + 8);
        let max_ring = *self.dims.iter().max().unwrap();
        for ring in 0..=max_ring {
            self.visit_shell(qc, ring, |i| {
                if i != query {
                    let p = self.points[i];
                    let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                    found.push((d2, i));
                }
            });
            if found.len() >= k {
                found.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                found.truncate(k.max(1));
                // anything outside the visited block is at least ring·cell away
                let reach = ring as f64 * self.cell;
                if k == 0 || found[k - 1].0 <= reach * reach {
                    break;
                }
            }
        }
        found.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        found.truncate(k);
        found.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect()
    }

    fn visit_shell(&self, c: [usize; 3], ring: usize, mut f: impl FnMut(usize)) {
        let r = ring as isize;
        let range = |k: usize| {
            let lo = (c[k] as isize - r).max(0) as usize;
            let hi = ((c[k] as isize + r) as usize).min(self.dims[k] - 1);
            lo..=hi
        };
        for z in range(2) {
            for y in range(1) {
                for x in range(0) {
                    let on_shell = (x as isize - c[0] as isize).abs() == r
                        || (y as isize - c[1] as isize).abs() == r
                        || (z as isize - c[2] as isize).abs() == r;
                    if !on_shell {
                        continue;
                    }
                    let key = self.key([x, y, z]);
                    for &i in &self.entries[self.cell_start[key]..self.cell_start[key + 1]] {
                        f(i);
                    }
                }
            }
        }
    }
}
