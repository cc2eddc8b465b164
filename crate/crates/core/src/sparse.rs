//! Compressed sparse rows and Jacobi-preconditioned conjugate gradients for
//! the symmetric positive definite systems of the parameterization stage.

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Square matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < n && c < n);
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|&(c, _)| c == i).map_or(0.0, |(_, v)| v))
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug)]
pub struct CgSettings {
    /// Stop when `‖b − Ax‖ ≤ tolerance · ‖b‖`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CgSettings {
    fn default() -> Self {
        CgSettings {
            tolerance: 1e-12,
            max_iterations: 20_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `Ax = b` for SPD `A`, starting from `x0` (or zero).
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    settings: CgSettings,
) -> Result<CgSolution> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} entries for a {n}×{n} system",
            b.len()
        )));
    }
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = vec![0.0; n];
    a.mul_vec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / b_norm;

    let mut it = 0;
    while res > settings.tolerance && it < settings.max_iterations {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        res = dot(&r, &r).sqrt() / b_norm;
    }

    // the recursive residual drifts; confirm with a true one
    a.mul_vec(&x, &mut ap);
    let true_res = b
        .iter()
        .zip(&ap)
        .map(|(b, ax)| (b - ax) * (b - ax))
        .sum::<f64>()
        .sqrt()
        / b_norm;
    if !true_res.is_finite() || true_res > settings.tolerance.max(1e-10) {
        return Err(Error::NoConvergence {
            residual: true_res,
            iterations: it,
        });
    }
    Ok(CgSolution {
        x,
        iterations: it,
        relative_residual: true_res,
    })
}

/// Solves `K x = 0` on free rows where `fixed[i] = Some(value)` pins
/// unknowns. Several right-hand sides share one reduced matrix; `fixed`
/// holds one value per column of the result.
pub fn solve_dirichlet<const D: usize>(
    n: usize,
    triplets: &[(usize, usize, f64)],
    fixed: &[Option<[f64; D]>],
    settings: CgSettings,
) -> Result<Vec<[f64; D]>> {
    let mut free_index = vec![usize::MAX; n];
    let mut free = 0;
    for i in 0..n {
        if fixed[i].is_none() {
            free_index[i] = free;
            free += 1;
        }
    }
    let mut out: Vec<[f64; D]> = fixed.iter().map(|f| f.unwrap_or([0.0; D])).collect();
    if free == 0 {
        return Ok(out);
    }
    let mut reduced = Vec::with_capacity(triplets.len());
    let mut rhs = vec![vec![0.0; free]; D];
    for &(r, c, w) in triplets {
        let fr = free_index[r];
        if fr == usize::MAX {
            continue;
        }
        match fixed[c] {
            None => reduced.push((fr, free_index[c], w)),
            Some(val) => {
                for d in 0..D {
                    rhs[d][fr] -= w * val[d];
                }
            }
        }
    }
    let a = CsrMatrix::from_triplets(free, reduced);
    for (d, b) in rhs.iter().enumerate() {
        let sol = conjugate_gradient(&a, b, None, settings)?;
        for i in 0..n {
            if free_index[i] != usize::MAX {
                out[i][d] = sol.x[free_index[i]];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0), (0, 1, -1.0)]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.diagonal(), vec![4.0, 2.0]);
    }

    #[test]
    fn solves_1d_poisson() {
        // tridiagonal (-1, 2, -1), exact solution known through A x
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, t);
        let exact: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        a.mul_vec(&exact, &mut b);
        let sol = conjugate_gradient(&a, &b, None, CgSettings::default()).unwrap();
        for (x, e) in sol.x.iter().zip(&exact) {
            assert!((x - e).abs() < 1e-9);
        }
        assert!(sol.relative_residual <= 1e-10);
    }

    #[test]
    fn dirichlet_chain_interpolates_linearly() {
        // path graph Laplacian with both ends pinned
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.extend([(i, i, 1.0), (i + 1, i + 1, 1.0), (i, i + 1, -1.0), (i + 1, i, -1.0)]);
        }
        let mut fixed = vec![None; n];
        fixed[0] = Some([0.0]);
        fixed[n - 1] = Some([5.0]);
        let x = solve_dirichlet(n, &t, &fixed, CgSettings::default()).unwrap();
        for (i, v) in x.iter().enumerate() {
            assert!((v[0] - i as f64).abs() < 1e-10);
        }
    }
}
