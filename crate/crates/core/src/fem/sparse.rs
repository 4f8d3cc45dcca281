use rayon::prelude::*;

use crate::error::{Error, Result};

/// Compressed-row sparsity pattern over the `3 * n_vertices` displacement
/// unknowns. Each vertex row block lists its neighbor vertices in ascending
/// order; dof `3v + i` couples to dofs `3w + j` for all neighbors `w`.
#[derive(Clone, Debug)]
pub struct Pattern {
    pub(crate) row_ptr: Vec<usize>,
    pub(crate) cols: Vec<usize>,
    vert_ptr: Vec<usize>,
    vert_nbrs: Vec<usize>,
}

impl Pattern {
    pub fn from_tets(n_vertices: usize, tets: &[[usize; 4]]) -> Self {
        let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
        for t in tets {
            for &a in t {
                nbrs[a].extend_from_slice(t);
            }
        }
        let mut vert_ptr = vec![0];
        let mut vert_nbrs = Vec::new();
        for list in nbrs.iter_mut() {
            list.sort_unstable();
            list.dedup();
            vert_nbrs.extend_from_slice(list);
            vert_ptr.push(vert_nbrs.len());
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for v in 0..n_vertices {
            let list = &vert_nbrs[vert_ptr[v]..vert_ptr[v + 1]];
            for _ in 0..3 {
                for &w in list {
                    cols.extend_from_slice(&[3 * w, 3 * w + 1, 3 * w + 2]);
                }
                row_ptr.push(cols.len());
            }
        }
        Self { row_ptr, cols, vert_ptr, vert_nbrs }
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Position of entry `(3v+i, 3w+j)` in the value array.
    pub(crate) fn position(&self, v: usize, i: usize, w: usize, j: usize) -> usize {
        let list = &self.vert_nbrs[self.vert_ptr[v]..self.vert_ptr[v + 1]];
        let k = list.binary_search(&w).expect("vertex pair not in pattern");
        self.row_ptr[3 * v + i] + 3 * k + j
    }

    pub fn matvec(&self, vals: &[f64], x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(r, yr)| {
            let mut s = 0.0;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += vals[p] * x[self.cols[p]];
            }
            *yr = s;
        });
    }

    pub fn row(&self, r: usize) -> std::ops::Range<usize> {
        self.row_ptr[r]..self.row_ptr[r + 1]
    }
}

/// Cholesky factor of a symmetric positive definite matrix in variable-band
/// (envelope) storage: row `i` holds columns `first[i]..=i` contiguously.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors the submatrix of `(pattern, vals)` on the rows and columns with
    /// `map[dof] = Some(local index)`, `n` local unknowns.
    pub fn factor(pattern: &Pattern, vals: &[f64], map: &[Option<usize>], dofs: &[usize]) -> Result<Self> {
        let n = dofs.len();
        let mut first = vec![0usize; n];
        for (li, &g) in dofs.iter().enumerate() {
            let mut f = li;
            for p in pattern.row(g) {
                if let Some(lj) = map[pattern.cols[p]] {
                    f = f.min(lj);
                }
            }
            first[li] = f;
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for i in 0..n {
            start.push(total);
            total += i - first[i] + 1;
        }
        start.push(total);
        let mut data = vec![0.0; total];
        for (li, &g) in dofs.iter().enumerate() {
            for p in pattern.row(g) {
                if let Some(lj) = map[pattern.cols[p]] {
                    if lj <= li {
                        data[start[li] + lj - first[li]] += vals[p];
                    }
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = data[start[i] + j - fi];
                if k0 < j {
                    let a = &data[start[i] + k0 - fi..start[i] + j - fi];
                    let b = &data[start[j] + k0 - fj..start[j] + j - fj];
                    s -= dot(a, b);
                }
                if j < i {
                    data[start[i] + j - fi] = s / data[start[j] + j - fj];
                } else {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: s });
                    }
                    data[start[i] + i - fi] = s.sqrt();
                }
            }
        }
        Ok(Self { first, start, data })
    }

    pub fn n(&self) -> usize {
        self.first.len()
    }

    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    fn diag(&self, i: usize) -> f64 {
        self.data[self.start[i + 1] - 1]
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1] - 1];
            let s = b[i] - dot(row, &b[fi..i]);
            b[i] = s / self.diag(i);
        }
        for i in (0..n).rev() {
            let xi = b[i] / self.diag(i);
            b[i] = xi;
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1] - 1];
            for (bk, &l) in b[fi..i].iter_mut().zip(row) {
                *bk -= l * xi;
            }
        }
    }

    /// Product of the squared pivots, as a log.
    pub fn log_det(&self) -> f64 {
        (0..self.n()).map(|i| 2.0 * self.diag(i).ln()).sum()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// Jacobi-preconditioned conjugate gradients on the submatrix selected by
/// `map`/`dofs`. Returns the iteration count.
pub fn conjugate_gradient(
    pattern: &Pattern,
    vals: &[f64],
    map: &[Option<usize>],
    dofs: &[usize],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = dofs.len();
    let apply = |v: &[f64], out: &mut [f64]| {
        out.par_iter_mut().enumerate().for_each(|(li, o)| {
            let mut s = 0.0;
            for p in pattern.row(dofs[li]) {
                if let Some(lj) = map[pattern.cols[p]] {
                    s += vals[p] * v[lj];
                }
            }
            *o = s;
        });
    };
    let mut diag = vec![0.0; n];
    for (li, &g) in dofs.iter().enumerate() {
        for p in pattern.row(g) {
            if pattern.cols[p] == g {
                diag[li] = vals[p];
            }
        }
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 0..max_iter {
        let rn = dot(&r, &r).sqrt();
        if rn <= rel_tol * bnorm {
            return Ok(it);
        }
        apply(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rn = dot(&r, &r).sqrt();
    if rn <= rel_tol * bnorm {
        Ok(max_iter)
    } else {
        Err(Error::SolverDivergence { iterations: max_iter, residual: rn / bnorm })
    }
}
