//! Sparse symmetric solves for the restricted form matrices.
//!
//! Restricted form matrices are symmetric M-matrices. Up to
//! [`DIRECT_LIMIT`] unknowns they are factored as `LDLᵀ` under a
//! minimum-degree ordering; larger systems go through conjugate gradients
//! with a Jacobi preconditioner.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};
use crate::function::{Vertex, VertexSet};
use crate::Graph;

pub const DIRECT_LIMIT: usize = 10_000;
pub const CG_TOLERANCE: f64 = 1e-12;

/// Symmetric matrix in row-list form with a separate diagonal.
#[derive(Clone, Debug)]
pub struct SymMatrix {
    diag: Vec<f64>,
    off: Vec<Vec<(usize, f64)>>,
}

impl SymMatrix {
    /// `A_N[x,x] = 2·deg(x) + c(x) + shift(x)`, `A_N[x,y] = −2 b(x,y)`, rows and
    /// columns indexed by position within `set`.
    pub fn restricted(g: &Graph, set: &VertexSet, shift: Option<&[f64]>) -> SymMatrix {
        let mut local = vec![usize::MAX; g.len()];
        for (i, x) in set.iter().enumerate() {
            local[x] = i;
        }
        let mut diag = Vec::with_capacity(set.len());
        let mut off = Vec::with_capacity(set.len());
        for x in set {
            diag.push(2.0 * g.degree(x) + g.c(x) + shift.map_or(0.0, |s| s[x]));
            off.push(
                g.neighbors(x)
                    .iter()
                    .filter(|&&(y, _)| local[y] != usize::MAX)
                    .map(|&(y, b)| (local[y], -2.0 * b))
                    .collect(),
            );
        }
        SymMatrix { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.off[i]
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.diag[i] * x[i] + self.off[i].iter().map(|&(j, a)| a * x[j]).sum::<f64>())
            .collect()
    }

    /// Principal submatrix on the given local indices (in order).
    pub fn principal(&self, keep: &[usize]) -> SymMatrix {
        let mut local = vec![usize::MAX; self.dim()];
        for (k, &i) in keep.iter().enumerate() {
            local[i] = k;
        }
        SymMatrix {
            diag: keep.iter().map(|&i| self.diag[i]).collect(),
            off: keep
                .iter()
                .map(|&i| {
                    self.off[i]
                        .iter()
                        .filter(|&&(j, _)| local[j] != usize::MAX)
                        .map(|&(j, a)| (local[j], a))
                        .collect()
                })
                .collect(),
        }
    }
}

#[derive(Debug)]
pub struct Ldl {
    order: Vec<usize>,
    d: Vec<f64>,
    // Column of L for each pivot, keyed by pivot position in `order`.
    cols: Vec<Vec<(usize, f64)>>,
}

impl Ldl {
    /// Factors `a`; fails with the offending local index if a pivot is not
    /// positive relative to its original diagonal.
    pub fn factor(a: &SymMatrix) -> std::result::Result<Ldl, usize> {
        let n = a.dim();
        let mut rows: Vec<BTreeMap<usize, f64>> =
            a.off.iter().map(|r| r.iter().copied().collect()).collect();
        let mut diag = a.diag.clone();
        let mut done = vec![false; n];
        let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
            (0..n).map(|i| Reverse((rows[i].len(), i))).collect();
        let mut order = Vec::with_capacity(n);
        let mut d = Vec::with_capacity(n);
        let mut cols = Vec::with_capacity(n);

        while let Some(Reverse((deg, v))) = heap.pop() {
            if done[v] || deg != rows[v].len() {
                continue;
            }
            let pivot = diag[v];
            if pivot.is_nan() || pivot <= 1e-14 * a.diag[v].abs().max(f64::MIN_POSITIVE) {
                return Err(v);
            }
            done[v] = true;
            let nbrs: Vec<(usize, f64)> = std::mem::take(&mut rows[v]).into_iter().collect();
            for &(i, _) in &nbrs {
                rows[i].remove(&v);
            }
            for (k, &(i, aiv)) in nbrs.iter().enumerate() {
                diag[i] -= aiv * aiv / pivot;
                for &(j, ajv) in &nbrs[k + 1..] {
                    let update = aiv * ajv / pivot;
                    *rows[i].entry(j).or_insert(0.0) -= update;
                    *rows[j].entry(i).or_insert(0.0) -= update;
                }
            }
            for &(i, _) in &nbrs {
                heap.push(Reverse((rows[i].len(), i)));
            }
            order.push(v);
            d.push(pivot);
            cols.push(nbrs.into_iter().map(|(i, a)| (i, a / pivot)).collect());
        }
        Ok(Ldl { order, d, cols })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut y = rhs.to_vec();
        for (k, &v) in self.order.iter().enumerate() {
            let yv = y[v];
            for &(i, l) in &self.cols[k] {
                y[i] -= l * yv;
            }
        }
        for (k, &v) in self.order.iter().enumerate() {
            y[v] /= self.d[k];
        }
        for (k, &v) in self.order.iter().enumerate().rev() {
            let s: f64 = self.cols[k].iter().map(|&(i, l)| l * y[i]).sum();
            y[v] -= s;
        }
        y
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients to relative residual `tol`.
pub fn conjugate_gradient(
    a: &SymMatrix,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = a.dim();
    let mut x = vec![0.0; n];
    let rhs_norm = dot(rhs, rhs).sqrt();
    if rhs_norm == 0.0 {
        return Ok(x);
    }
    let inv_diag: Vec<f64> = a.diag.iter().map(|&d| 1.0 / d).collect();
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let ap = a.mul(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Solver("matrix is not positive definite".into()));
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        if dot(&r, &r).sqrt() <= tol * rhs_norm {
            return Ok(x);
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
    }
    Err(Error::Solver(format!(
        "conjugate gradients did not converge in {max_iter} iterations"
    )))
}

/// Solves `a x = rhs`; `labels` maps local indices to graph vertices for
/// error reporting.
pub fn solve(g: &Graph, labels: &[Vertex], a: &SymMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if a.dim() <= DIRECT_LIMIT {
        let ldl = Ldl::factor(a).map_err(|i| Error::SingularRestriction {
            vertex: g.id(labels[i]).to_string(),
        })?;
        Ok(ldl.solve(rhs))
    } else {
        conjugate_gradient(a, rhs, CG_TOLERANCE, 20 * a.dim().max(100))
    }
}
