//! Sparse assembly helpers and a preconditioned conjugate-gradient solver.

use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};

pub type Csr = CsrMatrix<f64>;

pub fn csr_from_triplets(nrows: usize, ncols: usize, trips: &[(usize, usize, f64)]) -> Csr {
    let mut coo = CooMatrix::new(nrows, ncols);
    for &(i, j, v) in trips {
        coo.push(i, j, v);
    }
    CsrMatrix::from(&coo)
}

/// y = A x
pub fn spmv(a: &Csr, x: &[f64], y: &mut [f64]) {
    let (off, cols, vals) = (a.row_offsets(), a.col_indices(), a.values());
    for (i, yi) in y.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in off[i]..off[i + 1] {
            s += vals[k] * x[cols[k]];
        }
        *yi = s;
    }
}

pub fn mul(a: &Csr, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    spmv(a, x, &mut y);
    y
}

/// y = Aᵀ x
pub fn mul_t(a: &Csr, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.ncols()];
    let (off, cols, vals) = (a.row_offsets(), a.col_indices(), a.values());
    for i in 0..a.nrows() {
        for k in off[i]..off[i + 1] {
            y[cols[k]] += vals[k] * x[i];
        }
    }
    y
}

pub fn diagonal(a: &Csr) -> Vec<f64> {
    let (off, cols, vals) = (a.row_offsets(), a.col_indices(), a.values());
    (0..a.nrows())
        .map(|i| (off[i]..off[i + 1]).filter(|&k| cols[k] == i).map(|k| vals[k]).sum())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

#[derive(Clone, Copy, Debug)]
pub struct CgOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
    /// The matrix has the constant vector as kernel: project it out of the
    /// right-hand side and of every iterate.
    pub singular: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { rel_tol: 1e-12, max_iter: 20_000, singular: false }
    }
}

/// Jacobi-preconditioned CG for a symmetric positive (semi)definite `a`.
/// `x` holds the initial guess and receives the solution. Returns the
/// iteration count.
pub fn pcg(a: &Csr, b: &[f64], x: &mut [f64], opts: CgOptions) -> Result<usize> {
    let n = b.len();
    let dinv: Vec<f64> = diagonal(a).iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut rhs = b.to_vec();
    if opts.singular {
        remove_mean(&mut rhs);
        remove_mean(x);
    }
    let bnorm = norm(&rhs);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    spmv(a, x, &mut r);
    for i in 0..n {
        r[i] = rhs[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    if opts.singular {
        remove_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..opts.max_iter {
        let rn = norm(&r);
        if rn <= opts.rel_tol * bnorm {
            if opts.singular {
                remove_mean(x);
            }
            return Ok(it);
        }
        spmv(a, &p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence { what: "conjugate gradient breakdown".into(), residual: rn / bnorm });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        if opts.singular {
            remove_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence { what: "conjugate gradient".into(), residual: norm(&r) / bnorm })
}
