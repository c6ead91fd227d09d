//! Reduced SVD for tall matrices.
//!
//! A Householder QR first compresses `X` (N×p) to its triangular factor `R`
//! (p×p); one-sided Jacobi then orthogonalises the columns of `R`. The left
//! factor is `Q · U_R`. One-sided Jacobi keeps every pair of columns
//! orthogonal relative to their own norms, so small singular values keep
//! accurate singular vectors.

use crate::error::{Error, Result};
use crate::numkit::mat::{dot, Mat};

pub const MAX_SWEEPS: usize = 60;
pub const JACOBI_TOL: f64 = 1e-12;

/// `X = U · diag(sigma) · Vᵀ` with `U` N×p, `V` p×p.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub v: Mat,
}

impl Svd {
    /// Number of singular values above `rel_tol · σ_max`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| s > rel_tol * smax).count()
    }

    /// `U · diag(sigma) · Vᵀ`
    pub fn reconstruct(&self) -> Mat {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (j, s) in us.row_mut(i).iter_mut().zip(&self.sigma) {
                *j *= s;
            }
        }
        us.matmul(&self.v.transpose()).expect("conforming factors")
    }
}

pub fn reduced_svd(x: &Mat) -> Result<Svd> {
    let (n, p) = (x.rows(), x.cols());
    if p == 0 || n < p {
        return Err(Error::InvalidInput(format!("reduced SVD needs rows >= cols >= 1, got {n}x{p}")));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite entry in SVD input".into()));
    }

    let (q_cols, r) = householder_qr(x);
    let (ur_cols, sigma, v_cols) = jacobi(r)?;

    // U = Q · U_R, column by column.
    let mut u = Mat::zeros(n, p);
    for (j, ur) in ur_cols.iter().enumerate() {
        for (l, &coef) in ur.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            for (i, &q) in q_cols[l].iter().enumerate() {
                u[(i, j)] += coef * q;
            }
        }
    }
    let v = Mat::from_fn(p, p, |i, j| v_cols[j][i]);
    Ok(Svd { u, sigma, v })
}

/// Thin QR by Householder reflections. Returns the columns of `Q` (N×p)
/// and `R` as column vectors of length p.
fn householder_qr(x: &Mat) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (n, p) = (x.rows(), x.cols());
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| x.col(j)).collect();
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p);

    for k in 0..p {
        let col = &a[k][k..];
        let alpha = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = col.to_vec();
        let beta = if alpha == 0.0 {
            0.0
        } else {
            let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
            v[0] += sign * alpha;
            let vnorm2 = v.iter().map(|t| t * t).sum::<f64>();
            if vnorm2 == 0.0 { 0.0 } else { 2.0 / vnorm2 }
        };
        if beta != 0.0 {
            for col in a.iter_mut().skip(k) {
                let tail = &mut col[k..];
                let proj = beta * dot(&v, tail);
                for (t, vi) in tail.iter_mut().zip(&v) {
                    *t -= proj * vi;
                }
            }
        }
        reflectors.push((v, beta));
    }

    let r: Vec<Vec<f64>> = (0..p).map(|j| (0..p).map(|i| if i <= j { a[j][i] } else { 0.0 }).collect()).collect();

    let mut q: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    for (k, (v, beta)) in reflectors.iter().enumerate().rev() {
        if *beta == 0.0 {
            continue;
        }
        for col in q.iter_mut() {
            let tail = &mut col[k..];
            let proj = beta * dot(v, tail);
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= proj * vi;
            }
        }
    }
    (q, r)
}

type Columns = Vec<Vec<f64>>;

/// One-sided Jacobi on a square matrix given by columns. Returns
/// `(U columns, sigma, V columns)` sorted by non-increasing sigma.
fn jacobi(mut a: Columns) -> Result<(Columns, Vec<f64>, Columns)> {
    let p = a.len();
    let mut v: Columns = (0..p)
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = p < 2;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in (i + 1)..p {
                let alpha = dot(&a[i], &a[i]);
                let beta = dot(&a[j], &a[j]);
                let gamma = dot(&a[i], &a[j]);
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!("one-sided Jacobi did not converge in {MAX_SWEEPS} sweeps")));
    }

    let norms: Vec<f64> = a.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let v_sorted: Columns = order.iter().map(|&j| v[j].clone()).collect();
    let mut u: Columns = Vec::with_capacity(p);
    let mut missing = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            u.push(a[j].iter().map(|x| x / norms[j]).collect());
        } else {
            u.push(vec![0.0; p]);
            missing.push(slot);
        }
    }
    complete_basis(&mut u, &missing);
    Ok((u, sigma, v_sorted))
}

fn rotate(cols: &mut Columns, i: usize, j: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(j);
    let (ci, cj) = (&mut left[i], &mut right[0]);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Fills exactly-zero columns with unit vectors orthogonal to the rest.
fn complete_basis(u: &mut Columns, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let p = u.len();
    let mut candidate = 0;
    for &slot in missing {
        while candidate < p {
            let mut e = vec![0.0; p];
            e[candidate] = 1.0;
            candidate += 1;
            // Two passes of Gram-Schmidt.
            for _ in 0..2 {
                for (k, col) in u.iter().enumerate() {
                    if k == slot || (missing.contains(&k) && dot(col, col) == 0.0) {
                        continue;
                    }
                    let proj = dot(col, &e);
                    for (ei, ci) in e.iter_mut().zip(col) {
                        *ei -= proj * ci;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 1e-8 {
                u[slot] = e.iter().map(|x| x / norm).collect();
                break;
            }
        }
    }
}
