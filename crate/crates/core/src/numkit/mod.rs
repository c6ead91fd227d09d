//! Dense linear algebra: matrices, reduced SVD, leverage scores.

mod mat;
mod svd;

pub use mat::{axpy, dot, norm2, CMat, Mat};
pub use svd::{reduced_svd, Svd, JACOBI_TOL, MAX_SWEEPS};

use crate::error::{Error, Result};

/// Singular values at or below `RANK_TOL · σ_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Exact leverage scores `ℓ_i = ‖U_(i)‖²` of a full-column-rank matrix.
///
/// Fails with [`Error::RankDeficient`] when the numerical rank is below the
/// column count.
pub fn leverage_scores(x: &Mat) -> Result<Vec<f64>> {
    let (scores, rank) = leverage_scores_with_rank(x)?;
    if rank < x.cols() {
        return Err(Error::RankDeficient { rank, cols: x.cols() });
    }
    Ok(scores)
}

/// Leverage scores of the projector onto the numerical column space, along
/// with the numerical rank. The scores sum to the rank.
///
/// This is the diagonal of `X·X^†` for rank-deficient `X` too (pixel data
/// with constant-zero columns, for instance).
pub fn leverage_scores_with_rank(x: &Mat) -> Result<(Vec<f64>, usize)> {
    let svd = reduced_svd(x)?;
    let rank = svd.numerical_rank(RANK_TOL);
    let scores = (0..x.rows())
        .map(|i| svd.u.row(i)[..rank].iter().map(|u| u * u).sum::<f64>())
        .collect();
    Ok((scores, rank))
}

/// `π_i = ℓ_i / Σ_j ℓ_j`
pub fn normalize_scores(scores: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = scores.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("score {bad} is negative or non-finite")));
    }
    let total: f64 = scores.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidDistribution("scores sum to zero".into()));
    }
    Ok(scores.iter().map(|s| s / total).collect())
}

/// Minimum-norm least-squares solution `X^† b`.
pub fn lstsq(x: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != x.rows() {
        return Err(Error::Arity { what: "least-squares right-hand side", expected: x.rows(), got: b.len() });
    }
    let svd = reduced_svd(x)?;
    let rank = svd.numerical_rank(RANK_TOL);
    let utb = svd.u.t_matvec(b)?;
    let mut theta = vec![0.0; x.cols()];
    for (k, (u, sigma)) in utb.iter().zip(&svd.sigma).take(rank).enumerate() {
        let coef = u / sigma;
        for (j, t) in theta.iter_mut().enumerate() {
            *t += coef * svd.v[(j, k)];
        }
    }
    Ok(theta)
}
