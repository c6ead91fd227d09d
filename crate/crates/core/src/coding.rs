//! Balanced Reed–Solomon gradient codes over the complex `n`-th roots of unity.
//!
//! Worker `i` is attached to the evaluation point `a_i = exp(2π√−1·i/n)`.
//! Partition `j` is replicated on `d` workers; on the remaining `n − d`
//! workers (the set `Z_j`) its column polynomial vanishes:
//!
//! ```text
//! p_j(x) = Π_{z ∈ Z_j} (x − a_z) / Π_{z ∈ Z_j} (−a_z),     p_j(0) = 1
//! B[i, j] = p_j(a_i)
//! ```
//!
//! Every `p_j` has degree `n − d = f − 1`, so `B = G · T` with `G` the n×f
//! Vandermonde on the evaluation points and `T` the f×k coefficient matrix
//! whose first row is all ones. For any `f` responders `I`, the first row
//! `a_I` of `G_I^{-1}` satisfies `a_Iᵀ B_I = 1`, and after scaling the
//! columns by a weight vector, `a_Iᵀ (B·diag(w))_I = w`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numkit::CMat;

/// Elimination residual above which a decode is flagged as ill-conditioned.
pub const CONDITIONING_GUARD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodingParams {
    /// Workers.
    pub n: usize,
    /// Partitions.
    pub k: usize,
    /// Replication of each partition.
    pub d: usize,
    /// Partitions held by each worker.
    pub parts_per_worker: usize,
    /// Tolerated stragglers, `d − 1`.
    pub stragglers: usize,
    /// Responders needed to decode, `n − s`.
    pub responders: usize,
}

pub fn validate_params(n: usize, k: usize, d: usize) -> Result<CodingParams> {
    let infeasible = |reason: String| Error::InfeasibleParams { n, k, d, reason };
    if n == 0 || k == 0 || d == 0 {
        return Err(infeasible("n, k and d must be positive".into()));
    }
    if d > n {
        return Err(infeasible("replication d exceeds worker count n".into()));
    }
    if !(k * d).is_multiple_of(n) {
        return Err(infeasible(format!("n does not divide k·d = {}", k * d)));
    }
    let parts_per_worker = k * d / n;
    let stragglers = d - 1;
    Ok(CodingParams { n, k, d, parts_per_worker, stragglers, responders: n - stragglers })
}

/// n×k assignment of partitions to workers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentMask {
    n: usize,
    k: usize,
    bits: Vec<bool>,
}

impl AssignmentMask {
    pub fn from_bits(n: usize, k: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != n * k {
            return Err(Error::Arity { what: "mask entries", expected: n * k, got: bits.len() });
        }
        Ok(Self { n, k, bits })
    }

    #[inline]
    pub fn get(&self, worker: usize, part: usize) -> bool {
        self.bits[worker * self.k + part]
    }

    pub fn workers(&self) -> usize {
        self.n
    }

    pub fn parts(&self) -> usize {
        self.k
    }

    /// Partitions assigned to `worker`.
    pub fn row_support(&self, worker: usize) -> Vec<usize> {
        (0..self.k).filter(|&j| self.get(worker, j)).collect()
    }

    /// Workers holding `part`.
    pub fn col_support(&self, part: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.get(i, part)).collect()
    }

    pub fn is_balanced(&self, params: &CodingParams) -> bool {
        self.n == params.n
            && self.k == params.k
            && (0..self.k).all(|j| self.col_support(j).len() == params.d)
            && (0..self.n).all(|i| self.row_support(i).len() == params.parts_per_worker)
    }
}

/// Column `j` lives on workers `(j·d + t) mod n`, `t = 0..d`. Consecutive
/// columns tile `k·d = n·w` positions around the ring, so every worker is
/// covered exactly `w` times.
pub fn cyclic_mask(params: &CodingParams) -> AssignmentMask {
    let (n, k, d) = (params.n, params.k, params.d);
    let mut bits = vec![false; n * k];
    for j in 0..k {
        for t in 0..d {
            bits[((j * d + t) % n) * k + j] = true;
        }
    }
    AssignmentMask { n, k, bits }
}

/// `exp(2π√−1·m/n)`, with `m` reduced mod `n` first.
#[inline]
pub fn root_of_unity(m: usize, n: usize) -> Complex64 {
    let m = m % n;
    if m == 0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64)
}

#[derive(Clone, Debug)]
pub struct CodingScheme {
    pub params: CodingParams,
    pub mask: AssignmentMask,
    /// n×k encoding matrix.
    pub b: CMat,
    /// f×k polynomial coefficients, constant term in row 0.
    pub t: CMat,
    pub eval_points: Vec<Complex64>,
}

pub fn build_scheme(params: CodingParams, mask: AssignmentMask) -> Result<CodingScheme> {
    if !mask.is_balanced(&params) {
        return Err(Error::Mask(format!(
            "mask is not balanced for n={}, k={}, d={} (need column support {} and row support {})",
            params.n, params.k, params.d, params.d, params.parts_per_worker
        )));
    }
    let (n, k, f) = (params.n, params.k, params.responders);
    let eval_points: Vec<Complex64> = (0..n).map(|i| root_of_unity(i, n)).collect();
    let mut b = CMat::zeros(n, k);
    let mut t = CMat::zeros(f, k);

    for j in 0..k {
        // p_j(x) = Π_{z∈Z_j} (1 − x·conj(a_z)) since a_z has unit modulus.
        let zeros: Vec<usize> = (0..n).filter(|&i| !mask.get(i, j)).collect();
        debug_assert_eq!(zeros.len(), f - 1);

        for i in 0..n {
            if mask.get(i, j) {
                b[(i, j)] = zeros.iter().fold(Complex64::new(1.0, 0.0), |acc, &z| {
                    acc * (Complex64::new(1.0, 0.0) - eval_points[i] * eval_points[z].conj())
                });
            }
        }

        let mut coeffs = vec![Complex64::new(0.0, 0.0); f];
        coeffs[0] = Complex64::new(1.0, 0.0);
        for (deg, &z) in zeros.iter().enumerate() {
            let c = eval_points[z].conj();
            for m in (1..=deg + 1).rev() {
                let prev = coeffs[m - 1];
                coeffs[m] -= c * prev;
            }
        }
        for (row, c) in coeffs.into_iter().enumerate() {
            t[(row, j)] = c;
        }
    }
    Ok(CodingScheme { params, mask, b, t, eval_points })
}

/// Cyclic mask plus scheme in one step.
pub fn balanced_scheme(n: usize, k: usize, d: usize) -> Result<CodingScheme> {
    let params = validate_params(n, k, d)?;
    let mask = cyclic_mask(&params);
    build_scheme(params, mask)
}

/// Coefficients applied to the `f` received messages.
#[derive(Clone, Debug)]
pub struct DecodeVector {
    pub responders: Vec<usize>,
    pub coeffs: Vec<Complex64>,
    /// `‖a_Iᵀ G_I − e_1ᵀ‖_∞`
    pub residual: f64,
    pub ill_conditioned: bool,
}

impl DecodeVector {
    pub fn as_row(&self) -> CMat {
        CMat::new(1, self.coeffs.len(), self.coeffs.clone()).expect("finite decode coefficients")
    }
}

impl CodingScheme {
    /// n×f Vandermonde `G[i, t] = a_i^t`.
    pub fn vandermonde(&self) -> CMat {
        let n = self.params.n;
        CMat::from_fn(n, self.params.responders, |i, t| root_of_unity(i * t, n))
    }

    fn check_responders(&self, responders: &[usize]) -> Result<()> {
        let f = self.params.responders;
        if responders.len() != f {
            return Err(Error::Arity { what: "responder set", expected: f, got: responders.len() });
        }
        let mut seen = vec![false; self.params.n];
        for &i in responders {
            if i >= self.params.n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidInput(format!("responder {i} is out of range or repeated")));
            }
        }
        Ok(())
    }

    /// `‖aᵀ G_I − e_1ᵀ‖_∞` for candidate coefficients `a`.
    pub fn vandermonde_residual(&self, responders: &[usize], coeffs: &[Complex64]) -> f64 {
        let n = self.params.n;
        (0..self.params.responders)
            .map(|t| {
                let s: Complex64 = responders.iter().zip(coeffs).map(|(&i, &a)| a * root_of_unity(i * t, n)).sum();
                let target = if t == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                (s - target).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Decode vector for the responder set `I`, via the Lagrange closed form
    /// `a_m = Π_{l≠m} x_l / (x_l − x_m)` with elimination as fallback.
    pub fn decode_vector(&self, responders: &[usize]) -> Result<DecodeVector> {
        self.check_responders(responders)?;
        let mut coeffs = lagrange_at_zero(&self.nodes(responders));
        let mut residual = self.vandermonde_residual(responders, &coeffs);
        if residual.is_nan() || residual > CONDITIONING_GUARD {
            let alt = self.decode_vector_elimination(responders)?;
            let alt_residual = self.vandermonde_residual(responders, &alt);
            if alt_residual < residual || residual.is_nan() {
                coeffs = alt;
                residual = alt_residual;
            }
        }
        Ok(DecodeVector {
            responders: responders.to_vec(),
            coeffs,
            residual,
            ill_conditioned: residual.is_nan() || residual > CONDITIONING_GUARD,
        })
    }

    /// Solves `G_Iᵀ a = e_1` by Gaussian elimination with partial pivoting.
    pub fn decode_vector_elimination(&self, responders: &[usize]) -> Result<Vec<Complex64>> {
        self.check_responders(responders)?;
        let f = self.params.responders;
        let n = self.params.n;
        // Row t of G_Iᵀ is (x_m^t)_m.
        let mut a = CMat::from_fn(f, f, |t, m| root_of_unity(responders[m] * t, n));
        let mut rhs = vec![Complex64::new(0.0, 0.0); f];
        rhs[0] = Complex64::new(1.0, 0.0);
        solve_in_place(&mut a, &mut rhs)?;
        Ok(rhs)
    }

    fn nodes(&self, responders: &[usize]) -> Vec<Complex64> {
        responders.iter().map(|&i| self.eval_points[i]).collect()
    }
}

fn lagrange_at_zero(nodes: &[Complex64]) -> Vec<Complex64> {
    nodes
        .iter()
        .enumerate()
        .map(|(m, &xm)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != m)
                .fold(Complex64::new(1.0, 0.0), |acc, (_, &xl)| acc * xl / (xl - xm))
        })
        .collect()
}

fn solve_in_place(a: &mut CMat, rhs: &mut [Complex64]) -> Result<()> {
    let f = rhs.len();
    for col in 0..f {
        let pivot = (col..f)
            .max_by(|&x, &y| a[(x, col)].norm().total_cmp(&a[(y, col)].norm()))
            .expect("non-empty range");
        if a[(pivot, col)].norm() == 0.0 {
            return Err(Error::NumericalFailure("singular Vandermonde system".into()));
        }
        if pivot != col {
            for c in 0..f {
                let tmp = a[(col, c)];
                a[(col, c)] = a[(pivot, c)];
                a[(pivot, c)] = tmp;
            }
            rhs.swap(col, pivot);
        }
        let diag = a[(col, col)];
        for row in col + 1..f {
            let factor = a[(row, col)] / diag;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in col..f {
                let v = a[(col, c)];
                a[(row, c)] -= factor * v;
            }
            let v = rhs[col];
            rhs[row] -= factor * v;
        }
    }
    for row in (0..f).rev() {
        let mut acc = rhs[row];
        for c in row + 1..f {
            acc -= a[(row, c)] * rhs[c];
        }
        rhs[row] = acc / a[(row, row)];
    }
    Ok(())
}

/// `B̃ = B · diag(w)`.
pub fn weight_scheme(scheme: &CodingScheme, weights: &[Complex64]) -> Result<CMat> {
    let k = scheme.params.k;
    if weights.len() != k {
        return Err(Error::Arity { what: "weight vector", expected: k, got: weights.len() });
    }
    let b = &scheme.b;
    Ok(CMat::from_fn(b.rows(), k, |i, j| b[(i, j)] * weights[j]))
}

/// Real weights lifted to the complex plane.
pub fn weight_scheme_real(scheme: &CodingScheme, weights: &[f64]) -> Result<CMat> {
    let w: Vec<Complex64> = weights.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    weight_scheme(scheme, &w)
}

/// `‖a_Iᵀ B̃_I − w‖_∞`.
pub fn decode_identity_error(decode: &DecodeVector, btilde: &CMat, weights: &[Complex64]) -> f64 {
    (0..btilde.cols())
        .map(|j| {
            let s: Complex64 = decode.responders.iter().zip(&decode.coeffs).map(|(&i, &a)| a * btilde[(i, j)]).sum();
            (s - weights[j]).norm()
        })
        .fold(0.0, f64::max)
}
