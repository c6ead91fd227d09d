//! Losses, partial gradients, the weighted sketched objective, and a
//! fixed-step gradient-descent driver.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::numkit::{axpy, dot, norm2, Mat};
use crate::sketch::{PartitionPlan, SketchPlan};

/// Gradient norms above this abort the descent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// `Σ (xᵀθ − y)²`
    LeastSquares,
    /// `Σ log(1 + exp(−y·xᵀθ))`, labels in {−1, +1}.
    Logistic,
}

#[derive(Clone, Debug)]
pub struct LossModel {
    pub kind: LossKind,
    pub x: Mat,
    pub y: Vec<f64>,
}

impl LossModel {
    pub fn least_squares(x: Mat, y: Vec<f64>) -> Result<Self> {
        Self::new(LossKind::LeastSquares, x, y)
    }

    pub fn logistic(x: Mat, y: Vec<f64>) -> Result<Self> {
        Self::new(LossKind::Logistic, x, y)
    }

    pub fn new(kind: LossKind, x: Mat, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::Arity { what: "labels", expected: x.rows(), got: y.len() });
        }
        if kind == LossKind::Logistic {
            if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
                return Err(Error::InvalidInput(format!("logistic label {bad} is not ±1")));
            }
        }
        Ok(Self { kind, x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn num_rows(&self) -> usize {
        self.x.rows()
    }

    fn check(&self, rows: &Range<usize>, theta: &[f64]) -> Result<()> {
        if rows.end > self.num_rows() || rows.start > rows.end {
            return Err(Error::InvalidInput(format!("row range {rows:?} outside 0..{}", self.num_rows())));
        }
        if theta.len() != self.dim() {
            return Err(Error::Arity { what: "parameter vector", expected: self.dim(), got: theta.len() });
        }
        Ok(())
    }

    /// Gradient of the loss restricted to `rows`.
    pub fn partial_gradient(&self, rows: Range<usize>, theta: &[f64]) -> Result<Vec<f64>> {
        self.check(&rows, theta)?;
        let mut g = vec![0.0; self.dim()];
        for i in rows {
            let x = self.x.row(i);
            let y = self.y[i];
            let coef = match self.kind {
                LossKind::LeastSquares => 2.0 * (dot(x, theta) - y),
                LossKind::Logistic => -y * sigmoid(-y * dot(x, theta)),
            };
            axpy(coef, x, &mut g);
        }
        Ok(g)
    }

    pub fn partial_loss(&self, rows: Range<usize>, theta: &[f64]) -> Result<f64> {
        self.check(&rows, theta)?;
        Ok(rows
            .map(|i| {
                let z = dot(self.x.row(i), theta);
                match self.kind {
                    LossKind::LeastSquares => (z - self.y[i]).powi(2),
                    LossKind::Logistic => softplus(-self.y[i] * z),
                }
            })
            .sum())
    }

    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.partial_gradient(0..self.num_rows(), theta)
    }

    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        self.partial_loss(0..self.num_rows(), theta)
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn require_least_squares(model: &LossModel) -> Result<()> {
    match model.kind {
        LossKind::LeastSquares => Ok(()),
        LossKind::Logistic => Err(Error::InvalidInput("sketched objective is defined for least squares".into())),
    }
}

/// `2·(SX)ᵀ(SXθ − Sy)`.
pub fn sketched_ls_gradient(s: &Mat, model: &LossModel, theta: &[f64]) -> Result<Vec<f64>> {
    require_least_squares(model)?;
    let residual = sketched_residual(s, model, theta)?;
    let sx = s.matmul(&model.x)?;
    let mut g = sx.t_matvec(&residual)?;
    g.iter_mut().for_each(|v| *v *= 2.0);
    Ok(g)
}

/// `Σ ((SXθ)_i − (Sy)_i)²`.
pub fn sketched_ls_loss(s: &Mat, model: &LossModel, theta: &[f64]) -> Result<f64> {
    require_least_squares(model)?;
    Ok(sketched_residual(s, model, theta)?.iter().map(|r| r * r).sum())
}

fn sketched_residual(s: &Mat, model: &LossModel, theta: &[f64]) -> Result<Vec<f64>> {
    if s.cols() != model.num_rows() {
        return Err(Error::Arity { what: "sketch columns", expected: model.num_rows(), got: s.cols() });
    }
    if theta.len() != model.dim() {
        return Err(Error::Arity { what: "parameter vector", expected: model.dim(), got: theta.len() });
    }
    let pred = model.x.matvec(theta)?;
    let r: Vec<f64> = pred.iter().zip(&model.y).map(|(p, y)| p - y).collect();
    s.matvec(&r)
}

/// `Σ_j w_j · g_j` over the distinct sampled parts, each part's rows scaled
/// by `1/√(r·Π_j)`. For least squares a row scaling `c` turns the partial
/// gradient into `c²·g_j`; the same factor importance-weights the logistic
/// loss.
pub fn weighted_gradient(model: &LossModel, plan: &PartitionPlan, sp: &SketchPlan, theta: &[f64]) -> Result<Vec<f64>> {
    check_plan(model, plan, sp)?;
    let mut g = vec![0.0; model.dim()];
    for (j, &part) in sp.distinct_parts.iter().enumerate() {
        let partial = model.partial_gradient(plan.part_range(part), theta)?;
        axpy(sp.loss_factor(j), &partial, &mut g);
    }
    Ok(g)
}

/// Weighted sketched loss matching [`weighted_gradient`].
pub fn weighted_loss(model: &LossModel, plan: &PartitionPlan, sp: &SketchPlan, theta: &[f64]) -> Result<f64> {
    check_plan(model, plan, sp)?;
    sp.distinct_parts
        .iter()
        .enumerate()
        .map(|(j, &part)| Ok(sp.loss_factor(j) * model.partial_loss(plan.part_range(part), theta)?))
        .sum()
}

fn check_plan(model: &LossModel, plan: &PartitionPlan, sp: &SketchPlan) -> Result<()> {
    sp.check_against(plan)?;
    if plan.num_rows() != model.num_rows() {
        return Err(Error::Consistency(format!(
            "partition covers {} rows, model has {}",
            plan.num_rows(),
            model.num_rows()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GdConfig {
    pub step: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl GdConfig {
    pub fn new(step: f64, max_iters: usize, grad_tol: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidInput(format!("step size {step} must be positive")));
        }
        if !(grad_tol > 0.0 && grad_tol.is_finite()) {
            return Err(Error::InvalidInput(format!("gradient tolerance {grad_tol} must be positive")));
        }
        Ok(Self { step, max_iters, grad_tol })
    }
}

/// What one objective evaluation reports back to the descent loop.
#[derive(Clone, Debug, Default)]
pub struct Evaluation {
    pub gradient: Vec<f64>,
    pub loss: f64,
    /// Workers whose messages produced the gradient; empty without a network.
    pub responders: Vec<usize>,
    pub conditioning_warning: bool,
}

#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Iterate at which the gradient was evaluated.
    pub theta: Vec<f64>,
    pub gradient: Vec<f64>,
    pub grad_norm: f64,
    pub loss: f64,
    pub responders: Vec<usize>,
    pub conditioning_warning: bool,
}

#[derive(Clone, Debug, Default)]
pub struct GdTrace {
    pub records: Vec<IterationRecord>,
    pub theta: Vec<f64>,
    /// Parameter updates performed.
    pub iterations: usize,
    pub converged: bool,
}

impl GdTrace {
    pub fn grad_norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.grad_norm)
    }

    pub fn warnings(&self) -> usize {
        self.records.iter().filter(|r| r.conditioning_warning).count()
    }
}

/// Fixed-step descent from `θ_0 = 0`: `θ_{t+1} = θ_t − α·∇(θ_t)` until
/// `‖∇‖₂ < grad_tol` or `max_iters` updates.
pub fn gd<F>(dim: usize, config: &GdConfig, mut objective: F) -> Result<GdTrace>
where
    F: FnMut(usize, &[f64]) -> Result<Evaluation>,
{
    let mut theta = vec![0.0; dim];
    let mut trace = GdTrace::default();
    for t in 0..config.max_iters {
        let eval = objective(t, &theta)?;
        if eval.gradient.len() != dim {
            return Err(Error::Arity { what: "gradient", expected: dim, got: eval.gradient.len() });
        }
        let grad_norm = norm2(&eval.gradient);
        trace.records.push(IterationRecord {
            iteration: t,
            theta: theta.clone(),
            gradient: eval.gradient.clone(),
            grad_norm,
            loss: eval.loss,
            responders: eval.responders,
            conditioning_warning: eval.conditioning_warning,
        });
        if !grad_norm.is_finite() || grad_norm > DIVERGENCE_LIMIT {
            trace.theta = theta;
            return Err(Error::Divergence { iteration: t, grad_norm, trace: Box::new(trace) });
        }
        if grad_norm < config.grad_tol {
            trace.converged = true;
            break;
        }
        axpy(-config.step, &eval.gradient, &mut theta);
        trace.iterations += 1;
    }
    trace.theta = theta;
    Ok(trace)
}

/// Plain full-gradient objective.
pub fn full_objective(model: &LossModel) -> impl FnMut(usize, &[f64]) -> Result<Evaluation> + '_ {
    move |_, theta| Ok(Evaluation { gradient: model.gradient(theta)?, loss: model.loss(theta)?, ..Default::default() })
}

/// Weighted sketched objective evaluated centrally, without a network.
pub fn weighted_objective<'a>(
    model: &'a LossModel,
    plan: &'a PartitionPlan,
    sp: &'a SketchPlan,
) -> impl FnMut(usize, &[f64]) -> Result<Evaluation> + 'a {
    move |_, theta| {
        Ok(Evaluation {
            gradient: weighted_gradient(model, plan, sp, theta)?,
            loss: weighted_loss(model, plan, sp, theta)?,
            ..Default::default()
        })
    }
}
