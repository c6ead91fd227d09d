//! Logical-time simulation of the coded worker network.
//!
//! Each round every worker combines the partial gradients of its assigned
//! partitions with its row of `B̃`; stragglers are erased and the server
//! decodes the weighted gradient from the remaining `f` messages.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;

use crate::coding::{weight_scheme_real, CodingParams, CodingScheme};
use crate::error::{Error, Result};
use crate::numkit::{norm2, CMat, Mat};
use crate::optimize::{gd, weighted_loss, Evaluation, GdConfig, GdTrace, LossModel};
use crate::sketch::{PartitionPlan, SketchPlan};

/// Imaginary residual allowed per unit of `1 + ‖decoded‖₂`.
pub const IMAG_RESIDUAL_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StragglerKind {
    /// Nobody straggles; the first `f` workers respond.
    None,
    /// `count` stragglers drawn uniformly each round.
    UniformRandom { count: usize },
    /// The listed workers always straggle.
    FixedSet(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StragglerModel {
    pub kind: StragglerKind,
}

impl StragglerModel {
    pub fn none() -> Self {
        Self { kind: StragglerKind::None }
    }

    pub fn uniform(count: usize) -> Self {
        Self { kind: StragglerKind::UniformRandom { count } }
    }

    pub fn fixed(workers: Vec<usize>) -> Self {
        Self { kind: StragglerKind::FixedSet(workers) }
    }

    pub fn stragglers(&self) -> usize {
        match &self.kind {
            StragglerKind::None => 0,
            StragglerKind::UniformRandom { count } => *count,
            StragglerKind::FixedSet(set) => set.len(),
        }
    }

    pub fn validate(&self, params: &CodingParams) -> Result<()> {
        let s = self.stragglers();
        if s > params.stragglers {
            return Err(Error::StragglerModel(format!(
                "{s} stragglers exceed the tolerated {}",
                params.stragglers
            )));
        }
        if let StragglerKind::FixedSet(set) = &self.kind {
            let mut seen = vec![false; params.n];
            for &w in set {
                if w >= params.n || std::mem::replace(&mut seen[w], true) {
                    return Err(Error::StragglerModel(format!("worker {w} out of range or repeated")));
                }
            }
        }
        Ok(())
    }
}

/// Responder set of size `f`, ascending. When fewer than `s` workers
/// straggle, the surplus responders are dropped uniformly at random.
pub fn select_responders<R: Rng + ?Sized>(
    model: &StragglerModel,
    params: &CodingParams,
    rng: &mut R,
) -> Result<Vec<usize>> {
    model.validate(params)?;
    let (n, f) = (params.n, params.responders);
    let alive: Vec<usize> = match &model.kind {
        StragglerKind::None => return Ok((0..f).collect()),
        StragglerKind::UniformRandom { count } => {
            let mut dead = vec![false; n];
            for i in sample(rng, n, *count) {
                dead[i] = true;
            }
            (0..n).filter(|&i| !dead[i]).collect()
        }
        StragglerKind::FixedSet(set) => (0..n).filter(|i| !set.contains(i)).collect(),
    };
    let mut chosen: Vec<usize> = if alive.len() > f {
        sample(rng, alive.len(), f).into_iter().map(|slot| alive[slot]).collect()
    } else {
        alive
    };
    chosen.sort_unstable();
    Ok(chosen)
}

/// Worker messages `B̃ · g` (n×p), each row built only from the worker's
/// assigned partitions.
pub fn encode_tasks(scheme: &CodingScheme, btilde: &CMat, partials: &Mat) -> Result<CMat> {
    let (n, k) = (scheme.params.n, scheme.params.k);
    if partials.rows() != k {
        return Err(Error::Arity { what: "partial gradients", expected: k, got: partials.rows() });
    }
    if (btilde.rows(), btilde.cols()) != (n, k) {
        return Err(Error::Consistency(format!(
            "encoding matrix is {}x{}, scheme expects {n}x{k}",
            btilde.rows(),
            btilde.cols()
        )));
    }
    let p = partials.cols();
    let mut messages = CMat::zeros(n, p);
    for i in 0..n {
        let out = messages.row_mut(i);
        for j in scheme.mask.row_support(i) {
            let coef = btilde[(i, j)];
            for (m, &g) in out.iter_mut().zip(partials.row(j)) {
                *m += coef * g;
            }
        }
    }
    Ok(messages)
}

#[derive(Clone, Debug)]
pub struct RoundResult {
    pub responders: Vec<usize>,
    pub decoded: Vec<f64>,
    /// `‖Im(a_Iᵀ · messages)‖₂`
    pub imag_residual: f64,
    pub conditioning_warning: bool,
}

/// Applies `a_I` to the `f` received messages (rows ordered like `responders`).
pub fn decode_round(scheme: &CodingScheme, responders: &[usize], messages: &CMat) -> Result<RoundResult> {
    let decode = scheme.decode_vector(responders)?;
    if messages.rows() != responders.len() {
        return Err(Error::Arity { what: "received messages", expected: responders.len(), got: messages.rows() });
    }
    let mut combined = vec![Complex64::new(0.0, 0.0); messages.cols()];
    for (r, &a) in decode.coeffs.iter().enumerate() {
        for (c, &m) in combined.iter_mut().zip(messages.row(r)) {
            *c += a * m;
        }
    }
    let decoded: Vec<f64> = combined.iter().map(|z| z.re).collect();
    let imag: Vec<f64> = combined.iter().map(|z| z.im).collect();
    let imag_residual = norm2(&imag);
    let conditioning_warning =
        decode.ill_conditioned || imag_residual > IMAG_RESIDUAL_TOL * (1.0 + norm2(&decoded));
    Ok(RoundResult { responders: responders.to_vec(), decoded, imag_residual, conditioning_warning })
}

/// One sampled part bound to a column of the code, or an empty padding
/// column with weight zero.
#[derive(Clone, Copy, Debug)]
enum Slot {
    Part { part: usize, factor: f64 },
    Padding,
}

/// Result of a simulated distributed descent.
#[derive(Clone, Debug)]
pub struct DistributedRun {
    pub trace: GdTrace,
    /// Partition reads per worker, summed over all rounds.
    pub part_reads: Vec<usize>,
    /// Data rows a single worker touches per round, per worker.
    pub rows_per_round: Vec<usize>,
    /// Code columns carrying weight zero.
    pub padded_columns: usize,
}

/// Runs gradient descent where every gradient is recovered through the
/// coded network. Sampled parts fill the first `k'` code columns with their
/// draw counts as weights; the remaining `k − k'` columns carry weight 0.
pub fn run_distributed_gd<R: Rng + ?Sized>(
    model: &LossModel,
    plan: &PartitionPlan,
    sp: &SketchPlan,
    scheme: &CodingScheme,
    config: &GdConfig,
    stragglers: &StragglerModel,
    rng: &mut R,
) -> Result<DistributedRun> {
    sp.check_against(plan)?;
    stragglers.validate(&scheme.params)?;
    let (n, k) = (scheme.params.n, scheme.params.k);
    if sp.num_distinct() > k {
        return Err(Error::Consistency(format!(
            "{} distinct parts do not fit in {k} code columns",
            sp.num_distinct()
        )));
    }

    let mut slots: Vec<Slot> = sp
        .distinct_parts
        .iter()
        .enumerate()
        .map(|(j, &part)| Slot::Part { part, factor: sp.rescale[j] * sp.rescale[j] })
        .collect();
    let padded_columns = k - slots.len();
    slots.resize(k, Slot::Padding);
    let weights: Vec<f64> = (0..k).map(|j| sp.weights.get(j).map_or(0.0, |&w| w as f64)).collect();
    let btilde = weight_scheme_real(scheme, &weights)?;

    let worker_parts: Vec<Vec<usize>> = (0..n).map(|i| scheme.mask.row_support(i)).collect();
    let rows_per_round: Vec<usize> = worker_parts
        .iter()
        .map(|parts| parts.iter().filter(|&&j| matches!(slots[j], Slot::Part { .. })).count() * plan.part_size())
        .collect();
    let mut part_reads = vec![0usize; n];
    let p = model.dim();

    let objective = |_: usize, theta: &[f64]| -> Result<Evaluation> {
        let mut partials = Mat::zeros(k, p);
        for (j, slot) in slots.iter().enumerate() {
            if let Slot::Part { part, factor } = *slot {
                let g = model.partial_gradient(plan.part_range(part), theta)?;
                for (dst, v) in partials.row_mut(j).iter_mut().zip(g) {
                    *dst = factor * v;
                }
            }
        }
        for (reads, parts) in part_reads.iter_mut().zip(&worker_parts) {
            *reads += parts.iter().filter(|&&j| matches!(slots[j], Slot::Part { .. })).count();
        }
        let messages = encode_tasks(scheme, &btilde, &partials)?;
        let responders = select_responders(stragglers, &scheme.params, rng)?;
        let round = decode_round(scheme, &responders, &messages.select_rows(&responders))?;
        Ok(Evaluation {
            gradient: round.decoded,
            loss: weighted_loss(model, plan, sp, theta)?,
            responders: round.responders,
            conditioning_warning: round.conditioning_warning,
        })
    };
    let trace = gd(p, config, objective)?;
    Ok(DistributedRun { trace, part_reads, rows_per_round, padded_columns })
}
