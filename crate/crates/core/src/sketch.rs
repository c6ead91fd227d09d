//! Block leverage-score sampling.
//!
//! The rows of `X` are split into `K` contiguous, equally sized parts. Each
//! part gets a block score `Π_i` (the sum of the normalised leverage scores of
//! its rows). The sampler draws `k` parts with replacement according to `Π`,
//! keeps each drawn part once, and records how often it was drawn as an
//! integer weight. Kept parts are rescaled by `1/√(r·Π_i)` with the
//! with-multiplicity budget `r = k · N/K`.
//!
//! ```text
//! draws    = [3, 0, 3, 3, 1]        (k = 5)
//! distinct = [0, 1, 3]
//! weights  = [1, 1, 3]              (Σ = k)
//! ```

use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numkit::Mat;

/// Tolerance on `Σπ = 1` accepted from callers.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

/// Split of `N` rows into `K` equipotent contiguous parts, with block scores.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionPlan {
    num_rows: usize,
    num_parts: usize,
    part_size: usize,
    block_scores: Vec<f64>,
}

impl PartitionPlan {
    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_parts(&self) -> usize {
        self.num_parts
    }

    pub fn part_size(&self) -> usize {
        self.part_size
    }

    /// `Π`, one entry per part.
    pub fn block_scores(&self) -> &[f64] {
        &self.block_scores
    }

    pub fn part_range(&self, part: usize) -> Range<usize> {
        part * self.part_size..(part + 1) * self.part_size
    }

    pub fn part_ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.num_parts).map(|i| self.part_range(i))
    }

    /// `max Π / min Π` over parts with positive score.
    pub fn nonuniformity(&self) -> f64 {
        score_ratio(&self.block_scores)
    }
}

/// `max / min` over the positive entries; `inf` when some entry is zero.
pub fn score_ratio(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(0.0, f64::max);
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn make_partition(num_rows: usize, num_parts: usize, pi: &[f64]) -> Result<PartitionPlan> {
    if num_parts == 0 || !num_rows.is_multiple_of(num_parts) {
        return Err(Error::Divisibility { what: "row count", total: num_rows, divisor: num_parts });
    }
    if pi.len() != num_rows {
        return Err(Error::Arity { what: "row probabilities", expected: num_rows, got: pi.len() });
    }
    check_distribution(pi)?;
    let part_size = num_rows / num_parts;
    let mut block_scores: Vec<f64> = pi.chunks(part_size).map(|c| c.iter().sum()).collect();
    let total: f64 = block_scores.iter().sum();
    for s in &mut block_scores {
        *s /= total;
    }
    Ok(PartitionPlan { num_rows, num_parts, part_size, block_scores })
}

fn check_distribution(pi: &[f64]) -> Result<()> {
    if let Some(bad) = pi.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("probability {bad} is negative or non-finite")));
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Inverse-CDF sampling with replacement over the positive-probability
/// support of `probs`.
pub fn draw_indices<R: Rng + ?Sized>(probs: &[f64], count: usize, rng: &mut R) -> Result<Vec<usize>> {
    let mut support = Vec::new();
    let mut cumulative = Vec::new();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            support.push(i);
            cumulative.push(acc);
        }
    }
    if support.is_empty() {
        return Err(Error::InvalidDistribution("no index has positive probability".into()));
    }
    let last = support.len() - 1;
    Ok((0..count)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let slot = cumulative.partition_point(|&c| c <= u).min(last);
            support[slot]
        })
        .collect())
}

/// Outcome of one weighted sampling draw.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchPlan {
    /// Drawn part indices, in draw order, with repetition.
    pub draws: Vec<usize>,
    /// Each drawn part once, ascending.
    pub distinct_parts: Vec<usize>,
    /// Multiplicity of each distinct part.
    pub weights: Vec<usize>,
    /// `1/√(r·Π_j)` per distinct part.
    pub rescale: Vec<f64>,
    /// Retained row budget `r`.
    pub budget: usize,
    num_parts: usize,
    part_size: usize,
}

impl SketchPlan {
    /// Every part kept once, unscaled: the identity sketch.
    pub fn full(plan: &PartitionPlan) -> Self {
        let parts: Vec<usize> = (0..plan.num_parts).collect();
        Self {
            draws: parts.clone(),
            distinct_parts: parts,
            weights: vec![1; plan.num_parts],
            rescale: vec![1.0; plan.num_parts],
            budget: plan.num_rows,
            num_parts: plan.num_parts,
            part_size: plan.part_size,
        }
    }

    /// The same draw with every multiplicity replaced by one.
    pub fn unweighted(&self) -> Self {
        Self { weights: vec![1; self.weights.len()], ..self.clone() }
    }

    pub fn num_draws(&self) -> usize {
        self.draws.len()
    }

    pub fn num_distinct(&self) -> usize {
        self.distinct_parts.len()
    }

    pub fn total_weight(&self) -> usize {
        self.weights.iter().sum()
    }

    /// Rows carried by the weighted sketch `Ŝ`: `k' · N/K`.
    pub fn retained_rows(&self) -> usize {
        self.distinct_parts.len() * self.part_size
    }

    /// `w_j / (r·Π_j)`: the combined factor each distinct part's loss
    /// carries in the weighted sketched objective.
    pub fn loss_factor(&self, j: usize) -> f64 {
        self.weights[j] as f64 * self.rescale[j] * self.rescale[j]
    }

    pub fn check_against(&self, plan: &PartitionPlan) -> Result<()> {
        if self.num_parts != plan.num_parts || self.part_size != plan.part_size {
            return Err(Error::Consistency(format!(
                "sketch drawn from {} parts of size {}, plan has {} parts of size {}",
                self.num_parts, self.part_size, plan.num_parts, plan.part_size
            )));
        }
        let n = self.distinct_parts.len();
        if self.weights.len() != n || self.rescale.len() != n {
            return Err(Error::Consistency("weights/rescale length differs from distinct parts".into()));
        }
        if self.distinct_parts.iter().any(|&p| p >= plan.num_parts) {
            return Err(Error::Consistency("distinct part index out of range".into()));
        }
        Ok(())
    }
}

/// Draws `k` parts with replacement according to the block scores.
pub fn sample_weighted<R: Rng + ?Sized>(plan: &PartitionPlan, k: usize, rng: &mut R) -> Result<SketchPlan> {
    if k == 0 {
        return Err(Error::InvalidInput("must draw at least one part".into()));
    }
    let draws = draw_indices(&plan.block_scores, k, rng)?;
    let mut counts = vec![0usize; plan.num_parts];
    for &d in &draws {
        counts[d] += 1;
    }
    let budget = k * plan.part_size;
    let (mut distinct_parts, mut weights, mut rescale) = (Vec::new(), Vec::new(), Vec::new());
    for (part, &count) in counts.iter().enumerate() {
        if count > 0 {
            distinct_parts.push(part);
            weights.push(count);
            rescale.push(1.0 / (budget as f64 * plan.block_scores[part]).sqrt());
        }
    }
    Ok(SketchPlan {
        draws,
        distinct_parts,
        weights,
        rescale,
        budget,
        num_parts: plan.num_parts,
        part_size: plan.part_size,
    })
}

/// `S_p = D_p · S_Xpᵀ`, of shape `k'·N/K × N`.
pub fn build_sp(plan: &PartitionPlan, sp: &SketchPlan) -> Result<Mat> {
    build_selector(plan, sp, |_| 1.0)
}

/// `Ŝ = √W · S_p` with `W = diag(w) ⊗ I_{N/K}`.
pub fn build_shat(plan: &PartitionPlan, sp: &SketchPlan) -> Result<Mat> {
    build_selector(plan, sp, |j| (sp.weights[j] as f64).sqrt())
}

fn build_selector(plan: &PartitionPlan, sp: &SketchPlan, extra: impl Fn(usize) -> f64) -> Result<Mat> {
    sp.check_against(plan)?;
    let size = plan.part_size;
    let mut s = Mat::zeros(sp.distinct_parts.len() * size, plan.num_rows);
    for (j, &part) in sp.distinct_parts.iter().enumerate() {
        let scale = sp.rescale[j] * extra(j);
        for (offset, row) in plan.part_range(part).enumerate() {
            s[(j * size + offset, row)] = scale;
        }
    }
    Ok(s)
}

/// Classic row-sampling sketch `S̃ = D · S_Xᵀ` (r × N): draw `r` rows with
/// replacement from `π` and scale each by `1/√(r·π_i)`.
pub fn build_classic_sketch<R: Rng + ?Sized>(pi: &[f64], r: usize, rng: &mut R) -> Result<Mat> {
    if r == 0 {
        return Err(Error::InvalidInput("sketch needs at least one row".into()));
    }
    check_distribution(pi)?;
    let draws = draw_indices(pi, r, rng)?;
    let mut s = Mat::zeros(r, pi.len());
    for (t, &i) in draws.iter().enumerate() {
        s[(t, i)] = 1.0 / (r as f64 * pi[i]).sqrt();
    }
    Ok(s)
}

/// Block analogue of [`build_classic_sketch`] for an explicit draw sequence:
/// every draw contributes the `N/K` rows of its part, each scaled by
/// `1/√(r·Π_j)` with `r = draws · N/K`. Repeated draws repeat rows.
pub fn build_block_sketch(plan: &PartitionPlan, draws: &[usize]) -> Result<Mat> {
    if let Some(&bad) = draws.iter().find(|&&d| d >= plan.num_parts || plan.block_scores[d] <= 0.0) {
        return Err(Error::Consistency(format!("part {bad} cannot be drawn from this plan")));
    }
    let size = plan.part_size;
    let budget = (draws.len() * size) as f64;
    let mut s = Mat::zeros(draws.len() * size, plan.num_rows);
    for (t, &part) in draws.iter().enumerate() {
        let scale = 1.0 / (budget * plan.block_scores[part]).sqrt();
        for (offset, row) in plan.part_range(part).enumerate() {
            s[(t * size + offset, row)] = scale;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn uniform_and_singleton_partitions() {
        let plan = make_partition(4, 2, &[0.25; 4]).unwrap();
        assert_eq!(plan.block_scores(), &[0.5, 0.5]);
        assert_eq!(plan.part_range(1), 2..4);

        let pi = [0.1, 0.2, 0.3, 0.4];
        let plan = make_partition(4, 4, &pi).unwrap();
        for (a, b) in plan.block_scores().iter().zip(&pi) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn partition_errors() {
        assert!(matches!(make_partition(5, 2, &[0.2; 5]), Err(Error::Divisibility { .. })));
        assert!(matches!(make_partition(4, 2, &[0.3; 4]), Err(Error::InvalidDistribution(_))));
        assert!(matches!(make_partition(4, 2, &[0.5; 2]), Err(Error::Arity { .. })));
    }

    #[test]
    fn single_part_collects_all_draws() {
        let plan = make_partition(6, 1, &[1.0 / 6.0; 6]).unwrap();
        let sp = sample_weighted(&plan, 5, &mut seeded(1)).unwrap();
        assert_eq!(sp.distinct_parts, vec![0]);
        assert_eq!(sp.weights, vec![5]);
        assert_eq!(sp.budget, 30);
    }

    #[test]
    fn zero_mass_part_is_never_drawn() {
        let plan = make_partition(2, 2, &[1.0, 0.0]).unwrap();
        for seed in 0..200 {
            let sp = sample_weighted(&plan, 3, &mut seeded(seed)).unwrap();
            assert_eq!(sp.distinct_parts, vec![0]);
            assert_eq!(sp.weights, vec![3]);
        }
        let empty = PartitionPlan { num_rows: 2, num_parts: 2, part_size: 1, block_scores: vec![0.0, 0.0] };
        assert!(matches!(sample_weighted(&empty, 1, &mut seeded(0)), Err(Error::InvalidDistribution(_))));
    }

    #[test]
    fn same_part_probability_matches_binomial() {
        // P(both draws land on the same of two equiprobable parts) = 1/2.
        let plan = make_partition(2, 2, &[0.5, 0.5]).unwrap();
        let trials = 100_000;
        let mut rng = seeded(2024);
        let same = (0..trials)
            .filter(|_| sample_weighted(&plan, 2, &mut rng).unwrap().num_distinct() == 1)
            .count();
        let freq = same as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.01, "frequency {freq}");
    }

    #[test]
    fn sp_for_part_drawn_twice() {
        let plan = make_partition(2, 2, &[0.5, 0.5]).unwrap();
        let sp = SketchPlan {
            draws: vec![1, 1],
            distinct_parts: vec![1],
            weights: vec![2],
            rescale: vec![1.0 / (2.0f64 * 0.5).sqrt()],
            budget: 2,
            num_parts: 2,
            part_size: 1,
        };
        let s = build_sp(&plan, &sp).unwrap();
        assert_eq!(s, Mat::from_rows(&[vec![0.0, 1.0]]).unwrap());
        let shat = build_shat(&plan, &sp).unwrap();
        assert!((shat[(0, 1)] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unit_and_square_weights_in_shat() {
        let plan = make_partition(8, 4, &[0.125; 8]).unwrap();
        let sp = sample_weighted(&plan, 4, &mut seeded(9)).unwrap().unweighted();
        assert_eq!(build_shat(&plan, &sp).unwrap(), build_sp(&plan, &sp).unwrap());

        let single = make_partition(4, 1, &[0.25; 4]).unwrap();
        let sp = sample_weighted(&single, 4, &mut seeded(3)).unwrap();
        assert_eq!(sp.weights, vec![4]);
        let (s, shat) = (build_sp(&single, &sp).unwrap(), build_shat(&single, &sp).unwrap());
        assert!(shat.max_abs_diff(&s.scaled(2.0)) < 1e-15);
    }

    #[test]
    fn mismatched_plan_is_rejected() {
        let a = make_partition(8, 4, &[0.125; 8]).unwrap();
        let b = make_partition(8, 2, &[0.125; 8]).unwrap();
        let sp = sample_weighted(&a, 3, &mut seeded(0)).unwrap();
        assert!(matches!(build_sp(&b, &sp), Err(Error::Consistency(_))));
    }

    #[test]
    fn classic_sketch_scaling() {
        let s = build_classic_sketch(&[1.0], 3, &mut seeded(0)).unwrap();
        for t in 0..3 {
            assert!((s[(t, 0)] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
        let n = 6;
        let s = build_classic_sketch(&vec![1.0 / n as f64; n], 4, &mut seeded(5)).unwrap();
        let expected = (n as f64 / 4.0).sqrt();
        for t in 0..4 {
            let nz: Vec<f64> = s.row(t).iter().copied().filter(|v| *v != 0.0).collect();
            assert_eq!(nz.len(), 1);
            assert!((nz[0] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn full_sketch_is_identity() {
        let plan = make_partition(6, 3, &[1.0 / 6.0; 6]).unwrap();
        let sp = SketchPlan::full(&plan);
        assert_eq!(build_shat(&plan, &sp).unwrap(), Mat::identity(6));
    }
}
