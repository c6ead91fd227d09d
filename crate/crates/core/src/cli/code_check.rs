use std::path::Path;

use itertools::Itertools;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;

use super::{num, seed_field, write_csv, ExperimentConfig};
use crate::coding::{balanced_scheme, decode_identity_error, weight_scheme, CodingParams, CodingScheme};
use crate::error::Result;
use crate::rng::seeded;

#[derive(Clone, Debug)]
pub struct CodeCheckReport {
    pub params: CodingParams,
    pub subsets: usize,
    pub exhaustive: bool,
    pub max_residual_unweighted: f64,
    pub max_residual_weighted: f64,
    pub ill_conditioned: usize,
    pub digest: String,
    pub seed_sampler: Option<u64>,
    pub seed_straggler: Option<u64>,
}

fn binomial(n: usize, r: usize) -> u128 {
    let r = r.min(n - r) as u128;
    (0..r).fold(1u128, |acc, i| acc.saturating_mul(n as u128 - i) / (i + 1))
}

/// All `f`-subsets of `[n]` when there are at most `exhaustive_limit` of
/// them, otherwise `samples` uniformly drawn ones (sorted). The flag says
/// which case applied.
pub fn responder_sets<R: Rng + ?Sized>(
    n: usize,
    f: usize,
    exhaustive_limit: usize,
    samples: usize,
    rng: &mut R,
) -> (Vec<Vec<usize>>, bool) {
    if binomial(n, f) <= exhaustive_limit as u128 {
        return ((0..n).combinations(f).collect(), true);
    }
    let sets = (0..samples)
        .map(|_| {
            let mut set = sample(rng, n, f).into_vec();
            set.sort_unstable();
            set
        })
        .collect();
    (sets, false)
}

/// Largest `‖a_Iᵀ B̃_I − w‖_∞ / max(1, ‖w‖_∞)` over the given responder sets,
/// plus how many sets tripped the conditioning guard.
pub fn identity_residual(scheme: &CodingScheme, sets: &[Vec<usize>], weights: &[f64]) -> Result<(f64, usize)> {
    let w: Vec<Complex64> = weights.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let btilde = weight_scheme(scheme, &w)?;
    let scale = weights.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let (mut worst, mut flagged) = (0.0f64, 0);
    for set in sets {
        let decode = scheme.decode_vector(set)?;
        flagged += usize::from(decode.ill_conditioned);
        worst = worst.max(decode_identity_error(&decode, &btilde, &w) / scale);
    }
    Ok((worst, flagged))
}

pub fn cmd_code_check(cfg: &ExperimentConfig) -> Result<CodeCheckReport> {
    let scheme = balanced_scheme(cfg.n, cfg.k, cfg.d)?;
    let params = scheme.params;
    let mut weight_rng = seeded(cfg.seed_sampler()?);
    let mut set_rng = seeded(cfg.seed_straggler()?);
    let (sets, exhaustive) = responder_sets(params.n, params.responders, cfg.exhaustive_limit, cfg.subsets, &mut set_rng);
    let weights: Vec<f64> = (0..params.k).map(|_| weight_rng.random_range(0.0..5.0)).collect();
    let (unweighted, flagged_u) = identity_residual(&scheme, &sets, &vec![1.0; params.k])?;
    let (weighted, flagged_w) = identity_residual(&scheme, &sets, &weights)?;
    Ok(CodeCheckReport {
        params,
        subsets: sets.len(),
        exhaustive,
        max_residual_unweighted: unweighted,
        max_residual_weighted: weighted,
        ill_conditioned: flagged_u.max(flagged_w),
        digest: cfg.digest(),
        seed_sampler: cfg.seed_sampler,
        seed_straggler: cfg.seed_straggler,
    })
}

impl CodeCheckReport {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let p = &self.params;
        let row = vec![
            p.n.to_string(),
            p.k.to_string(),
            p.d.to_string(),
            p.parts_per_worker.to_string(),
            p.stragglers.to_string(),
            p.responders.to_string(),
            self.subsets.to_string(),
            self.exhaustive.to_string(),
            num(self.max_residual_unweighted),
            num(self.max_residual_weighted),
            self.ill_conditioned.to_string(),
            self.digest.clone(),
            seed_field(self.seed_sampler),
            seed_field(self.seed_straggler),
        ];
        write_csv(
            &dir.join("code_check.csv"),
            &[
                "n",
                "k",
                "d",
                "w",
                "s",
                "f",
                "subsets",
                "exhaustive",
                "max_residual_unweighted",
                "max_residual_weighted",
                "ill_conditioned",
                "config_digest",
                "seed_sampler",
                "seed_straggler",
            ],
            [row],
        )
    }

    pub fn summary_lines(&self) -> Vec<String> {
        let p = &self.params;
        vec![
            format!(
                "scheme n={} k={} d={} w={} s={} f={}",
                p.n, p.k, p.d, p.parts_per_worker, p.stragglers, p.responders
            ),
            format!(
                "{} responder sets ({}), max residual unweighted {:.3e}, weighted {:.3e}, ill-conditioned {}",
                self.subsets,
                if self.exhaustive { "exhaustive" } else { "sampled" },
                self.max_residual_unweighted,
                self.max_residual_weighted,
                self.ill_conditioned
            ),
        ]
    }
}
