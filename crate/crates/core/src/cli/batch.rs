use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use super::code_check::{identity_residual, responder_sets};
use super::{num, seed_field, write_csv, ExperimentConfig, Task};
use crate::coding::{balanced_scheme, CodingScheme};
use crate::data::{load_mnist, synth_regression, Dataset};
use crate::error::{Error, Result};
use crate::numkit::{leverage_scores_with_rank, lstsq, normalize_scores, Mat};
use crate::optimize::{gd, weighted_objective, GdConfig, GdTrace, LossModel};
use crate::rng::{derive_seed, seeded};
use crate::simulate::{run_distributed_gd, StragglerModel};
use crate::sketch::{make_partition, sample_weighted, PartitionPlan, SketchPlan};

#[derive(Clone, Debug, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub grad_norm: f64,
    pub loss: f64,
    pub responders: Vec<usize>,
}

/// One GD run of one sketch variant.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub rho: usize,
    pub weighted: bool,
    pub run: usize,
    pub sampler_seed: u64,
    pub straggler_seed: u64,
    pub distinct_parts: usize,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    pub final_grad_norm: f64,
    /// Parameter error for regression, test error rate for MNIST.
    pub error: f64,
    /// Largest number of rows any worker touches per round.
    pub max_worker_rows: usize,
    pub warnings: usize,
    pub theta: Vec<f64>,
    pub trace: Vec<TracePoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariantSummary {
    pub rho: usize,
    pub weighted: bool,
    pub runs: usize,
    pub converged: usize,
    pub diverged: usize,
    /// Means over the runs that did not diverge.
    pub mean_iterations: f64,
    pub mean_error: f64,
}

#[derive(Clone, Debug)]
pub struct BatchReport {
    pub task: Task,
    pub runs: Vec<RunRecord>,
    pub summaries: Vec<VariantSummary>,
    pub digest: String,
    pub seed_data: Option<u64>,
    pub seed_sampler: Option<u64>,
    pub seed_straggler: Option<u64>,
    pub code_residual: f64,
    pub train_rows: usize,
    pub test_rows: usize,
}

struct Setup<'a> {
    model: &'a LossModel,
    plan: PartitionPlan,
    scheme: &'a CodingScheme,
    gd: GdConfig,
    network: bool,
    stragglers: usize,
    uncompressed: bool,
}

fn label(weighted: bool) -> &'static str {
    if weighted {
        "weighted"
    } else {
        "unweighted"
    }
}

fn descend(setup: &Setup, sp: &SketchPlan, straggler_seed: u64) -> Result<(GdTrace, bool, usize)> {
    let outcome = if setup.network {
        let model = StragglerModel::uniform(setup.stragglers);
        run_distributed_gd(setup.model, &setup.plan, sp, setup.scheme, &setup.gd, &model, &mut seeded(straggler_seed))
            .map(|run| {
                let rows = run.rows_per_round.iter().copied().max().unwrap_or(0);
                (run.trace, rows)
            })
    } else {
        let rows = sp.num_distinct() * setup.plan.part_size();
        gd(setup.model.dim(), &setup.gd, weighted_objective(setup.model, &setup.plan, sp)).map(|t| (t, rows))
    };
    match outcome {
        Ok((trace, rows)) => Ok((trace, false, rows)),
        Err(Error::Divergence { trace, .. }) => Ok((*trace, true, 0)),
        Err(e) => Err(e),
    }
}

fn run_batch(
    setup: &Setup,
    rho: usize,
    cfg: &ExperimentConfig,
    metric: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<Vec<RunRecord>> {
    let seed_sampler = cfg.seed_sampler()?;
    let seed_straggler = cfg.seed_straggler()?;
    let per_run: Vec<Vec<RunRecord>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| -> Result<Vec<RunRecord>> {
            let sampler_seed = derive_seed(seed_sampler, run as u64);
            let straggler_seed = derive_seed(seed_straggler, run as u64);
            let sp = if setup.uncompressed {
                SketchPlan::full(&setup.plan)
            } else {
                sample_weighted(&setup.plan, cfg.k, &mut seeded(sampler_seed))?
            };
            cfg.weighted
                .flags()
                .iter()
                .map(|&weighted| {
                    let variant = if weighted { sp.clone() } else { sp.unweighted() };
                    let (trace, diverged, max_worker_rows) = descend(setup, &variant, straggler_seed)?;
                    let last = trace.records.last();
                    Ok(RunRecord {
                        rho,
                        weighted,
                        run,
                        sampler_seed,
                        straggler_seed,
                        distinct_parts: variant.num_distinct(),
                        iterations: trace.iterations,
                        converged: trace.converged,
                        diverged,
                        final_grad_norm: last.map_or(f64::NAN, |r| r.grad_norm),
                        error: metric(&trace.theta),
                        max_worker_rows,
                        warnings: trace.warnings(),
                        trace: trace
                            .records
                            .iter()
                            .map(|r| TracePoint {
                                iteration: r.iteration,
                                grad_norm: r.grad_norm,
                                loss: r.loss,
                                responders: r.responders.clone(),
                            })
                            .collect(),
                        theta: trace.theta,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_run.into_iter().flatten().collect())
}

fn summarize(runs: &[RunRecord]) -> Vec<VariantSummary> {
    let mut groups: BTreeMap<(usize, bool), Vec<&RunRecord>> = BTreeMap::new();
    for r in runs {
        groups.entry((r.rho, !r.weighted)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((rho, unweighted), rs)| {
            let ok: Vec<&&RunRecord> = rs.iter().filter(|r| !r.diverged).collect();
            let mean = |f: fn(&RunRecord) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            VariantSummary {
                rho,
                weighted: !unweighted,
                runs: rs.len(),
                converged: rs.iter().filter(|r| r.converged).count(),
                diverged: rs.len() - ok.len(),
                mean_iterations: mean(|r| r.iterations as f64),
                mean_error: mean(|r| r.error),
            }
        })
        .collect()
}

fn code_residual(scheme: &CodingScheme, cfg: &ExperimentConfig) -> Result<f64> {
    let p = scheme.params;
    let mut rng = seeded(cfg.seed_straggler()?);
    let (sets, _) = responder_sets(p.n, p.responders, cfg.exhaustive_limit, cfg.subsets, &mut rng);
    Ok(identity_residual(scheme, &sets, &vec![1.0; p.k])?.0)
}

fn partition_for(x: &Mat, parts: usize) -> Result<PartitionPlan> {
    let (lev, _) = leverage_scores_with_rank(x)?;
    make_partition(x.rows(), parts, &normalize_scores(&lev)?)
}

/// Synthetic least-squares batches: for every ρ, `runs` draws of the block
/// sampler, each descended with and without weights. Error is
/// `‖θ − X^†y‖²`.
pub fn cmd_regression(cfg: &ExperimentConfig) -> Result<BatchReport> {
    cfg.validate()?;
    let scheme = balanced_scheme(cfg.n, cfg.k, cfg.d)?;
    let data = synth_regression(cfg.seed_data()?).dataset;
    let optimum = lstsq(&data.x, &data.y)?;
    let model = LossModel::least_squares(data.x.clone(), data.y.clone())?;
    let metric = |theta: &[f64]| theta.iter().zip(&optimum).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let mut runs = Vec::new();
    for &rho in &cfg.rho {
        let setup = Setup {
            model: &model,
            plan: partition_for(&data.x, rho * cfg.k)?,
            scheme: &scheme,
            gd: cfg.gd_config()?,
            network: cfg.network,
            stragglers: cfg.straggler_count()?,
            uncompressed: rho == 1,
        };
        runs.extend(run_batch(&setup, rho, cfg, &metric)?);
    }
    finish(cfg, Task::Regression, &scheme, runs, data.num_rows(), 0)
}

fn required<'a>(path: &'a Option<std::path::PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| Error::Config(format!("mnist requires {key}")))
}

/// Logistic batches on two MNIST digit classes; error is the misclassified
/// fraction of the filtered test split.
pub fn cmd_mnist(cfg: &ExperimentConfig) -> Result<BatchReport> {
    cfg.validate()?;
    let scheme = balanced_scheme(cfg.n, cfg.k, cfg.d)?;
    let train = load_mnist(
        required(&cfg.train_images, "train_images")?,
        required(&cfg.train_labels, "train_labels")?,
        cfg.classes,
        cfg.limit,
    )?;
    let test = load_mnist(
        required(&cfg.test_images, "test_images")?,
        required(&cfg.test_labels, "test_labels")?,
        cfg.classes,
        usize::MAX,
    )?;
    let metric = |theta: &[f64]| test_error(&test, theta);
    let mut runs = Vec::new();
    let mut train_rows = 0;
    let mut scores: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &rho in &cfg.rho {
        let data = train.truncate_to_multiple(rho * cfg.k)?;
        train_rows = train_rows.max(data.num_rows());
        let pi = match scores.get(&data.num_rows()) {
            Some(pi) => pi.clone(),
            None => {
                let pi = normalize_scores(&leverage_scores_with_rank(&data.x)?.0)?;
                scores.insert(data.num_rows(), pi.clone());
                pi
            }
        };
        let plan = make_partition(data.num_rows(), rho * cfg.k, &pi)?;
        let model = LossModel::logistic(data.x, data.y)?;
        let setup = Setup {
            model: &model,
            plan,
            scheme: &scheme,
            gd: cfg.gd_config()?,
            network: cfg.network,
            stragglers: cfg.straggler_count()?,
            uncompressed: rho == 1,
        };
        runs.extend(run_batch(&setup, rho, cfg, &metric)?);
    }
    finish(cfg, Task::Mnist, &scheme, runs, train_rows, test.num_rows())
}

/// Fraction of rows whose sign of `xᵀθ` (zero counted as +1) misses the label.
pub fn test_error(data: &Dataset, theta: &[f64]) -> f64 {
    let wrong = (0..data.num_rows())
        .filter(|&i| {
            let z: f64 = data.x.row(i).iter().zip(theta).map(|(a, b)| a * b).sum();
            let predicted = if z >= 0.0 { 1.0 } else { -1.0 };
            predicted != data.y[i]
        })
        .count();
    wrong as f64 / data.num_rows() as f64
}

fn finish(
    cfg: &ExperimentConfig,
    task: Task,
    scheme: &CodingScheme,
    runs: Vec<RunRecord>,
    train_rows: usize,
    test_rows: usize,
) -> Result<BatchReport> {
    Ok(BatchReport {
        task,
        summaries: summarize(&runs),
        runs,
        digest: cfg.digest(),
        seed_data: cfg.seed_data,
        seed_sampler: cfg.seed_sampler,
        seed_straggler: cfg.seed_straggler,
        code_residual: code_residual(scheme, cfg)?,
        train_rows,
        test_rows,
    })
}

impl BatchReport {
    fn prefix(&self) -> &'static str {
        match self.task {
            Task::Mnist => "mnist",
            _ => "regression",
        }
    }

    fn error_column(&self) -> &'static str {
        match self.task {
            Task::Mnist => "test_error",
            _ => "error",
        }
    }

    pub fn summary(&self, rho: usize, weighted: bool) -> Option<&VariantSummary> {
        self.summaries.iter().find(|s| s.rho == rho && s.weighted == weighted)
    }

    /// Per-iteration gradient norm averaged over the runs still active at
    /// that iteration, with the active count.
    pub fn mean_trace(&self, rho: usize, weighted: bool) -> Vec<(usize, f64, usize)> {
        let runs: Vec<&RunRecord> = self.runs.iter().filter(|r| r.rho == rho && r.weighted == weighted).collect();
        let len = runs.iter().map(|r| r.trace.len()).max().unwrap_or(0);
        (0..len)
            .map(|t| {
                let active: Vec<f64> = runs.iter().filter_map(|r| r.trace.get(t).map(|p| p.grad_norm)).collect();
                (t, active.iter().sum::<f64>() / active.len() as f64, active.len())
            })
            .collect()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let prefix = self.prefix();
        write_csv(
            &dir.join(format!("{prefix}_runs.csv")),
            &[
                "rho",
                "variant",
                "run",
                "sampler_seed",
                "straggler_seed",
                "distinct_parts",
                "iterations",
                "converged",
                "diverged",
                "final_grad_norm",
                self.error_column(),
                "max_worker_rows",
                "conditioning_warnings",
            ],
            self.runs.iter().map(|r| {
                vec![
                    r.rho.to_string(),
                    label(r.weighted).into(),
                    r.run.to_string(),
                    r.sampler_seed.to_string(),
                    r.straggler_seed.to_string(),
                    r.distinct_parts.to_string(),
                    r.iterations.to_string(),
                    r.converged.to_string(),
                    r.diverged.to_string(),
                    num(r.final_grad_norm),
                    num(r.error),
                    r.max_worker_rows.to_string(),
                    r.warnings.to_string(),
                ]
            }),
        )?;
        let mean_error = format!("mean_{}", self.error_column());
        write_csv(
            &dir.join(format!("{prefix}_summary.csv")),
            &[
                "rho",
                "variant",
                "runs",
                "converged",
                "diverged",
                "mean_iterations",
                &mean_error,
                "train_rows",
                "test_rows",
                "config_digest",
                "seed_data",
                "seed_sampler",
                "seed_straggler",
                "code_residual",
            ],
            self.summaries.iter().map(|s| {
                vec![
                    s.rho.to_string(),
                    label(s.weighted).into(),
                    s.runs.to_string(),
                    s.converged.to_string(),
                    s.diverged.to_string(),
                    num(s.mean_iterations),
                    num(s.mean_error),
                    self.train_rows.to_string(),
                    self.test_rows.to_string(),
                    self.digest.clone(),
                    seed_field(self.seed_data),
                    seed_field(self.seed_sampler),
                    seed_field(self.seed_straggler),
                    num(self.code_residual),
                ]
            }),
        )?;
        let mut mean_rows = Vec::new();
        for s in &self.summaries {
            for (t, norm, active) in self.mean_trace(s.rho, s.weighted) {
                mean_rows.push(vec![
                    s.rho.to_string(),
                    label(s.weighted).into(),
                    t.to_string(),
                    num(norm),
                    active.to_string(),
                ]);
            }
        }
        write_csv(
            &dir.join(format!("{prefix}_mean_trace.csv")),
            &["rho", "variant", "iteration", "mean_grad_norm", "active_runs"],
            mean_rows,
        )?;
        for r in &self.runs {
            let name = format!("rho{}_{}_run{:02}.csv", r.rho, label(r.weighted), r.run);
            write_csv(
                &dir.join(format!("{prefix}_traces")).join(name),
                &["iteration", "grad_norm", "loss", "responders"],
                r.trace.iter().map(|p| {
                    vec![
                        p.iteration.to_string(),
                        num(p.grad_norm),
                        num(p.loss),
                        p.responders.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
                    ]
                }),
            )?;
        }
        Ok(())
    }

    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = vec![format!(
            "config {} | code residual {:.3e} | train rows {}{}",
            self.digest,
            self.code_residual,
            self.train_rows,
            if self.test_rows > 0 { format!(" | test rows {}", self.test_rows) } else { String::new() }
        )];
        for s in &self.summaries {
            lines.push(format!(
                "rho={} {:<10} runs={} converged={} diverged={} mean_iterations={:.2} mean_{}={:.3e}",
                s.rho,
                label(s.weighted),
                s.runs,
                s.converged,
                s.diverged,
                s.mean_iterations,
                self.error_column(),
                s.mean_error
            ));
        }
        lines
    }
}
