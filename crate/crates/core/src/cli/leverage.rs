use std::path::Path;

use super::{num, seed_field, write_csv, DataSource, ExperimentConfig};
use crate::data::{load_mnist, synth_regression, Dataset};
use crate::error::{Error, Result};
use crate::numkit::{leverage_scores_with_rank, normalize_scores};
use crate::sketch::{make_partition, score_ratio, PartitionPlan};

#[derive(Clone, Debug)]
pub struct LeverageReport {
    pub source: String,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub leverage: Vec<f64>,
    pub pi: Vec<f64>,
    pub plan: PartitionPlan,
    pub digest: String,
    pub seed_data: Option<u64>,
}

fn load(cfg: &ExperimentConfig) -> Result<Dataset> {
    let need = |p: &Option<std::path::PathBuf>, key: &str| {
        p.clone().ok_or_else(|| Error::Config(format!("leverage source requires {key}")))
    };
    match cfg.source {
        DataSource::Synthetic => Ok(synth_regression(cfg.seed_data()?).dataset),
        DataSource::Csv => Dataset::read_csv(&need(&cfg.input, "input")?),
        DataSource::Mnist => {
            let images = need(&cfg.train_images, "train_images")?;
            let labels = need(&cfg.train_labels, "train_labels")?;
            load_mnist(&images, &labels, cfg.classes, cfg.limit)?.truncate_to_multiple(cfg.rho[0] * cfg.k)
        }
    }
}

/// Row leverage scores, their normalisation and block scores over
/// `ρ·k` contiguous parts (first listed ρ).
pub fn cmd_leverage(cfg: &ExperimentConfig) -> Result<LeverageReport> {
    cfg.validate()?;
    let data = load(cfg)?;
    let (leverage, rank) = leverage_scores_with_rank(&data.x)?;
    let pi = normalize_scores(&leverage)?;
    let plan = make_partition(data.num_rows(), cfg.rho[0] * cfg.k, &pi)?;
    Ok(LeverageReport {
        source: data.source.split(':').next().unwrap_or_default().to_string(),
        rows: data.num_rows(),
        cols: data.dim(),
        rank,
        leverage,
        pi,
        plan,
        digest: cfg.digest(),
        seed_data: cfg.seed_data,
    })
}

impl LeverageReport {
    pub fn row_ratio(&self) -> f64 {
        score_ratio(&self.pi)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let size = self.plan.part_size();
        write_csv(
            &dir.join("leverage_rows.csv"),
            &["row", "leverage", "pi", "part"],
            (0..self.rows).map(|i| {
                vec![i.to_string(), num(self.leverage[i]), num(self.pi[i]), (i / size).to_string()]
            }),
        )?;
        write_csv(
            &dir.join("leverage_parts.csv"),
            &["part", "first_row", "end_row", "block_score"],
            self.plan.part_ranges().enumerate().map(|(j, r)| {
                vec![j.to_string(), r.start.to_string(), r.end.to_string(), num(self.plan.block_scores()[j])]
            }),
        )?;
        write_csv(
            &dir.join("leverage_summary.csv"),
            &[
                "source",
                "rows",
                "cols",
                "rank",
                "parts",
                "sum_leverage",
                "sum_pi",
                "row_ratio",
                "part_ratio",
                "config_digest",
                "seed_data",
            ],
            [vec![
                self.source.clone(),
                self.rows.to_string(),
                self.cols.to_string(),
                self.rank.to_string(),
                self.plan.num_parts().to_string(),
                num(self.leverage.iter().sum()),
                num(self.pi.iter().sum()),
                num(self.row_ratio()),
                num(self.plan.nonuniformity()),
                self.digest.clone(),
                seed_field(self.seed_data),
            ]],
        )
    }

    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("{} rows x {} cols from {}, rank {}", self.rows, self.cols, self.source, self.rank),
            format!(
                "max/min ratio: rows {:.4}, {} parts {:.4}",
                self.row_ratio(),
                self.plan.num_parts(),
                self.plan.nonuniformity()
            ),
        ];
        if self.rank < self.cols {
            lines.push(format!("warning: rank deficient ({} < {}), scores use the leading {} singular vectors", self.rank, self.cols, self.rank));
        }
        lines
    }
}
