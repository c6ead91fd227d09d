//! Experiment front end: configuration, the four commands and their CSV
//! outputs. The binary is a thin wrapper over these functions.

mod batch;
mod code_check;
mod config;
mod leverage;

use std::fs;
use std::path::Path;

pub use batch::{cmd_mnist, cmd_regression, BatchReport, RunRecord, TracePoint, VariantSummary};
pub use code_check::{cmd_code_check, identity_residual, responder_sets, CodeCheckReport};
pub use config::{DataSource, ExperimentConfig, Task, Variants, KEYS};
pub use leverage::{cmd_leverage, LeverageReport};

use crate::error::Result;

pub(crate) fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn num(v: f64) -> String {
    format!("{v:e}")
}

pub(crate) fn seed_field(seed: Option<u64>) -> String {
    seed.map(|s| s.to_string()).unwrap_or_default()
}

/// Runs the configured task and writes its CSVs under `cfg.out` when set.
/// Returns human-readable summary lines.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    cfg.validate()?;
    let out = cfg.out.as_deref();
    match cfg.task {
        Task::CodeCheck => {
            let r = cmd_code_check(cfg)?;
            if let Some(dir) = out {
                r.write(dir)?;
            }
            Ok(r.summary_lines())
        }
        Task::Regression => {
            let r = cmd_regression(cfg)?;
            if let Some(dir) = out {
                r.write(dir)?;
            }
            Ok(r.summary_lines())
        }
        Task::Mnist => {
            let r = cmd_mnist(cfg)?;
            if let Some(dir) = out {
                r.write(dir)?;
            }
            Ok(r.summary_lines())
        }
        Task::Leverage => {
            let r = cmd_leverage(cfg)?;
            if let Some(dir) = out {
                r.write(dir)?;
            }
            Ok(r.summary_lines())
        }
    }
}
