//! Weighted vs unweighted batches on the synthetic regression problem.
//! Usage: regression_experiment [OUT_DIR] [key=value ...]

use weighted_gc::cli::{run, ExperimentConfig, Task};

fn main() -> weighted_gc::error::Result<()> {
    let mut cfg = ExperimentConfig::new(Task::Regression);
    cfg.apply_text("seed_data = 1\nseed_sampler = 2\nseed_straggler = 3\nrho = 2\nruns = 20")?;
    for arg in std::env::args().skip(1) {
        match arg.split_once('=') {
            Some((key, value)) => cfg.set(key, value)?,
            None => cfg.set("out", &arg)?,
        }
    }
    for line in run(&cfg)? {
        println!("{line}");
    }
    Ok(())
}
