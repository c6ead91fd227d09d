//! Logistic regression on MNIST 4s vs 9s with and without weights.
//! Usage: mnist_experiment MNIST_DIR [OUT_DIR]
//! MNIST_DIR holds train-images-idx3-ubyte, train-labels-idx1-ubyte,
//! t10k-images-idx3-ubyte and t10k-labels-idx1-ubyte.

use std::path::PathBuf;

use weighted_gc::cli::{run, ExperimentConfig, Task};

fn main() -> weighted_gc::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(dir) = args.next().map(PathBuf::from) else {
        eprintln!("usage: mnist_experiment MNIST_DIR [OUT_DIR]");
        std::process::exit(2);
    };
    let mut cfg = ExperimentConfig::new(Task::Mnist);
    cfg.apply_text("seed_sampler = 2\nseed_straggler = 3")?;
    cfg.train_images = Some(dir.join("train-images-idx3-ubyte"));
    cfg.train_labels = Some(dir.join("train-labels-idx1-ubyte"));
    cfg.test_images = Some(dir.join("t10k-images-idx3-ubyte"));
    cfg.test_labels = Some(dir.join("t10k-labels-idx1-ubyte"));
    cfg.out = args.next().map(PathBuf::from);
    for line in run(&cfg)? {
        println!("{line}");
    }
    Ok(())
}
