use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use weighted_gc::cli::{run, ExperimentConfig, Task};
use weighted_gc::error::Result;

#[derive(Parser)]
#[command(name = "weighted-gc", version, about = "Weighted gradient coding with leverage-score sketching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the decoding identity over responder sets
    CodeCheck(Flags),
    /// Synthetic least-squares batches, weighted vs unweighted
    Regression(Flags),
    /// Two-digit MNIST logistic regression batches
    Mnist(Flags),
    /// Leverage, normalised and block scores of a dataset
    Leverage(Flags),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
    Both,
}

#[derive(Args)]
struct Flags {
    /// Flat key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV files
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Compression factor(s), comma separated
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed_data: Option<u64>,
    #[arg(long)]
    seed_sampler: Option<u64>,
    #[arg(long)]
    seed_straggler: Option<u64>,
    #[arg(long, value_enum)]
    weighted: Option<Switch>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Any other configuration key, as key=value (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Flags {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut push = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                pairs.push((key.into(), v));
            }
        };
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push("n", self.n.map(|v| v.to_string()));
        push("k", self.k.map(|v| v.to_string()));
        push("d", self.d.map(|v| v.to_string()));
        push("rho", self.rho.clone());
        push("runs", self.runs.map(|v| v.to_string()));
        push("seed_data", self.seed_data.map(|v| v.to_string()));
        push("seed_sampler", self.seed_sampler.map(|v| v.to_string()));
        push("seed_straggler", self.seed_straggler.map(|v| v.to_string()));
        push(
            "weighted",
            self.weighted.map(|w| match w {
                Switch::On => "on".into(),
                Switch::Off => "off".into(),
                Switch::Both => "both".into(),
            }),
        );
        push("step", self.step.map(|v| v.to_string()));
        push("tol", self.tol.map(|v| v.to_string()));
        push("max_iters", self.max_iters.map(|v| v.to_string()));
        for kv in &self.set {
            let (k, v) = kv.split_once('=').unwrap_or((kv, ""));
            pairs.push((k.trim().into(), v.into()));
        }
        pairs
    }
}

fn execute(task: Task, flags: &Flags) -> Result<()> {
    let mut cfg = ExperimentConfig::new(task);
    if let Some(path) = &flags.config {
        cfg.apply_file(path)?;
    }
    for (key, value) in flags.overrides() {
        cfg.set(&key, &value)?;
    }
    for line in run(&cfg)? {
        println!("{line}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, flags) = match &cli.command {
        Command::CodeCheck(f) => (Task::CodeCheck, f),
        Command::Regression(f) => (Task::Regression, f),
        Command::Mnist(f) => (Task::Mnist, f),
        Command::Leverage(f) => (Task::Leverage, f),
    };
    match execute(task, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("weighted-gc {}: error: {e}", task.name());
            ExitCode::FAILURE
        }
    }
}
