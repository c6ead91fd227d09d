use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::coding::{validate_params, CodingParams};
use crate::error::{Error, Result};
use crate::optimize::GdConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    CodeCheck,
    Regression,
    Mnist,
    Leverage,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::CodeCheck => "code-check",
            Task::Regression => "regression",
            Task::Mnist => "mnist",
            Task::Leverage => "leverage",
        }
    }
}

/// Which sketch variants a batch runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variants {
    Both,
    WeightedOnly,
    UnweightedOnly,
}

impl Variants {
    pub fn flags(self) -> &'static [bool] {
        match self {
            Variants::Both => &[true, false],
            Variants::WeightedOnly => &[true],
            Variants::UnweightedOnly => &[false],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataSource {
    Synthetic,
    Mnist,
    Csv,
}

/// Experiment configuration: task defaults, then a `key = value` file, then
/// per-key overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub rho: Vec<usize>,
    pub runs: usize,
    pub seed_data: Option<u64>,
    pub seed_sampler: Option<u64>,
    pub seed_straggler: Option<u64>,
    pub step: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub weighted: Variants,
    /// Stragglers erased per round; defaults to the scheme's tolerance `s`.
    pub stragglers: Option<usize>,
    /// Recover gradients through the coded network instead of summing directly.
    pub network: bool,
    pub source: DataSource,
    pub input: Option<PathBuf>,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub classes: (u8, u8),
    pub limit: usize,
    pub subsets: usize,
    pub exhaustive_limit: usize,
    pub out: Option<PathBuf>,
}

pub const KEYS: &[&str] = &[
    "n",
    "k",
    "d",
    "rho",
    "runs",
    "seed_data",
    "seed_sampler",
    "seed_straggler",
    "step",
    "tol",
    "max_iters",
    "weighted",
    "stragglers",
    "network",
    "source",
    "input",
    "train_images",
    "train_labels",
    "test_images",
    "test_labels",
    "classes",
    "limit",
    "subsets",
    "exhaustive_limit",
    "out",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_switch(key: &str, value: &str) -> Result<bool> {
    match value {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected on/off, got {value:?}"))),
    }
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

fn opt_num<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl ExperimentConfig {
    /// Defaults: scheme (50, 20, 30) everywhere; regression uses ρ = 2,
    /// α = 1e-7, ε = 0.1 and 20 runs; MNIST uses ρ ∈ {1, 4, 10, 20},
    /// α = 1e-5, ε = 5 and 6 runs over 10000 training images of 4s and 9s.
    pub fn new(task: Task) -> Self {
        let mut cfg = Self {
            task,
            n: 50,
            k: 20,
            d: 30,
            rho: vec![2],
            runs: 20,
            seed_data: None,
            seed_sampler: None,
            seed_straggler: None,
            step: 1e-7,
            tol: 0.1,
            max_iters: 10_000,
            weighted: Variants::Both,
            stragglers: None,
            network: true,
            source: DataSource::Synthetic,
            input: None,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            classes: (4, 9),
            limit: 10_000,
            subsets: 100,
            exhaustive_limit: 10_000,
            out: None,
        };
        if task == Task::Mnist {
            cfg.rho = vec![1, 4, 10, 20];
            cfg.runs = 6;
            cfg.step = 1e-5;
            cfg.tol = 5.0;
            cfg.max_iters = 2_000;
            cfg.source = DataSource::Mnist;
        }
        cfg
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let path = || Some(PathBuf::from(value));
        match key {
            "n" => self.n = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "d" => self.d = parse(key, value)?,
            "rho" => {
                self.rho = value.split(',').map(|v| parse(key, v.trim())).collect::<Result<_>>()?;
            }
            "runs" => self.runs = parse(key, value)?,
            "seed_data" => self.seed_data = Some(parse(key, value)?),
            "seed_sampler" => self.seed_sampler = Some(parse(key, value)?),
            "seed_straggler" => self.seed_straggler = Some(parse(key, value)?),
            "step" => self.step = parse(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "max_iters" => self.max_iters = parse(key, value)?,
            "weighted" => {
                self.weighted = match value {
                    "both" => Variants::Both,
                    v => {
                        if parse_switch(key, v)? {
                            Variants::WeightedOnly
                        } else {
                            Variants::UnweightedOnly
                        }
                    }
                }
            }
            "stragglers" => self.stragglers = Some(parse(key, value)?),
            "network" => self.network = parse_switch(key, value)?,
            "source" => {
                self.source = match value {
                    "synthetic" => DataSource::Synthetic,
                    "mnist" => DataSource::Mnist,
                    "csv" => DataSource::Csv,
                    _ => return Err(Error::Config(format!("source: unknown {value:?}"))),
                }
            }
            "input" => self.input = path(),
            "train_images" => self.train_images = path(),
            "train_labels" => self.train_labels = path(),
            "test_images" => self.test_images = path(),
            "test_labels" => self.test_labels = path(),
            "classes" => {
                let parts: Vec<u8> = value.split(',').map(|v| parse(key, v.trim())).collect::<Result<_>>()?;
                match parts[..] {
                    [a, b] if a != b => self.classes = (a, b),
                    _ => return Err(Error::Config(format!("classes: need two distinct digits, got {value:?}"))),
                }
            }
            "limit" => self.limit = parse(key, value)?,
            "subsets" => self.subsets = parse(key, value)?,
            "exhaustive_limit" => self.exhaustive_limit = parse(key, value)?,
            "out" => self.out = path(),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        self.apply_text(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Canonical `key=value` listing of everything that affects results.
    pub fn canonical(&self) -> String {
        let variants = match self.weighted {
            Variants::Both => "both",
            Variants::WeightedOnly => "on",
            Variants::UnweightedOnly => "off",
        };
        let source = match self.source {
            DataSource::Synthetic => "synthetic",
            DataSource::Mnist => "mnist",
            DataSource::Csv => "csv",
        };
        let rho: Vec<String> = self.rho.iter().map(usize::to_string).collect();
        let pairs: Vec<(&str, String)> = vec![
            ("task", self.task.name().into()),
            ("n", self.n.to_string()),
            ("k", self.k.to_string()),
            ("d", self.d.to_string()),
            ("rho", rho.join(",")),
            ("runs", self.runs.to_string()),
            ("seed_data", opt_num(&self.seed_data)),
            ("seed_sampler", opt_num(&self.seed_sampler)),
            ("seed_straggler", opt_num(&self.seed_straggler)),
            ("step", format!("{:e}", self.step)),
            ("tol", format!("{:e}", self.tol)),
            ("max_iters", self.max_iters.to_string()),
            ("weighted", variants.into()),
            ("stragglers", opt_num(&self.stragglers)),
            ("network", if self.network { "on" } else { "off" }.into()),
            ("source", source.into()),
            ("input", opt_path(&self.input)),
            ("train_images", opt_path(&self.train_images)),
            ("train_labels", opt_path(&self.train_labels)),
            ("test_images", opt_path(&self.test_images)),
            ("test_labels", opt_path(&self.test_labels)),
            ("classes", format!("{},{}", self.classes.0, self.classes.1)),
            ("limit", self.limit.to_string()),
            ("pixel_scale", "1/255".into()),
            ("subsets", self.subsets.to_string()),
            ("exhaustive_limit", self.exhaustive_limit.to_string()),
        ];
        pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&hash[..8])
    }

    pub fn params(&self) -> Result<CodingParams> {
        validate_params(self.n, self.k, self.d)
    }

    pub fn gd_config(&self) -> Result<GdConfig> {
        GdConfig::new(self.step, self.max_iters, self.tol)
    }

    pub fn straggler_count(&self) -> Result<usize> {
        let s = self.params()?.stragglers;
        match self.stragglers {
            Some(c) if c > s => Err(Error::Config(format!("stragglers = {c} exceeds the scheme tolerance s = {s}"))),
            Some(c) => Ok(c),
            None => Ok(s),
        }
    }

    pub fn require_seed(&self, name: &str, seed: Option<u64>) -> Result<u64> {
        seed.ok_or_else(|| Error::Config(format!("{} requires {name} (no entropy defaults)", self.task.name())))
    }

    pub fn seed_data(&self) -> Result<u64> {
        self.require_seed("seed_data", self.seed_data)
    }

    pub fn seed_sampler(&self) -> Result<u64> {
        self.require_seed("seed_sampler", self.seed_sampler)
    }

    pub fn seed_straggler(&self) -> Result<u64> {
        self.require_seed("seed_straggler", self.seed_straggler)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.straggler_count()?;
        if self.rho.is_empty() || self.rho.contains(&0) {
            return Err(Error::Config("rho must list positive integers".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be positive".into()));
        }
        match self.task {
            Task::CodeCheck => {
                self.seed_sampler()?;
                self.seed_straggler()?;
            }
            Task::Regression | Task::Mnist => {
                self.gd_config()?;
                if self.task == Task::Regression {
                    self.seed_data()?;
                }
                self.seed_sampler()?;
                self.seed_straggler()?;
            }
            Task::Leverage => {
                if self.source == DataSource::Synthetic {
                    self.seed_data()?;
                }
            }
        }
        Ok(())
    }
}
