//! `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use alge_core::graph::Feature;
use alge_core::rankers::Method;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Where a graph comes from: an edge-list file or a generator spec such as
/// `ba n=200 m=3 seed=7`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSource {
    File(PathBuf),
    Ba { n: usize, m: usize, seed: u64 },
    Er { n: usize, m: usize, seed: u64 },
}

impl GraphSource {
    pub fn parse_spec(spec: &str) -> Result<GraphSource, CliError> {
        let mut words = spec.split_whitespace();
        let kind = words.next().ok_or_else(|| CliError::usage("empty graph spec"))?;
        if kind != "ba" && kind != "er" {
            return Err(CliError::usage(format!("unknown generator {kind:?} (expected ba or er)")));
        }
        let (mut n, mut m, mut seed) = (None, None, None);
        for word in words {
            let (key, value) = word
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("expected key=value in graph spec, got {word:?}")))?;
            let bad = || CliError::usage(format!("bad value for {key} in graph spec: {value:?}"));
            match key {
                "n" => n = Some(value.parse().map_err(|_| bad())?),
                "m" => m = Some(value.parse().map_err(|_| bad())?),
                "seed" => seed = Some(value.parse().map_err(|_| bad())?),
                _ => return Err(CliError::usage(format!("unknown graph spec key {key:?}"))),
            }
        }
        let missing = |k: &str| CliError::usage(format!("graph spec {spec:?} lacks {k}="));
        let n = n.ok_or_else(|| missing("n"))?;
        let m = m.ok_or_else(|| missing("m"))?;
        let seed = seed.ok_or_else(|| missing("seed"))?;
        Ok(if kind == "ba" {
            GraphSource::Ba { n, m, seed }
        } else {
            GraphSource::Er { n, m, seed }
        })
    }
}

impl FromStr for GraphSource {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if s.starts_with("ba ") || s.starts_with("er ") {
            GraphSource::parse_spec(s)
        } else if s.is_empty() {
            Err(CliError::usage("empty graph source"))
        } else {
            Ok(GraphSource::File(PathBuf::from(s)))
        }
    }
}

impl std::fmt::Display for GraphSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphSource::File(p) => write!(f, "{}", p.display()),
            GraphSource::Ba { n, m, seed } => write!(f, "ba n={n} m={m} seed={seed}"),
            GraphSource::Er { n, m, seed } => write!(f, "er n={n} m={m} seed={seed}"),
        }
    }
}

/// Infection probability: an explicit value or a multiple of the epidemic
/// threshold of each graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Auto,
    Fixed(f64),
}

/// Cap on the number of representatives that get simulated labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelCap {
    Unlimited,
    Count(usize),
    Percent(f64),
}

impl LabelCap {
    pub fn resolve(self, n: usize) -> Option<usize> {
        match self {
            LabelCap::Unlimited => None,
            LabelCap::Count(c) => Some(c),
            LabelCap::Percent(p) => Some(((p / 100.0 * n as f64).floor() as usize).max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub target: GraphSource,
    pub corpus_size: usize,
    pub corpus_min_n: usize,
    pub corpus_max_n: usize,
    pub corpus_seed: u64,

    pub beta: Beta,
    pub beta_multiplier: f64,
    pub runs: usize,
    pub master_seed: u64,

    pub eps: f64,
    pub tol: f64,
    pub max_labels: LabelCap,

    pub pretrain_lr: f64,
    pub pretrain_epochs: usize,
    pub finetune_lr: f64,
    pub finetune_epochs: usize,
    pub train_seed: u64,
    pub heads: usize,
    pub hidden_per_head: usize,
    pub attention_layers: usize,
    pub fc_hidden: usize,
    pub features: Vec<Feature>,

    pub k: usize,
    pub panel: Vec<Method>,
    pub exclude_worst: bool,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            target: GraphSource::Ba { n: 300, m: 3, seed: 1 },
            corpus_size: 20,
            corpus_min_n: 100,
            corpus_max_n: 500,
            corpus_seed: 11,
            beta: Beta::Auto,
            beta_multiplier: 1.5,
            runs: 1000,
            master_seed: 42,
            eps: alge_core::sampler::DEFAULT_EPS,
            tol: alge_core::sampler::DEFAULT_TOL,
            max_labels: LabelCap::Unlimited,
            pretrain_lr: 1e-3,
            pretrain_epochs: 200,
            finetune_lr: 1e-4,
            finetune_epochs: 100,
            train_seed: 7,
            heads: 8,
            hidden_per_head: 8,
            attention_layers: 3,
            fc_hidden: 32,
            features: Feature::DEFAULT.to_vec(),
            k: 15,
            panel: vec![
                Method::Degree,
                Method::KShell,
                Method::HIndex,
                Method::Ci(2),
                Method::Other("alge-b".into()),
                Method::Other("alge-c".into()),
            ],
            exclude_worst: true,
            output_dir: PathBuf::from("alge-out"),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::usage(format!("invalid value for {key}: {value:?}")))
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Parses config text over the defaults. Later lines win.
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", idx + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| CliError::usage(format!("config line {}: {e}", idx + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "target" => self.target = value.parse()?,
            "corpus_size" => self.corpus_size = parse_num(key, value)?,
            "corpus_min_n" => self.corpus_min_n = parse_num(key, value)?,
            "corpus_max_n" => self.corpus_max_n = parse_num(key, value)?,
            "corpus_seed" => self.corpus_seed = parse_num(key, value)?,
            "beta" => {
                self.beta = if value == "auto" {
                    Beta::Auto
                } else {
                    Beta::Fixed(parse_num(key, value)?)
                }
            }
            "beta_multiplier" => self.beta_multiplier = parse_num(key, value)?,
            "runs" => self.runs = parse_num(key, value)?,
            "master_seed" => self.master_seed = parse_num(key, value)?,
            "eps" => self.eps = parse_num(key, value)?,
            "tol" => self.tol = parse_num(key, value)?,
            "max_labels" => {
                self.max_labels = if value == "unlimited" {
                    LabelCap::Unlimited
                } else if let Some(p) = value.strip_suffix('%') {
                    LabelCap::Percent(parse_num(key, p.trim())?)
                } else {
                    LabelCap::Count(parse_num(key, value)?)
                }
            }
            "pretrain_lr" => self.pretrain_lr = parse_num(key, value)?,
            "pretrain_epochs" => self.pretrain_epochs = parse_num(key, value)?,
            "finetune_lr" => self.finetune_lr = parse_num(key, value)?,
            "finetune_epochs" => self.finetune_epochs = parse_num(key, value)?,
            "train_seed" => self.train_seed = parse_num(key, value)?,
            "heads" => self.heads = parse_num(key, value)?,
            "hidden_per_head" => self.hidden_per_head = parse_num(key, value)?,
            "attention_layers" => self.attention_layers = parse_num(key, value)?,
            "fc_hidden" => self.fc_hidden = parse_num(key, value)?,
            "features" => {
                self.features = value
                    .split(',')
                    .map(|f| f.parse::<Feature>())
                    .collect::<Result<_, _>>()?
            }
            "k" => self.k = parse_num(key, value)?,
            "panel" => {
                self.panel = value
                    .split(',')
                    .map(|m| m.parse::<Method>())
                    .collect::<Result<_, _>>()?
            }
            "exclude_worst" => self.exclude_worst = parse_num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            _ => return Err(CliError::usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: &str| Err(CliError::usage(msg.to_owned()));
        if self.corpus_min_n < 2 || self.corpus_min_n > self.corpus_max_n {
            return fail("corpus_min_n must be at least 2 and no larger than corpus_max_n");
        }
        if let Beta::Fixed(b) = self.beta {
            if !(0.0..=1.0).contains(&b) {
                return fail("beta must lie in [0, 1]");
            }
        }
        if !(self.beta_multiplier > 0.0) {
            return fail("beta_multiplier must be positive");
        }
        if self.runs == 0 {
            return fail("runs must be at least 1");
        }
        if !(self.eps > 0.0) || !(self.tol > 0.0) {
            return fail("eps and tol must be positive");
        }
        match self.max_labels {
            LabelCap::Count(0) => return fail("max_labels must be at least 1"),
            LabelCap::Percent(p) if !(p > 0.0 && p <= 100.0) => return fail("max_labels percentage must be in (0, 100]"),
            _ => {}
        }
        if self.features.is_empty() {
            return fail("features must name at least one feature");
        }
        if self.k == 0 {
            return fail("k must be at least 1");
        }
        if self.panel.len() < if self.exclude_worst { 2 } else { 1 } {
            return fail("panel is too small for the disputation metric");
        }
        Ok(())
    }

    /// Every key with its resolved value, one per line, in a fixed order.
    pub fn resolved(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("target", self.target.to_string());
        put("corpus_size", self.corpus_size.to_string());
        put("corpus_min_n", self.corpus_min_n.to_string());
        put("corpus_max_n", self.corpus_max_n.to_string());
        put("corpus_seed", self.corpus_seed.to_string());
        put(
            "beta",
            match self.beta {
                Beta::Auto => "auto".into(),
                Beta::Fixed(b) => format!("{b:?}"),
            },
        );
        put("beta_multiplier", format!("{:?}", self.beta_multiplier));
        put("runs", self.runs.to_string());
        put("master_seed", self.master_seed.to_string());
        put("eps", format!("{:?}", self.eps));
        put("tol", format!("{:?}", self.tol));
        put(
            "max_labels",
            match self.max_labels {
                LabelCap::Unlimited => "unlimited".into(),
                LabelCap::Count(c) => c.to_string(),
                LabelCap::Percent(p) => format!("{p:?}%"),
            },
        );
        put("pretrain_lr", format!("{:?}", self.pretrain_lr));
        put("pretrain_epochs", self.pretrain_epochs.to_string());
        put("finetune_lr", format!("{:?}", self.finetune_lr));
        put("finetune_epochs", self.finetune_epochs.to_string());
        put("train_seed", self.train_seed.to_string());
        put("heads", self.heads.to_string());
        put("hidden_per_head", self.hidden_per_head.to_string());
        put("attention_layers", self.attention_layers.to_string());
        put("fc_hidden", self.fc_hidden.to_string());
        put("features", self.features.iter().map(|f| f.name()).collect::<Vec<_>>().join(","));
        put("k", self.k.to_string());
        put("panel", join(&self.panel));
        put("exclude_worst", self.exclude_worst.to_string());
        put("output_dir", self.output_dir.display().to_string());
        out
    }

    /// Leading 16 hex digits of the SHA-256 of [`RunConfig::resolved`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.resolved().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
