//! Run configuration: a documented key-value file, flag overrides, and the
//! provenance hash embedded in every output file.
//!
//! The file format is one `key = value` pair per line; `#` starts a comment.
//! Unknown keys are rejected so typos fail loudly. Command-line flags
//! override file values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use kldetect_core::baselines::{BowConfig, BowRepresentation, BowSelector};
use kldetect_core::classifier::SvmHyper;
use kldetect_core::kl_features::SamplerConfig;
use kldetect_core::langmodel::KlDirection;
use kldetect_core::rng::fnv1a64;
use kldetect_core::simulator::{RatioMode, SimulationConfig};

/// Configuration problems carry exit code 2; a missing corpus file names the
/// offending path.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Injected-span fraction: fixed, or drawn uniformly from [5%, 50%] per
/// compromised account ("rnd").
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioSpec {
    Fixed(f64),
    Rnd,
}

impl RatioSpec {
    pub fn parse(s: &str) -> Result<RatioSpec, ConfigError> {
        if s.eq_ignore_ascii_case("rnd") {
            return Ok(RatioSpec::Rnd);
        }
        let r: f64 = s
            .parse()
            .map_err(|_| ConfigError(format!("ratio must be a number in (0,1) or 'rnd', got {s:?}")))?;
        if !(r > 0.0 && r < 1.0) {
            return Err(ConfigError(format!("ratio must lie in (0,1), got {r}")));
        }
        Ok(RatioSpec::Fixed(r))
    }

    pub fn to_mode(self) -> RatioMode {
        match self {
            RatioSpec::Fixed(r) => RatioMode::Fixed(r),
            RatioSpec::Rnd => RatioMode::UniformRandom { lo: 0.05, hi: 0.5 },
        }
    }

    /// Stable label used in file names and report rows.
    pub fn label(self) -> String {
        match self {
            RatioSpec::Fixed(r) => format!("{r}"),
            RatioSpec::Rnd => "rnd".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub workdir: PathBuf,
    pub seed: u64,
    pub jobs: usize,
    pub min_coverage_seconds: i64,
    pub top_k: Option<usize>,
    pub compromise_probability: f64,
    pub ratio: RatioSpec,
    pub samples: usize,
    pub kl_direction: KlDirection,
    pub feature_set: String,
    pub feature_sets: Vec<String>,
    pub ratios: Vec<RatioSpec>,
    pub folds: usize,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub bow_max_vocab: usize,
    pub bow_min_df: usize,
    pub bow_max_df_fraction: f64,
    pub bow_selector: BowSelector,
    pub bow_selected_k: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            corpus: PathBuf::new(),
            workdir: PathBuf::from("kldetect_out"),
            seed: 0,
            jobs: 1,
            min_coverage_seconds: 86_400,
            top_k: None,
            compromise_probability: 0.5,
            ratio: RatioSpec::Rnd,
            samples: 50,
            kl_direction: KlDirection::UserAttack,
            feature_set: "lm".to_string(),
            feature_sets: vec!["lm".to_string()],
            ratios: vec![RatioSpec::Rnd],
            folds: 10,
            svm_lambda: 1e-4,
            svm_epochs: 200,
            bow_max_vocab: 100_000,
            bow_min_df: 20,
            bow_max_df_fraction: 0.10,
            bow_selector: BowSelector::None,
            bow_selected_k: 1000,
        }
    }
}

/// Flag overrides; `None` keeps the file (or default) value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub ratio: Option<String>,
    pub feature_set: Option<String>,
    pub kl_direction: Option<String>,
    pub samples: Option<usize>,
}

fn parse_kl_direction(s: &str) -> Result<KlDirection, ConfigError> {
    match s {
        "user-attack" => Ok(KlDirection::UserAttack),
        "attack-user" => Ok(KlDirection::AttackUser),
        other => Err(ConfigError(format!(
            "kl_direction must be user-attack or attack-user, got {other:?}"
        ))),
    }
}

fn parse_selector(s: &str) -> Result<BowSelector, ConfigError> {
    match s {
        "chi2" => Ok(BowSelector::ChiSquare),
        "mi" => Ok(BowSelector::MutualInformation),
        "none" => Ok(BowSelector::None),
        other => Err(ConfigError(format!(
            "bow_selector must be chi2, mi, or none, got {other:?}"
        ))),
    }
}

fn selector_key(s: BowSelector) -> &'static str {
    match s {
        BowSelector::ChiSquare => "chi2",
        BowSelector::MutualInformation => "mi",
        BowSelector::None => "none",
    }
}

fn direction_key(d: KlDirection) -> &'static str {
    match d {
        KlDirection::UserAttack => "user-attack",
        KlDirection::AttackUser => "attack-user",
    }
}

impl RunConfig {
    /// Parses a config file and applies flag overrides. `seed` is mandatory
    /// (from the file or the flag).
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seed_set = false;
        if let Some(path) = path {
            let raw = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
            for (lineno, line) in raw.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    ConfigError(format!("line {}: expected key = value", lineno + 1))
                })?;
                cfg.apply(key.trim(), value.trim(), &mut seed_set)
                    .map_err(|e| ConfigError(format!("line {}: {}", lineno + 1, e.0)))?;
            }
        }
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
            seed_set = true;
        }
        if let Some(jobs) = overrides.jobs {
            cfg.jobs = jobs;
        }
        if let Some(ratio) = &overrides.ratio {
            cfg.ratio = RatioSpec::parse(ratio)?;
        }
        if let Some(set) = &overrides.feature_set {
            cfg.feature_set = set.clone();
        }
        if let Some(dir) = &overrides.kl_direction {
            cfg.kl_direction = parse_kl_direction(dir)?;
        }
        if let Some(samples) = overrides.samples {
            cfg.samples = samples;
        }
        if !seed_set {
            return Err(ConfigError(
                "seed is mandatory: set `seed = <u64>` in the config or pass --seed".to_string(),
            ));
        }
        cfg.validate_values()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str, seed_set: &mut bool) -> Result<(), ConfigError> {
        let parse_err = |k: &str, v: &str| ConfigError(format!("invalid value for {k}: {v:?}"));
        match key {
            "corpus" => self.corpus = PathBuf::from(value),
            "workdir" => self.workdir = PathBuf::from(value),
            "seed" => {
                self.seed = value.parse().map_err(|_| parse_err(key, value))?;
                *seed_set = true;
            }
            "jobs" => self.jobs = value.parse().map_err(|_| parse_err(key, value))?,
            "min_coverage_seconds" => {
                self.min_coverage_seconds = value.parse().map_err(|_| parse_err(key, value))?
            }
            "top_k" => {
                let k: usize = value.parse().map_err(|_| parse_err(key, value))?;
                if k == 0 {
                    return Err(ConfigError("top_k must be positive; omit the key to disable".into()));
                }
                self.top_k = Some(k);
            }
            "compromise_probability" => {
                self.compromise_probability = value.parse().map_err(|_| parse_err(key, value))?
            }
            "ratio" => self.ratio = RatioSpec::parse(value)?,
            "samples" => self.samples = value.parse().map_err(|_| parse_err(key, value))?,
            "kl_direction" => self.kl_direction = parse_kl_direction(value)?,
            "feature_set" => self.feature_set = value.to_string(),
            "feature_sets" => {
                self.feature_sets = value.split(',').map(|s| s.trim().to_string()).collect()
            }
            "ratios" => {
                self.ratios = value
                    .split(',')
                    .map(|s| RatioSpec::parse(s.trim()))
                    .collect::<Result<_, _>>()?
            }
            "folds" => self.folds = value.parse().map_err(|_| parse_err(key, value))?,
            "svm_lambda" => self.svm_lambda = value.parse().map_err(|_| parse_err(key, value))?,
            "svm_epochs" => self.svm_epochs = value.parse().map_err(|_| parse_err(key, value))?,
            "bow_max_vocab" => {
                self.bow_max_vocab = value.parse().map_err(|_| parse_err(key, value))?
            }
            "bow_min_df" => self.bow_min_df = value.parse().map_err(|_| parse_err(key, value))?,
            "bow_max_df_fraction" => {
                self.bow_max_df_fraction = value.parse().map_err(|_| parse_err(key, value))?
            }
            "bow_selector" => self.bow_selector = parse_selector(value)?,
            "bow_selected_k" => {
                self.bow_selected_k = value.parse().map_err(|_| parse_err(key, value))?
            }
            other => return Err(ConfigError(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    fn validate_values(&self) -> Result<(), ConfigError> {
        if self.samples == 0 {
            return Err(ConfigError("samples must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(ConfigError("folds must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.compromise_probability) {
            return Err(ConfigError("compromise_probability must lie in [0,1]".into()));
        }
        if !self.svm_lambda.is_finite() || self.svm_lambda <= 0.0 {
            return Err(ConfigError("svm_lambda must be positive".into()));
        }
        if self.svm_epochs == 0 {
            return Err(ConfigError("svm_epochs must be at least 1".into()));
        }
        if self.feature_sets.is_empty() || self.ratios.is_empty() {
            return Err(ConfigError("feature_sets and ratios must be non-empty".into()));
        }
        Ok(())
    }

    /// Checks that the input corpus path resolves. Commands that read the
    /// corpus call this before doing any work.
    pub fn require_corpus(&self) -> Result<(), ConfigError> {
        if self.corpus.as_os_str().is_empty() {
            return Err(ConfigError(
                "corpus path is not set: add `corpus = <path>` to the config".to_string(),
            ));
        }
        if !self.corpus.is_file() {
            return Err(ConfigError(format!(
                "corpus path does not exist: {}",
                self.corpus.display()
            )));
        }
        Ok(())
    }

    pub fn simulation_config(&self, ratio: RatioSpec) -> SimulationConfig {
        SimulationConfig {
            compromise_probability: self.compromise_probability,
            ratio_mode: ratio.to_mode(),
            rng_seed: self.seed,
        }
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            num_samples: self.samples,
            rng_seed: self.seed,
            kl_direction: self.kl_direction,
            ..SamplerConfig::default()
        }
    }

    pub fn svm_hyper(&self) -> SvmHyper {
        SvmHyper {
            lambda: self.svm_lambda,
            epochs: self.svm_epochs,
            seed: self.seed,
            ..SvmHyper::default()
        }
    }

    pub fn bow_config(&self, representation: BowRepresentation) -> BowConfig {
        BowConfig {
            representation,
            max_vocab: self.bow_max_vocab,
            min_df: self.bow_min_df,
            max_df_fraction: self.bow_max_df_fraction,
            selector: self.bow_selector,
            selected_k: self.bow_selected_k,
        }
    }

    /// Hash over the semantic experiment parameters. Paths and `jobs` are
    /// excluded: neither affects the computed numbers, and reports must be
    /// byte-identical across workdirs and parallelism levels.
    pub fn config_hash(&self) -> u64 {
        let mut canon: BTreeMap<&str, String> = BTreeMap::new();
        canon.insert("seed", self.seed.to_string());
        canon.insert("min_coverage_seconds", self.min_coverage_seconds.to_string());
        canon.insert(
            "top_k",
            self.top_k.map(|k| k.to_string()).unwrap_or_else(|| "none".into()),
        );
        canon.insert("compromise_probability", self.compromise_probability.to_string());
        canon.insert("ratio", self.ratio.label());
        canon.insert("samples", self.samples.to_string());
        canon.insert("kl_direction", direction_key(self.kl_direction).to_string());
        canon.insert("feature_set", self.feature_set.clone());
        canon.insert("feature_sets", self.feature_sets.join(","));
        canon.insert(
            "ratios",
            self.ratios.iter().map(|r| r.label()).collect::<Vec<_>>().join(","),
        );
        canon.insert("folds", self.folds.to_string());
        canon.insert("svm_lambda", self.svm_lambda.to_string());
        canon.insert("svm_epochs", self.svm_epochs.to_string());
        canon.insert("bow_max_vocab", self.bow_max_vocab.to_string());
        canon.insert("bow_min_df", self.bow_min_df.to_string());
        canon.insert("bow_max_df_fraction", self.bow_max_df_fraction.to_string());
        canon.insert("bow_selector", selector_key(self.bow_selector).to_string());
        canon.insert("bow_selected_k", self.bow_selected_k.to_string());
        let mut blob = String::new();
        for (k, v) in &canon {
            blob.push_str(k);
            blob.push('=');
            blob.push_str(v);
            blob.push('\n');
        }
        fnv1a64(blob.as_bytes())
    }
}
