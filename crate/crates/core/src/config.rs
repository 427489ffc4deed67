//! Run configuration: TOML file, overridden by CLI flags, overridden by
//! `VQAKIT_*` environment variables, in that order.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ENV_PREFIX: &str = "VQAKIT_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnotatorSettings {
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub cache_dir: String,
}

impl Default for AnnotatorSettings {
    fn default() -> Self {
        AnnotatorSettings {
            endpoint: String::new(),
            model: String::new(),
            timeout_secs: 60,
            max_retries: 2,
            cache_dir: "annotator-cache".into(),
        }
    }
}

/// Every tunable shared across verbs. Unknown keys in the file are
/// rejected rather than ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker budget; 0 means "let the runtime decide".
    pub jobs: usize,
    pub merge_threshold: f64,
    pub min_support: usize,
    pub max_share: f64,
    pub neg_ratio: f64,
    pub density: f64,
    pub lambda: f64,
    pub clusters: usize,
    pub trials: usize,
    pub stimuli: usize,
    pub n_boot: usize,
    pub subjects: Vec<String>,
    pub annotator: AnnotatorSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            jobs: 0,
            merge_threshold: crate::forge::DEFAULT_MERGE_THRESHOLD,
            min_support: crate::forge::DEFAULT_MIN_SUPPORT,
            max_share: crate::forge::DEFAULT_MAX_SHARE,
            neg_ratio: crate::forge::DEFAULT_NEG_RATIO,
            density: crate::attribution::DEFAULT_MASK_DENSITY,
            lambda: crate::attribution::DEFAULT_LAMBDA,
            clusters: crate::attribution::DEFAULT_CLUSTER_COUNT,
            trials: 10_000,
            stimuli: 100,
            n_boot: crate::stats::DEFAULT_N_BOOT,
            subjects: Vec::new(),
            annotator: AnnotatorSettings::default(),
        }
    }
}

fn range_err(key: &str, value: impl std::fmt::Display, range: &str) -> Error {
    Error::Config(format!("{key} = {value} out of range {range}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.merge_threshold) {
            return Err(range_err("merge_threshold", self.merge_threshold, "[0, 1]"));
        }
        if !(0.0..1.0).contains(&self.max_share) || self.max_share == 0.0 {
            return Err(range_err("max_share", self.max_share, "(0, 1)"));
        }
        if !(0.0..1.0).contains(&self.neg_ratio) {
            return Err(range_err("neg_ratio", self.neg_ratio, "[0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(range_err("density", self.density, "[0, 1]"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(range_err("lambda", self.lambda, "[0, inf)"));
        }
        if self.clusters == 0 {
            return Err(range_err("clusters", self.clusters, "[1, inf)"));
        }
        if self.n_boot < 100 {
            return Err(range_err("n_boot", self.n_boot, "[100, inf)"));
        }
        Ok(())
    }

    /// Apply `VQAKIT_*` environment overrides (last-wins layer). Unknown
    /// prefixed variables are rejected to surface typos.
    pub fn apply_env(&mut self, vars: &BTreeMap<String, String>) -> Result<()> {
        for (key, value) in vars {
            let Some(name) = key.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            match name {
                "SEED" => self.seed = parse_env(key, value)?,
                "JOBS" => self.jobs = parse_env(key, value)?,
                "MERGE_THRESHOLD" => self.merge_threshold = parse_env(key, value)?,
                "MIN_SUPPORT" => self.min_support = parse_env(key, value)?,
                "MAX_SHARE" => self.max_share = parse_env(key, value)?,
                "NEG_RATIO" => self.neg_ratio = parse_env(key, value)?,
                "DENSITY" => self.density = parse_env(key, value)?,
                "LAMBDA" => self.lambda = parse_env(key, value)?,
                "CLUSTERS" => self.clusters = parse_env(key, value)?,
                "TRIALS" => self.trials = parse_env(key, value)?,
                "STIMULI" => self.stimuli = parse_env(key, value)?,
                "N_BOOT" => self.n_boot = parse_env(key, value)?,
                "ENDPOINT" => self.annotator.endpoint = value.clone(),
                "MODEL" => self.annotator.model = value.clone(),
                "CACHE_DIR" => self.annotator.cache_dir = value.clone(),
                "TIMEOUT_SECS" => self.annotator.timeout_secs = parse_env(key, value)?,
                "MAX_RETRIES" => self.annotator.max_retries = parse_env(key, value)?,
                other => {
                    return Err(Error::Config(format!(
                        "unknown environment override {ENV_PREFIX}{other}"
                    )))
                }
            }
        }
        self.validate()
    }

    /// Snapshot of the process environment, filtered to the prefix.
    pub fn env_snapshot() -> BTreeMap<String, String> {
        std::env::vars()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX))
            .collect()
    }
}

fn parse_env<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key}={value:?}")))
}
