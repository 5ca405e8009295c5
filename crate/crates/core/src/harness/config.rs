//! Run configuration and the `key = value` config-file format.
//!
//! Keys mirror the CLI flags (`budget = 30`, `init-per-class = 1`,
//! `beta-sweep = true`); `_` and `-` are interchangeable. Blank lines and
//! lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::informative::HyperParams;
use crate::par::Execution;

use super::strategy::Strategy;

/// Raw `key -> value` settings, merged from a config file and CLI flags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap(BTreeMap<String, String>);

fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut map = ConfigMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                source_name: source_name.to_string(),
                line: i as u64 + 1,
                message: format!("expected `key = value`, found {line:?}"),
            })?;
            map.set(key, value.trim());
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(normalize_key(key), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(&normalize_key(key)).map(String::as_str)
    }

    /// Entries of `other` replace entries of `self`.
    pub fn overlay(mut self, other: &ConfigMap) -> Self {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
        self
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("invalid value {v:?} for {key}")))
            })
            .transpose()
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parsed(key)?
            .ok_or_else(|| Error::Config(format!("missing required setting {key}")))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "1" | "yes" | "") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(Error::Config(format!("invalid boolean {v:?} for {key}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Sparse,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(DataFormat::Csv),
            "sparse" => Ok(DataFormat::Sparse),
            other => Err(Error::Config(format!("unknown data format {other:?}"))),
        }
    }
}

/// β values of the sweep mode.
pub const BETA_SWEEP: [f64; 5] = [1.0, 2.0, 10.0, 100.0, 1000.0];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub format: DataFormat,
    pub strategies: Vec<Strategy>,
    pub budget: usize,
    pub runs: usize,
    pub seed: u64,
    pub hp: HyperParams,
    pub gamma: Option<f64>,
    pub init_per_class: usize,
    pub rescale: bool,
    pub beta_sweep: bool,
    pub pool_fraction: f64,
    pub out: PathBuf,
    pub execution: Execution,
}

impl RunConfig {
    /// Builds a config from merged settings. `strategy` accepts a
    /// comma-separated list; the first entry is the reference strategy for
    /// the t-test comparisons.
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let strategies = map
            .get("strategy")
            .ok_or_else(|| Error::Config("missing required setting strategy".into()))?
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<Strategy>>>()?;
        let mut seen = strategies.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != strategies.len() {
            return Err(Error::Config("strategy listed twice".into()));
        }
        let defaults = HyperParams::default();
        let hp = HyperParams {
            lambda: map.parsed("lambda")?.unwrap_or(defaults.lambda),
            beta: map.parsed("beta")?.unwrap_or(defaults.beta),
            rho: map.parsed("rho")?.unwrap_or(defaults.rho),
        };
        let config = RunConfig {
            data: map.required::<PathBuf>("data")?,
            format: map.parsed("format")?.unwrap_or(DataFormat::Csv),
            strategies,
            budget: map.required("budget")?,
            runs: map.parsed("runs")?.unwrap_or(10),
            seed: map.parsed("seed")?.unwrap_or(0),
            hp,
            gamma: map.parsed("gamma")?,
            init_per_class: map.parsed("init-per-class")?.unwrap_or(0),
            rescale: map.flag("rescale")?,
            beta_sweep: map.flag("beta-sweep")?,
            pool_fraction: map.parsed("pool-fraction")?.unwrap_or(0.6),
            out: map.required::<PathBuf>("out")?,
            execution: Execution::default(),
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks that do not need the dataset.
    pub fn validate(&self) -> Result<()> {
        self.hp
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.strategies.is_empty() {
            return Err(Error::Config("no strategy given".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.pool_fraction > 0.0 && self.pool_fraction < 1.0) {
            return Err(Error::Config(format!(
                "pool fraction {} outside (0, 1)",
                self.pool_fraction
            )));
        }
        Ok(())
    }

    /// Strategy arms as `(label, strategy, hyperparameters)`. With the β sweep
    /// enabled, IR-AL expands into one arm per β value.
    pub fn arms(&self) -> Vec<(String, Strategy, HyperParams)> {
        let mut arms = Vec::new();
        for &s in &self.strategies {
            if s == Strategy::Iral && self.beta_sweep {
                for beta in BETA_SWEEP {
                    arms.push((
                        format!("iral_beta{beta}"),
                        s,
                        HyperParams { beta, ..self.hp },
                    ));
                }
            } else {
                arms.push((s.name().to_string(), s, self.hp));
            }
        }
        arms
    }
}
