//! Plain `key = value` configuration for the bound evaluators and harness.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value '{value}' for '{key}'")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("{key} must be {constraint}")]
    OutOfRange {
        key: &'static str,
        constraint: &'static str,
    },
}

/// All tunable constants. The source text leaves most of them free; every
/// default is recorded in serialized output so runs are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    /// Exponent constant C in the base admissible pair.
    pub c: f64,
    /// Constant C0 scaling the A_i family.
    pub c0: f64,
    /// The "Cq" factor in the transform, as a multiple of q.
    pub cq_mult: f64,
    /// Exponent constant c in the K/delta threshold of the pair chooser.
    pub lemma51_c: f64,
    /// Points per axis for the constrained grid min/max.
    pub grid_points: usize,
    /// ln(N-bar): the "sufficiently large" anchor, kept in log space.
    pub log_n_bar: f64,
    /// Element budget for sumset growth experiments.
    pub budget: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            c: 2.0,
            c0: 2.0,
            cq_mult: 2.0,
            lemma51_c: 1.0,
            grid_points: 16,
            log_n_bar: 1e7,
            budget: 10_000_000,
        }
    }
}

impl Config {
    /// Parse `key = value` lines; `#` starts a comment, blank lines skipped.
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line,
                text: content.to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let badf = || ConfigError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            };
            match key {
                "c" => cfg.c = value.parse().map_err(|_| badf())?,
                "c0" => cfg.c0 = value.parse().map_err(|_| badf())?,
                "cq_mult" => cfg.cq_mult = value.parse().map_err(|_| badf())?,
                "lemma51_c" => cfg.lemma51_c = value.parse().map_err(|_| badf())?,
                "grid_points" => cfg.grid_points = value.parse().map_err(|_| badf())?,
                "log_n_bar" => cfg.log_n_bar = value.parse().map_err(|_| badf())?,
                "budget" => cfg.budget = value.parse().map_err(|_| badf())?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(ConfigError::OutOfRange {
                key: "c",
                constraint: "positive and finite",
            });
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(ConfigError::OutOfRange {
                key: "c0",
                constraint: "positive and finite",
            });
        }
        if !(self.cq_mult > 0.0 && self.cq_mult.is_finite()) {
            return Err(ConfigError::OutOfRange {
                key: "cq_mult",
                constraint: "positive and finite",
            });
        }
        if !(self.lemma51_c > 0.0 && self.lemma51_c.is_finite()) {
            return Err(ConfigError::OutOfRange {
                key: "lemma51_c",
                constraint: "positive and finite",
            });
        }
        if self.grid_points < 2 {
            return Err(ConfigError::OutOfRange {
                key: "grid_points",
                constraint: ">= 2",
            });
        }
        if !(self.log_n_bar > 1.0 && self.log_n_bar.is_finite()) {
            return Err(ConfigError::OutOfRange {
                key: "log_n_bar",
                constraint: "> 1 and finite",
            });
        }
        Ok(())
    }
}
