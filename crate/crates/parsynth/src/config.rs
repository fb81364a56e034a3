//! Run configuration: flat key=value text files with command-line overrides,
//! echoed into the output directory so any run can be reproduced exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::grammar::GrammarName;
use crate::nn::AdamConfig;
use crate::train::TrainConfig;

/// Everything a training or evaluation run needs, with the standard
/// defaults baked in.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grammar: GrammarName,
    pub seed: u64,
    pub train: TrainConfig,
    /// Epoch budget for the supervised-traces path.
    pub supervised_epochs: usize,
}

impl RunConfig {
    pub fn new(grammar: GrammarName) -> Self {
        RunConfig {
            grammar,
            seed: 1,
            train: TrainConfig::default(),
            supervised_epochs: 200,
        }
    }

    /// Render as flat key=value lines, alphabetical.
    pub fn to_text(&self) -> String {
        let mut map = BTreeMap::new();
        let t = &self.train;
        map.insert("alpha", t.alpha.to_string());
        map.insert("beta", t.beta.to_string());
        map.insert("gamma1", t.gamma_comb.to_string());
        map.insert("gamma2", t.gamma_nt.to_string());
        map.insert("gamma3", t.gamma_fid.to_string());
        map.insert("tau", t.tau.to_string());
        map.insert("sigma", t.sigma.to_string());
        map.insert("m1", t.inner_iters.to_string());
        map.insert("m2", t.outer_iters.to_string());
        map.insert("m3", t.reinit_every.to_string());
        map.insert("clip_norm", t.clip_norm.to_string());
        map.insert("learning_rate", t.adam.learning_rate.to_string());
        map.insert("adam_beta1", t.adam.beta1.to_string());
        map.insert("adam_beta2", t.adam.beta2.to_string());
        map.insert("adam_epsilon", t.adam.epsilon.to_string());
        map.insert("candidate_cap", t.candidate_cap.to_string());
        map.insert("phase2_max_attempts", t.phase2_max_attempts.to_string());
        map.insert("phase2_epochs", t.phase2_epochs.to_string());
        map.insert("theta_init", t.theta_init_half_range.to_string());
        map.insert("hidden", t.hidden.to_string());
        map.insert("grammar", self.grammar.to_string());
        map.insert("seed", self.seed.to_string());
        map.insert("supervised_epochs", self.supervised_epochs.to_string());
        let mut out = String::new();
        for (k, v) in map {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Apply one key=value override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        macro_rules! parse_into {
            ($slot:expr) => {
                $slot = value.parse().map_err(|_| ConfigError::BadValue {
                    key: key.to_string(),
                    value: value.to_string(),
                })?
            };
        }
        let t = &mut self.train;
        match key {
            "alpha" => parse_into!(t.alpha),
            "beta" => parse_into!(t.beta),
            "gamma1" => parse_into!(t.gamma_comb),
            "gamma2" => parse_into!(t.gamma_nt),
            "gamma3" => parse_into!(t.gamma_fid),
            "tau" => parse_into!(t.tau),
            "sigma" => parse_into!(t.sigma),
            "m1" => parse_into!(t.inner_iters),
            "m2" => parse_into!(t.outer_iters),
            "m3" => parse_into!(t.reinit_every),
            "clip_norm" => parse_into!(t.clip_norm),
            "learning_rate" => parse_into!(t.adam.learning_rate),
            "adam_beta1" => parse_into!(t.adam.beta1),
            "adam_beta2" => parse_into!(t.adam.beta2),
            "adam_epsilon" => parse_into!(t.adam.epsilon),
            "candidate_cap" => parse_into!(t.candidate_cap),
            "phase2_max_attempts" => parse_into!(t.phase2_max_attempts),
            "phase2_epochs" => parse_into!(t.phase2_epochs),
            "theta_init" => parse_into!(t.theta_init_half_range),
            "hidden" => parse_into!(t.hidden),
            "seed" => parse_into!(self.seed),
            "supervised_epochs" => parse_into!(self.supervised_epochs),
            "grammar" => parse_into!(self.grammar),
            other => {
                return Err(ConfigError::UnknownKey {
                    key: other.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Load overrides from a key=value file on top of the defaults.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::BadLine {
                line: lineno + 1,
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn echo_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.txt"), self.to_text())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown config key {key:?}")]
    UnknownKey { key: String },
    #[error("bad value for {key:?}: {value:?}")]
    BadValue { key: String, value: String },
    #[error("malformed config line {line}")]
    BadLine { line: usize },
    #[error("config io: {0}")]
    Io(String),
}

/// The stock optimizer defaults, for reference in tests.
pub fn default_adam() -> AdamConfig {
    AdamConfig::default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_standard_constants() {
        let cfg = RunConfig::new(GrammarName::Am);
        let t = &cfg.train;
        assert_eq!(t.alpha, 3.0);
        assert_eq!(t.beta, 0.01);
        assert_eq!(t.gamma_comb, 10.0);
        assert_eq!(t.gamma_nt, 1.0);
        assert_eq!(t.gamma_fid, 0.01);
        assert_eq!(t.tau, 1.0);
        assert_eq!(t.sigma, 0.1);
        assert_eq!(t.inner_iters, 20);
        assert_eq!(t.outer_iters, 10_000);
        assert_eq!(t.reinit_every, 2_000);
        assert_eq!(t.clip_norm, 5.0);
        assert_eq!(t.adam.learning_rate, 0.01);
        assert_eq!(t.hidden, 50);
    }

    #[test]
    fn overrides_roundtrip_through_text() {
        let mut cfg = RunConfig::new(GrammarName::While);
        cfg.set("m2", "500").unwrap();
        cfg.set("seed", "7").unwrap();
        assert_eq!(cfg.train.outer_iters, 500);
        let text = cfg.to_text();
        let mut cfg2 = RunConfig::new(GrammarName::Am);
        for line in text.lines() {
            let (k, v) = line.split_once('=').unwrap();
            cfg2.set(k, v).unwrap();
        }
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut cfg = RunConfig::new(GrammarName::Am);
        assert!(matches!(
            cfg.set("dropout", "0.5"),
            Err(ConfigError::UnknownKey { .. })
        ));
    }
}
