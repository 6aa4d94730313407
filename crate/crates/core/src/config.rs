//! Pipeline configuration with the published defaults.
//!
//! The config file is flat UTF-8 `key = value` text; `#` starts a comment.
//! Missing keys fall back to the defaults below, so an empty file is a valid
//! config.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyper-parameters for every pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Hierarchical-clustering merge threshold on cosine distance.
    pub hc_threshold: f64,
    /// Number of mean-field iterations T.
    pub crf_iterations: usize,
    pub rho1: f64,
    pub rho2: f64,
    pub t1: f64,
    pub t2: f64,
    pub iota: f64,
    /// Edge-pruning threshold applied after refinement.
    pub kappa: f64,
    pub rnmf_iterations: usize,
    /// Eigenvalue threshold for estimating the trajectory count K.
    pub varpi: f64,
    /// Row-sum regularization weight in the factorization objective.
    pub tau: f64,
    pub random_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            hc_threshold: 0.07,
            crf_iterations: 1,
            rho1: 1.69,
            rho2: 1.5,
            t1: 0.0,
            t2: 0.0,
            iota: 0.82,
            kappa: 0.9,
            rnmf_iterations: 200,
            varpi: 0.5,
            tau: 4.0,
            random_seed: 42,
        }
    }
}

impl PipelineConfig {
    /// ln of the mean-field normalizer Z = exp(ι[ρ1(1−t1)+ρ2(1−t2)]).
    pub fn ln_z(&self) -> f64 {
        self.iota * (self.rho1 * (1.0 - self.t1) + self.rho2 * (1.0 - self.t2))
    }

    pub fn validate(&self) -> Result<()> {
        fn unit(key: &'static str, v: f64) -> Result<()> {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::ConfigRange {
                    key,
                    bound: "[0,1]",
                    value: v,
                });
            }
            Ok(())
        }
        fn nonneg(key: &'static str, v: f64) -> Result<()> {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::ConfigRange {
                    key,
                    bound: "[0,inf)",
                    value: v,
                });
            }
            Ok(())
        }
        unit("kappa", self.kappa)?;
        unit("varpi", self.varpi)?;
        unit("t1", self.t1)?;
        unit("t2", self.t2)?;
        nonneg("hc_threshold", self.hc_threshold)?;
        nonneg("rho1", self.rho1)?;
        nonneg("rho2", self.rho2)?;
        nonneg("iota", self.iota)?;
        nonneg("tau", self.tau)?;
        if self.crf_iterations < 1 {
            return Err(Error::ConfigRange {
                key: "crf_iterations",
                bound: "[1,inf)",
                value: self.crf_iterations as f64,
            });
        }
        if self.rnmf_iterations < 1 {
            return Err(Error::ConfigRange {
                key: "rnmf_iterations",
                bound: "[1,inf)",
                value: self.rnmf_iterations as f64,
            });
        }
        Ok(())
    }

    /// Parse flat `key = value` text; unset keys keep their defaults.
    pub fn parse(text: &str, origin: &str) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                origin: origin.to_string(),
                line: lineno + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse_err = |message: String| Error::Parse {
                origin: origin.to_string(),
                line: lineno + 1,
                message,
            };
            let real = |target: &mut f64| -> Result<()> {
                *target = value
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("{key}: {e}")))?;
                Ok(())
            };
            match key {
                "hc_threshold" => real(&mut cfg.hc_threshold)?,
                "rho1" => real(&mut cfg.rho1)?,
                "rho2" => real(&mut cfg.rho2)?,
                "t1" => real(&mut cfg.t1)?,
                "t2" => real(&mut cfg.t2)?,
                "iota" => real(&mut cfg.iota)?,
                "kappa" => real(&mut cfg.kappa)?,
                "varpi" => real(&mut cfg.varpi)?,
                "tau" => real(&mut cfg.tau)?,
                "crf_iterations" => {
                    cfg.crf_iterations = value
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("{key}: {e}")))?;
                }
                "rnmf_iterations" => {
                    cfg.rnmf_iterations = value
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("{key}: {e}")))?;
                }
                "random_seed" => {
                    cfg.random_seed = value
                        .parse::<u64>()
                        .map_err(|e| parse_err(format!("{key}: {e}")))?;
                }
                other => {
                    return Err(parse_err(format!("unknown key `{other}`")));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serialize to the same flat key-value format accepted by [`parse`].
    ///
    /// [`parse`]: PipelineConfig::parse
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "hc_threshold = {}", self.hc_threshold);
        let _ = writeln!(out, "crf_iterations = {}", self.crf_iterations);
        let _ = writeln!(out, "rho1 = {}", self.rho1);
        let _ = writeln!(out, "rho2 = {}", self.rho2);
        let _ = writeln!(out, "t1 = {}", self.t1);
        let _ = writeln!(out, "t2 = {}", self.t2);
        let _ = writeln!(out, "iota = {}", self.iota);
        let _ = writeln!(out, "kappa = {}", self.kappa);
        let _ = writeln!(out, "rnmf_iterations = {}", self.rnmf_iterations);
        let _ = writeln!(out, "varpi = {}", self.varpi);
        let _ = writeln!(out, "tau = {}", self.tau);
        let _ = writeln!(out, "random_seed = {}", self.random_seed);
        out
    }
}

/// Load a config file, filling missing keys with defaults.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path)?;
    PipelineConfig::parse(&text, &path.display().to_string())
}
