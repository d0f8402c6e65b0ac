use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::binning::check_priors;
use crate::error::{Error, Result};

/// How the ε values of a sweep are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonRule {
    List(Vec<f64>),
    /// `count` points evenly spaced in `log10` from `start` to `stop`, endpoints included.
    Logspace {
        start: f64,
        stop: f64,
        count: usize,
    },
    /// A single `ε = 1/√d` per dimension.
    InvSqrtDim,
}

impl EpsilonRule {
    pub fn values(&self, dim: usize) -> Vec<f64> {
        match self {
            EpsilonRule::List(v) => v.clone(),
            EpsilonRule::Logspace { start, stop, count } => logspace(*start, *stop, *count),
            EpsilonRule::InvSqrtDim => vec![1.0 / (dim as f64).sqrt()],
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            EpsilonRule::List(v) => {
                if v.is_empty() {
                    return Err(Error::arg("epsilon list is empty"));
                }
                if let Some(e) = v.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
                    return Err(Error::arg(format!(
                        "epsilon values must be positive, got {e}"
                    )));
                }
            }
            EpsilonRule::Logspace { start, stop, count } => {
                if !(*start > 0.0 && *stop > 0.0) || !start.is_finite() || !stop.is_finite() {
                    return Err(Error::arg("logspace endpoints must be positive"));
                }
                if *count == 0 {
                    return Err(Error::arg("logspace needs at least one point"));
                }
            }
            EpsilonRule::InvSqrtDim => {}
        }
        Ok(())
    }
}

pub fn logspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let (lo, hi) = (start.log10(), stop.log10());
    (0..count)
        .map(|i| {
            if i == 0 {
                start
            } else if i + 1 == count {
                stop
            } else {
                10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64)
            }
        })
        .collect()
}

/// Which rate the fits are run on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateKind {
    #[serde(rename = "entropy")]
    Entropy,
    #[serde(rename = "log2L")]
    Log2L,
    #[serde(rename = "both")]
    Both,
}

impl RateKind {
    /// The single kinds covered by `self`.
    pub fn kinds(self) -> Vec<RateKind> {
        match self {
            RateKind::Both => vec![RateKind::Entropy, RateKind::Log2L],
            k => vec![k],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RateKind::Entropy => "entropy",
            RateKind::Log2L => "log2L",
            RateKind::Both => "both",
        }
    }
}

impl std::str::FromStr for RateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy" => Ok(RateKind::Entropy),
            "log2L" | "log2l" => Ok(RateKind::Log2L),
            "both" => Ok(RateKind::Both),
            other => Err(Error::arg(format!("unknown rate kind {other:?}"))),
        }
    }
}

fn default_priors() -> (f64, f64) {
    (0.5, 0.5)
}

fn default_rate_kind() -> RateKind {
    RateKind::Both
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub epsilons: EpsilonRule,
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "default_rate_kind")]
    pub rate_kind: RateKind,
    #[serde(default = "default_priors")]
    pub priors: (f64, f64),
    /// Worker cap; `QBCOMP_THREADS` applies when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// `d = 1024`, 50 log-spaced ε in `[1e-4, 1]`.
    pub fn error_sweep_default(samples: usize, seed: u64) -> Self {
        Self {
            dims: vec![1024],
            epsilons: EpsilonRule::Logspace {
                start: 1e-4,
                stop: 1.0,
                count: 50,
            },
            samples,
            seed,
            rate_kind: RateKind::Both,
            priors: default_priors(),
            threads: None,
        }
    }

    /// `d = 2^6 … 2^14` at `ε = 1/√d`.
    pub fn dim_sweep_default(samples: usize, seed: u64) -> Self {
        Self {
            dims: (6..=14).map(|k| 1usize << k).collect(),
            epsilons: EpsilonRule::InvSqrtDim,
            samples,
            seed,
            rate_kind: RateKind::Both,
            priors: default_priors(),
            threads: None,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::arg("no dimensions configured"));
        }
        if self.dims.contains(&0) {
            return Err(Error::arg("dimensions must be positive"));
        }
        if self.samples == 0 {
            return Err(Error::arg("samples must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::arg("threads must be at least 1"));
        }
        self.epsilons.validate()?;
        check_priors(self.priors)
    }
}
