use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::approx::ApproxConstants;
use crate::error::{Error, Result};
use crate::mcmc::{BlockMask, ChainConfig, ProposalConfig};
use crate::mle::MleOptions;
use crate::priors::PriorConfig;
use crate::truth::TruthSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// One experiment scenario, read from JSON. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub truth: TruthSpec,
    #[serde(default = "defaults::n")]
    pub n: usize,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default = "defaults::iterations")]
    pub iterations: usize,
    #[serde(default = "defaults::burn_in")]
    pub burn_in: usize,
    #[serde(default = "defaults::one")]
    pub thin: usize,
    #[serde(default = "defaults::grid_size")]
    pub grid_size: usize,
    #[serde(default)]
    pub grid_interval: Option<(f64, f64)>,
    #[serde(default)]
    pub proposal: ProposalConfig,
    #[serde(default)]
    pub blocks: BlockMask,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::outputs")]
    pub outputs: PathBuf,
    /// Single-column CSV of observations; generated from `truth` when absent.
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub sample_prior: SamplePriorSection,
    #[serde(default)]
    pub table1: Table1Section,
    #[serde(default)]
    pub rate: RateSection,
    #[serde(default)]
    pub mle: MleOptions,
    #[serde(default)]
    pub approx: ApproxSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplePriorSection {
    pub draws: usize,
    /// Atoms per draw; the truncation level at `n` when absent.
    pub atoms: Option<usize>,
    /// Support used when the prior's support is empirical.
    pub support: (f64, f64),
}

impl Default for SamplePriorSection {
    fn default() -> Self {
        Self {
            draws: 5,
            atoms: None,
            support: (0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Table1Section {
    pub n_values: Vec<usize>,
    pub points: Vec<f64>,
    pub replications: u64,
}

impl Default for Table1Section {
    fn default() -> Self {
        Self {
            n_values: vec![50, 200, 500],
            points: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            replications: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSection {
    pub n_values: Vec<usize>,
    pub seeds: u64,
}

impl Default for RateSection {
    fn default() -> Self {
        Self {
            n_values: vec![100, 400, 1600],
            seeds: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproxSection {
    pub n: u64,
    /// `[a_n, b_n]`; defaults to `+-8 log n / (5 alpha)`.
    pub interval: Option<(f64, f64)>,
    pub constants: Option<ApproxConstants>,
}

impl Default for ApproxSection {
    fn default() -> Self {
        Self {
            n: 10_000,
            interval: None,
            constants: None,
        }
    }
}

mod defaults {
    use std::path::PathBuf;

    pub fn n() -> usize {
        500
    }
    pub fn iterations() -> usize {
        10_000
    }
    pub fn burn_in() -> usize {
        5_000
    }
    pub fn one() -> usize {
        1
    }
    pub fn grid_size() -> usize {
        512
    }
    pub fn outputs() -> PathBuf {
        PathBuf::from("out")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn chain(&self) -> ChainConfig {
        ChainConfig {
            prior: self.prior,
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            grid_size: self.grid_size,
            grid_interval: self.grid_interval,
            proposal: self.proposal,
            blocks: self.blocks,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let field = |e: Error| Error::Config(e.to_string());
        self.truth.validate().map_err(field)?;
        self.chain().validate().map_err(field)?;
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.table1.replications == 0 {
            return Err(Error::Config("table1.replications must be at least 1".into()));
        }
        if self.rate.seeds == 0 {
            return Err(Error::Config("rate.seeds must be at least 1".into()));
        }
        Ok(())
    }
}
