use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::ReadOptions;
use crate::diffnet::DiffnetConfig;
use crate::dnet::IstaConfig;
use crate::error::{Error, Result};
use crate::gibbs::GibbsConfig;
use crate::structures::StructureKind;
use crate::wishart::default_grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Bnet,
    Dnet,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Bnet => "bnet",
            Estimator::Dnet => "dnet",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bnet" | "b-net" => Ok(Estimator::Bnet),
            "dnet" | "d-net" => Ok(Estimator::Dnet),
            _ => Err(Error::InvalidParameter(format!("unknown estimator {s:?}"))),
        }
    }
}

/// How the two real-data groups are formed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupSpec {
    /// Contiguous date ranges; `compare` names the two phases to contrast.
    Phases {
        /// ISO dates.
        boundaries: Vec<String>,
        #[serde(default)]
        names: Option<Vec<String>>,
        compare: [String; 2],
    },
    /// Rows split by the value of a numeric label column.
    Class {
        column: String,
        first: f64,
        second: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub read: ReadOptions,
    /// Trailing moving-average window applied before anything else.
    #[serde(default)]
    pub smoothing_window: Option<usize>,
    #[serde(default = "default_true")]
    pub nonparanormal: bool,
    pub groups: GroupSpec,
}

fn default_true() -> bool {
    true
}

pub const DESK_REPLICATIONS: usize = 10;
pub const DESK_RETAINED: usize = 2000;
pub const DESK_BURN_IN: usize = 1000;
pub const FULL_REPLICATIONS: usize = 40;
pub const FULL_RETAINED: usize = 10000;
pub const FULL_BURN_IN: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub replications: usize,
    pub structures: Vec<StructureKind>,
    pub dims: Vec<usize>,
    /// Per-sample size for each entry of `dims`.
    pub sample_sizes: Vec<usize>,
    pub estimators: Vec<Estimator>,
    /// Threshold for the B-net graph in the results table.
    pub eta: f64,
    /// Thresholds scanned by the sweep study.
    pub grid: Vec<f64>,
    pub bnet: DiffnetConfig,
    pub dnet: IstaConfig,
    pub real: Option<RealConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            replications: DESK_REPLICATIONS,
            structures: StructureKind::ALL.to_vec(),
            dims: vec![10, 30, 100],
            sample_sizes: vec![50, 100, 200],
            estimators: vec![Estimator::Bnet, Estimator::Dnet],
            eta: 0.3,
            grid: default_grid(),
            bnet: DiffnetConfig {
                gibbs: GibbsConfig {
                    burn_in: DESK_BURN_IN,
                    retained: DESK_RETAINED,
                    ..GibbsConfig::default()
                },
                ..DiffnetConfig::default()
            },
            dnet: IstaConfig::default(),
            real: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// 40 replications and 5000 + 10000 sweeps.
    pub fn full_scale(mut self) -> Self {
        self.replications = FULL_REPLICATIONS;
        self.bnet.gibbs.burn_in = FULL_BURN_IN;
        self.bnet.gibbs.retained = FULL_RETAINED;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.replications == 0 {
            return bad("replications must be >= 1".into());
        }
        if self.dims.len() != self.sample_sizes.len() {
            return bad(format!(
                "dims has {} entries but sample_sizes has {}",
                self.dims.len(),
                self.sample_sizes.len()
            ));
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < 2) {
            return bad(format!("sample sizes must be >= 2, got {n}"));
        }
        if self.estimators.is_empty() {
            return bad("no estimators selected".into());
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        if self.grid.is_empty() || !self.grid.windows(2).all(|w| w[0] < w[1]) {
            return bad("grid must be non-empty and strictly increasing".into());
        }
        self.bnet.validate().map_err(|e| Error::Config(format!("bnet: {e}")))?;
        self.dnet.validate().map_err(|e| Error::Config(format!("dnet: {e}")))?;
        Ok(())
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.dims.iter().copied().zip(self.sample_sizes.iter().copied())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
