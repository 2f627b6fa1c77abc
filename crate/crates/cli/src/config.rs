use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::Context;
use ltfi::experiment::{ExperimentSpec, LinkSetup};
use ltfi::multicell::MulticellConfig;
use ltfi::phy::{Scenario, DEFAULT_THETA};
use ltfi::x2::ClientConfig;
use serde::{Deserialize, Serialize};

/// Everything a run can be configured with; every section is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub link: LinkSetup,
    pub sweep: SweepConfig,
    pub multicell: MulticellConfig,
    pub x2: X2Config,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub scenario: Scenario,
    pub powers_dbm: Vec<f64>,
    pub theta: i32,
    pub thetas: Vec<i32>,
    pub repetitions: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Clear,
            powers_dbm: (0..=50).map(|i| -95.0 + i as f64).collect(),
            theta: DEFAULT_THETA,
            thetas: vec![3, 23, 28],
            repetitions: 100,
        }
    }
}

impl SweepConfig {
    pub fn spec(&self, seed: u64) -> ExperimentSpec {
        ExperimentSpec {
            scenario: self.scenario,
            powers_dbm: self.powers_dbm.clone(),
            theta: self.theta,
            seed,
            repetitions: self.repetitions,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct X2Config {
    pub bind: SocketAddr,
    pub network_id: Ipv4Addr,
    /// Codebook JSON served by `x2-serve`; built from the multicell
    /// section when absent.
    pub codebook: Option<PathBuf>,
    pub client: ClientConfig,
}

impl Default for X2Config {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 36412)),
            network_id: Ipv4Addr::new(192, 0, 2, 1),
            codebook: None,
            client: ClientConfig::default(),
        }
    }
}

pub fn load(path: Option<&Path>) -> anyhow::Result<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}
