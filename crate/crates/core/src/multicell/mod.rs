//! Multi-cell deployment: hexagonal placement, overlapping clusters, the
//! codebook and proximity estimation from decoded cluster fields.

mod clusters;
mod codebook;
mod fullstack;
mod grid;
mod hex;
mod proximity;

pub use clusters::{build_cluster_configurations, Cluster, ClusterConfiguration, ClusterPlan};
pub use codebook::Codebook;
pub use fullstack::FullStack;
pub use grid::{count_histogram, grid_evaluate, write_grid_csv, GridConfig, GridPoint};
pub use hex::{
    axial_to_xy, build_hex_deployment, build_hex_deployment_with_power, spiral, Axial, BaseStation,
    Deployment, DEFAULT_SPACING_M, DEFAULT_TX_POWER_DBM, HEX_DIRECTIONS,
};
pub use proximity::{
    best_sinr_db, decodable_fields, estimate_proximity, sinr_db, ProximityObservation,
    RadioEnvironment, Shadowing, MIN_DISTANCE_M,
};

use serde::{Deserialize, Serialize};

use crate::codec::CodecError;
use crate::demod::DemodError;
use crate::phy::{noise_floor_dbm, PathLossModel, PhyError};

#[derive(Debug, thiserror::Error)]
pub enum MulticellError {
    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),
    #[error("no codebook entry for slot {slot}, cluster {cluster}")]
    Lookup { slot: u8, cluster: u16 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error(transparent)]
    Demod(#[from] DemodError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PartialEq for MulticellError {
    fn eq(&self, other: &Self) -> bool {
        use MulticellError::*;
        match (self, other) {
            (UnsupportedTopology(a), UnsupportedTopology(b)) | (Config(a), Config(b)) => a == b,
            (Lookup { slot: a, cluster: b }, Lookup { slot: c, cluster: d }) => a == c && b == d,
            _ => false,
        }
    }
}

/// Deployment and model parameters for a grid run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MulticellConfig {
    pub cells: usize,
    pub spacing_m: f64,
    pub tx_power_dbm: f64,
    pub sensitivity_dbm: f64,
    pub pathloss: PathLossModel,
    pub grid: GridConfig,
}

impl Default for MulticellConfig {
    fn default() -> Self {
        Self {
            cells: 100,
            spacing_m: DEFAULT_SPACING_M,
            tx_power_dbm: DEFAULT_TX_POWER_DBM,
            sensitivity_dbm: -77.0,
            pathloss: PathLossModel::default(),
            grid: GridConfig::default(),
        }
    }
}

impl MulticellConfig {
    pub fn deployment(&self) -> Result<Deployment, MulticellError> {
        build_hex_deployment_with_power(self.cells, self.spacing_m, self.tx_power_dbm)
    }

    pub fn environment(&self) -> RadioEnvironment {
        RadioEnvironment {
            pathloss: self.pathloss,
            sensitivity_dbm: self.sensitivity_dbm,
            noise_floor_dbm: noise_floor_dbm(),
            shadowing: Shadowing::None,
        }
    }

    /// Builds the deployment and codebook and evaluates the grid.
    pub fn run(&self) -> Result<(Deployment, ClusterPlan, Vec<GridPoint>), MulticellError> {
        let dep = self.deployment()?;
        let plan = build_cluster_configurations(&dep)?;
        let points = grid_evaluate(&dep, &plan.codebook, &self.environment(), &self.grid)?;
        Ok((dep, plan, points))
    }
}
