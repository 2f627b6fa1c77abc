use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::codebook::Codebook;
use super::hex::Deployment;
use super::MulticellError;
use crate::phy::{dbm_to_mw, mw_to_dbm, noise_floor_dbm, PathLossModel, ShadowingField};

/// Distances are clamped to the 1 m pathloss reference.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// Decoded `(slot, cluster)` tuples at one location.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProximityObservation {
    pub network_id: bool,
    pub fields: BTreeSet<(u8, u16)>,
}

impl ProximityObservation {
    pub fn from_fields(fields: impl IntoIterator<Item = (u8, u16)>) -> Self {
        let fields: BTreeSet<_> = fields.into_iter().collect();
        Self {
            network_id: !fields.is_empty(),
            fields,
        }
    }
}

/// Per-cell shadowing, one spatially correlated field per transmitter.
#[derive(Clone, Debug, Default)]
pub enum Shadowing {
    #[default]
    None,
    Fields(Vec<ShadowingField>),
}

impl Shadowing {
    /// One field per cell (in deployment order) covering the square of side
    /// `2 * half_side_m` centred on the origin.
    pub fn generate(
        dep: &Deployment,
        half_side_m: f64,
        step_m: f64,
        sigma_db: f64,
        decorrelation_m: f64,
        seed: u64,
    ) -> Self {
        if sigma_db <= 0.0 {
            return Shadowing::None;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let side = 2.0 * half_side_m;
        Shadowing::Fields(
            dep.cells
                .iter()
                .map(|_| {
                    ShadowingField::generate(
                        (-half_side_m, -half_side_m),
                        (side, side),
                        step_m,
                        sigma_db,
                        decorrelation_m,
                        &mut rng,
                    )
                })
                .collect(),
        )
    }

    /// Shadowing loss in dB for the `index`-th cell of the deployment.
    pub fn at(&self, index: usize, x: f64, y: f64) -> f64 {
        match self {
            Shadowing::None => 0.0,
            Shadowing::Fields(f) => f.get(index).map_or(0.0, |f| f.at(x, y)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RadioEnvironment {
    pub pathloss: PathLossModel,
    pub sensitivity_dbm: f64,
    pub noise_floor_dbm: f64,
    pub shadowing: Shadowing,
}

impl Default for RadioEnvironment {
    fn default() -> Self {
        Self {
            pathloss: PathLossModel::default(),
            sensitivity_dbm: -77.0,
            noise_floor_dbm: noise_floor_dbm(),
            shadowing: Shadowing::None,
        }
    }
}

impl RadioEnvironment {
    /// Received power of every cell at `(x, y)`, in deployment order.
    pub fn received_powers(&self, dep: &Deployment, (x, y): (f64, f64)) -> Vec<f64> {
        dep.cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let d = (c.x - x).hypot(c.y - y).max(MIN_DISTANCE_M);
                let pl = self.pathloss.loss_db(d).expect("clamped distance is positive");
                c.tx_power_dbm - pl - self.shadowing.at(i, x, y)
            })
            .collect()
    }
}

/// Threshold decodability: field `(j, i)` decodes when some member of
/// `B(i, j)` reaches the sensitivity and no other cell does. The network ID
/// decodes when any cell reaches it.
pub fn decodable_fields(
    location: (f64, f64),
    dep: &Deployment,
    codebook: &Codebook,
    env: &RadioEnvironment,
) -> ProximityObservation {
    let powers = env.received_powers(dep, location);
    let audible: BTreeSet<u32> = dep
        .cells
        .iter()
        .zip(&powers)
        .filter(|(_, &p)| p >= env.sensitivity_dbm)
        .map(|(c, _)| c.id)
        .collect();
    if audible.is_empty() {
        return ProximityObservation::default();
    }
    let fields = codebook
        .iter()
        .filter(|(_, cells)| audible.iter().all(|id| cells.contains(id)))
        .map(|(key, _)| key)
        .collect();
    ProximityObservation {
        network_id: true,
        fields,
    }
}

/// `Y`: union of the codebook entries named by the observation.
pub fn estimate_proximity(
    obs: &ProximityObservation,
    codebook: &Codebook,
) -> Result<BTreeSet<u32>, MulticellError> {
    let mut out = BTreeSet::new();
    for &(slot, cluster) in &obs.fields {
        let cells = codebook
            .get(slot, cluster)
            .ok_or(MulticellError::Lookup { slot, cluster })?;
        out.extend(cells.iter().copied());
    }
    Ok(out)
}

/// SINR of each cell in dB, treating all other cells as co-channel
/// interference.
pub fn sinr_db(powers_dbm: &[f64], noise_floor_dbm: f64) -> Vec<f64> {
    let noise = dbm_to_mw(noise_floor_dbm);
    let total: f64 = powers_dbm.iter().map(|&p| dbm_to_mw(p)).sum();
    powers_dbm
        .iter()
        .map(|&p| {
            let s = dbm_to_mw(p);
            mw_to_dbm(s) - mw_to_dbm(noise + (total - s).max(0.0))
        })
        .collect()
}

pub fn best_sinr_db(powers_dbm: &[f64], noise_floor_dbm: f64) -> f64 {
    sinr_db(powers_dbm, noise_floor_dbm)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}
