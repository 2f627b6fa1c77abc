//! Propagation: log-distance pathloss, log-normal shadowing with spatial
//! correlation, and the WiFi receiver noise floor.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::PhyError;

/// Thermal noise density at room temperature.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;
pub const CHANNEL_BANDWIDTH_HZ: f64 = 20e6;
pub const WIFI_NOISE_FIGURE_DB: f64 = 6.0;

/// Noise floor of a 20 MHz WiFi receiver with a 6 dB noise figure.
pub fn noise_floor_dbm() -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * CHANNEL_BANDWIDTH_HZ.log10() + WIFI_NOISE_FIGURE_DB
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// `PL(d) = PL0 + 10 n log10(d) + alpha d`.
///
/// `alpha` is the Motley-Keenan linear attenuation coefficient (dB/m). It
/// defaults to zero, which leaves a plain log-distance model whose exponent
/// absorbs the indoor losses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathLossModel {
    pub reference_loss_db: f64,
    pub exponent: f64,
    pub alpha_db_per_m: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        // free-space loss at 1 m for 5.2 GHz, office-like exponent
        Self {
            reference_loss_db: 46.8,
            exponent: 3.1,
            alpha_db_per_m: 0.0,
        }
    }
}

impl PathLossModel {
    pub fn loss_db(&self, distance_m: f64) -> Result<f64, PhyError> {
        if !(distance_m > 0.0) {
            return Err(PhyError::Domain(format!(
                "pathloss undefined at distance {distance_m} m"
            )));
        }
        Ok(self.reference_loss_db
            + 10.0 * self.exponent * distance_m.log10()
            + self.alpha_db_per_m * distance_m)
    }
}

/// One LTE transmitter as seen by one WiFi receiver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioLink {
    pub tx_power_dbm: f64,
    pub distance_m: f64,
    #[serde(default)]
    pub pathloss: PathLossModel,
    #[serde(default)]
    pub shadowing_sigma_db: f64,
}

impl RadioLink {
    /// A link whose mean received power is exactly `rx_dbm` (1 m distance).
    pub fn with_rx_power(rx_dbm: f64) -> Self {
        let pathloss = PathLossModel::default();
        Self {
            tx_power_dbm: rx_dbm + pathloss.reference_loss_db,
            distance_m: 1.0,
            pathloss,
            shadowing_sigma_db: 0.0,
        }
    }

    /// `tx_power - PL(d) - shadowing`.
    pub fn received_power(&self, shadowing_db: f64) -> Result<f64, PhyError> {
        Ok(self.tx_power_dbm - self.pathloss.loss_db(self.distance_m)? - shadowing_db)
    }

    /// Received power with one shadowing realization drawn from `rng`.
    pub fn received_power_sampled<R: Rng>(&self, rng: &mut R) -> Result<f64, PhyError> {
        let shadow = draw_shadowing(self.shadowing_sigma_db, rng);
        self.received_power(shadow)
    }
}

/// One independent log-normal shadowing draw in dB.
pub fn draw_shadowing<R: Rng>(sigma_db: f64, rng: &mut R) -> f64 {
    if sigma_db <= 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma_db)
        .expect("positive sigma")
        .sample(rng)
}

/// Spatially correlated shadowing on a regular grid.
///
/// Correlation between two points decays as `exp(-(|dx| + |dy|) / d_corr)`:
/// a separable first-order autoregression along each axis, which is the
/// two-dimensional extension of Gudmundson's exponential model.
#[derive(Clone, Debug)]
pub struct ShadowingField {
    x0: f64,
    y0: f64,
    step: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl ShadowingField {
    /// A field covering `[x0, x0 + width] x [y0, y0 + height]`.
    pub fn generate<R: Rng>(
        (x0, y0): (f64, f64),
        (width, height): (f64, f64),
        step: f64,
        sigma_db: f64,
        decorrelation_m: f64,
        rng: &mut R,
    ) -> Self {
        let nx = (width / step).ceil() as usize + 1;
        let ny = (height / step).ceil() as usize + 1;
        let mut values = vec![0.0; nx * ny];
        if sigma_db > 0.0 {
            let rho = (-step / decorrelation_m).exp();
            let innov = (1.0 - rho * rho).sqrt();
            let unit = Normal::new(0.0, 1.0).expect("unit normal");
            // rows: AR(1) along x, each with unit variance
            for j in 0..ny {
                let row = &mut values[j * nx..(j + 1) * nx];
                row[0] = unit.sample(rng);
                for i in 1..nx {
                    row[i] = rho * row[i - 1] + innov * unit.sample(rng);
                }
            }
            // columns: AR(1) along y over the independent row processes
            for j in 1..ny {
                for i in 0..nx {
                    values[j * nx + i] = rho * values[(j - 1) * nx + i] + innov * values[j * nx + i];
                }
            }
            values.iter_mut().for_each(|v| *v *= sigma_db);
        }
        Self {
            x0,
            y0,
            step,
            nx,
            ny,
            values,
        }
    }

    /// Shadowing in dB at the grid node nearest to `(x, y)`; points outside
    /// the field are clamped to its border.
    pub fn at(&self, x: f64, y: f64) -> f64 {
        let i = (((x - self.x0) / self.step).round().max(0.0) as usize).min(self.nx - 1);
        let j = (((y - self.y0) / self.step).round().max(0.0) as usize).min(self.ny - 1);
        self.values[j * self.nx + i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
