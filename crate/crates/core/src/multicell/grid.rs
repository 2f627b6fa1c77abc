use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebook::Codebook;
use super::hex::Deployment;
use super::proximity::{best_sinr_db, decodable_fields, estimate_proximity, RadioEnvironment, Shadowing};
use super::MulticellError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// The grid spans `[-half_side_m, half_side_m]` on both axes.
    pub half_side_m: f64,
    pub step_m: f64,
    pub shadowing_sigma_db: f64,
    pub decorrelation_m: f64,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_side_m: 70.0,
            step_m: 1.0,
            shadowing_sigma_db: 0.0,
            decorrelation_m: 10.0,
            seed: 1,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<(), MulticellError> {
        if !(self.half_side_m > 0.0 && self.step_m > 0.0) {
            return Err(MulticellError::Config("grid extent and step must be positive".into()));
        }
        if self.shadowing_sigma_db < 0.0 || !(self.decorrelation_m > 0.0) {
            return Err(MulticellError::Config(
                "shadowing sigma must be non-negative and decorrelation positive".into(),
            ));
        }
        Ok(())
    }

    /// Grid coordinates along one axis.
    pub fn axis(&self) -> Vec<f64> {
        let n = (2.0 * self.half_side_m / self.step_m).round() as usize;
        (0..=n).map(|i| -self.half_side_m + i as f64 * self.step_m).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x_m: f64,
    pub y_m: f64,
    pub n_detected: usize,
    pub sinr_db_best: f64,
}

/// Proximity-set size and best SINR at every grid point. Shadowing fields
/// are drawn once from `cfg.seed` before the parallel evaluation, so the
/// result does not depend on thread scheduling.
pub fn grid_evaluate(
    dep: &Deployment,
    codebook: &Codebook,
    env: &RadioEnvironment,
    cfg: &GridConfig,
) -> Result<Vec<GridPoint>, MulticellError> {
    cfg.validate()?;
    let env = RadioEnvironment {
        shadowing: Shadowing::generate(
            dep,
            cfg.half_side_m,
            cfg.step_m,
            cfg.shadowing_sigma_db,
            cfg.decorrelation_m,
            cfg.seed,
        ),
        ..env.clone()
    };
    let axis = cfg.axis();
    let rows: Result<Vec<Vec<GridPoint>>, MulticellError> = axis
        .par_iter()
        .map(|&y| {
            axis.iter()
                .map(|&x| {
                    let obs = decodable_fields((x, y), dep, codebook, &env);
                    let powers = env.received_powers(dep, (x, y));
                    Ok(GridPoint {
                        x_m: x,
                        y_m: y,
                        n_detected: estimate_proximity(&obs, codebook)?.len(),
                        sinr_db_best: best_sinr_db(&powers, env.noise_floor_dbm),
                    })
                })
                .collect()
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// Number of grid points per proximity-set size.
pub fn count_histogram(points: &[GridPoint]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for p in points {
        *h.entry(p.n_detected).or_insert(0) += 1;
    }
    h
}

/// Writes `x_m, y_m, n_detected, sinr_db_best`.
pub fn write_grid_csv<W: Write>(w: W, points: &[GridPoint]) -> Result<(), MulticellError> {
    let mut wr = csv::Writer::from_writer(w);
    for p in points {
        wr.serialize(p)?;
    }
    wr.flush()?;
    Ok(())
}
