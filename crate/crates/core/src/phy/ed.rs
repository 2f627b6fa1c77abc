use serde::{Deserialize, Serialize};

use super::PhyError;

/// Maps the NIC's energy-detection register value θ to a threshold in dBm.
///
/// The map is affine between consecutive calibration anchors. Values of θ
/// outside the anchor range are rejected rather than extrapolated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdRegisterMap {
    anchors: Vec<(i32, f64)>,
}

/// Register value the driver programs by default.
pub const DEFAULT_THETA: i32 = 28;

impl Default for EdRegisterMap {
    fn default() -> Self {
        Self {
            anchors: vec![(3, -91.0), (23, -77.0), (28, -61.5)],
        }
    }
}

impl EdRegisterMap {
    pub fn new(mut anchors: Vec<(i32, f64)>) -> Result<Self, PhyError> {
        anchors.sort_by_key(|a| a.0);
        if anchors.is_empty() {
            return Err(PhyError::Config("ED map needs at least one anchor".into()));
        }
        if anchors.windows(2).any(|w| w[0].0 == w[1].0 || w[0].1 >= w[1].1) {
            return Err(PhyError::Config(
                "ED anchors must have distinct θ and increase in dBm".into(),
            ));
        }
        Ok(Self { anchors })
    }

    pub fn anchors(&self) -> &[(i32, f64)] {
        &self.anchors
    }

    pub fn domain(&self) -> (i32, i32) {
        (self.anchors[0].0, self.anchors[self.anchors.len() - 1].0)
    }

    pub fn map(&self, theta: i32) -> Result<f64, PhyError> {
        let (lo, hi) = self.domain();
        if theta < lo || theta > hi {
            return Err(PhyError::Config(format!(
                "θ = {theta} outside calibrated range [{lo}, {hi}]"
            )));
        }
        if let Some(&(_, dbm)) = self.anchors.iter().find(|a| a.0 == theta) {
            return Ok(dbm);
        }
        let seg = self
            .anchors
            .windows(2)
            .find(|w| w[0].0 < theta && theta < w[1].0)
            .expect("θ inside the domain falls in a segment");
        let (t0, d0) = seg[0];
        let (t1, d1) = seg[1];
        let slope = (d1 - d0) / (t1 - t0) as f64;
        Ok(d0 + slope * (theta - t0) as f64)
    }
}
