use serde::{Deserialize, Serialize};

use crate::phy::MacStateSample;

/// Thresholds of the signal-cleaning step, all in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningThresholds {
    /// An intf share above this counts as a full LTE sample.
    pub tau1: f64,
    /// A non-intf share above this counts as no LTE at all.
    pub tau2: f64,
    /// An rx, tx or idle share above this forces the sample to zero.
    pub tau3: f64,
}

impl Default for CleaningThresholds {
    fn default() -> Self {
        Self {
            tau1: 0.8,
            tau2: 0.8,
            tau3: 0.5,
        }
    }
}

impl CleaningThresholds {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("tau1", self.tau1), ("tau2", self.tau2), ("tau3", self.tau3)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} = {v} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Cleans one sample. Rules apply in order, comparisons are strict, and
/// the result is centred on zero. Shares the rules leave untouched stay
/// fractional.
pub fn clean_sample(s: &MacStateSample, th: &CleaningThresholds) -> f64 {
    let mut v = s.intf;
    if v > th.tau1 {
        v = 1.0;
    }
    if 1.0 - v > th.tau2 {
        v = 0.0;
    }
    if s.rx > th.tau3 || s.tx > th.tau3 || s.idle > th.tau3 {
        v = 0.0;
    }
    v - 0.5
}

pub fn clean_signal(samples: &[MacStateSample], th: &CleaningThresholds) -> Vec<f64> {
    samples.iter().map(|s| clean_sample(s, th)).collect()
}
