use serde::{Deserialize, Serialize};

use super::PhyError;

/// Cycle lengths an LTE-U cell may use.
pub const ALLOWED_CYCLES_MS: [u32; 3] = [40, 80, 160];
/// Upper bound on the CSAT duty cycle.
pub const MAX_DUTY: f64 = 0.5;

/// Carrier-sense adaptive transmission: an ON phase of `on_ms` at the
/// start of every `cycle_ms` period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCsat", into = "RawCsat")]
pub struct CsatConfig {
    cycle_ms: u32,
    on_ms: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct RawCsat {
    cycle_ms: u32,
    on_ms: f64,
}

impl CsatConfig {
    pub fn new(cycle_ms: u32, on_ms: f64) -> Result<Self, PhyError> {
        if !ALLOWED_CYCLES_MS.contains(&cycle_ms) {
            return Err(PhyError::Config(format!(
                "cycle of {cycle_ms} ms is not one of {ALLOWED_CYCLES_MS:?}"
            )));
        }
        if !(on_ms >= 0.0) {
            return Err(PhyError::Config(format!("ON time {on_ms} ms is negative")));
        }
        let duty = on_ms / cycle_ms as f64;
        if duty > MAX_DUTY + 1e-12 {
            return Err(PhyError::Config(format!(
                "duty cycle {duty:.3} exceeds {MAX_DUTY}"
            )));
        }
        Ok(Self { cycle_ms, on_ms })
    }

    pub fn from_duty(cycle_ms: u32, duty: f64) -> Result<Self, PhyError> {
        Self::new(cycle_ms, duty * cycle_ms as f64)
    }

    pub fn cycle_ms(&self) -> u32 {
        self.cycle_ms
    }

    pub fn on_ms(&self) -> f64 {
        self.on_ms
    }

    pub fn duty(&self) -> f64 {
        self.on_ms / self.cycle_ms as f64
    }
}

impl TryFrom<RawCsat> for CsatConfig {
    type Error = PhyError;

    fn try_from(raw: RawCsat) -> Result<Self, Self::Error> {
        Self::new(raw.cycle_ms, raw.on_ms)
    }
}

impl From<CsatConfig> for RawCsat {
    fn from(c: CsatConfig) -> Self {
        RawCsat {
            cycle_ms: c.cycle_ms,
            on_ms: c.on_ms,
        }
    }
}
