//! Closed-form data rate of the air interface and the airtime it leaves to
//! WiFi, for 20 ms symbols with `k` extra 1 ms punctures among 18 positions.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::codec::{modulation_capacity, CodecError};

pub const SYMBOL_MS: f64 = 20.0;
pub const MANDATORY_PUNCTURE_MS: f64 = 2.0;
pub const EXTRA_PUNCTURE_MS: f64 = 1.0;
pub const POSITIONS: u32 = 18;
/// Longest WiFi frame that still fits; a frame started later than this
/// before the end of a gap would collide with LTE.
pub const GUARD_MS: f64 = 0.384;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalyticsError {
    #[error("duty cycle {0} outside [0, 1]")]
    Duty(f64),
    #[error("cycle length must be positive")]
    Cycle,
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsPoint {
    pub cycle_ms: f64,
    pub duty: f64,
    pub k: u32,
    pub rate_bps: f64,
    pub wifi_airtime: f64,
}

/// Split of one CSAT cycle, as fractions of the cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AirtimeBreakdown {
    /// Usable by WiFi: OFF time and puncture time minus the guard.
    pub wifi: f64,
    /// LTE transmissions.
    pub lte: f64,
    /// Puncture time lost to the guard.
    pub guard: f64,
}

fn check(cycle_ms: f64, duty: f64) -> Result<(), AnalyticsError> {
    if !(cycle_ms > 0.0) {
        return Err(AnalyticsError::Cycle);
    }
    if !(0.0..=1.0).contains(&duty) {
        return Err(AnalyticsError::Duty(duty));
    }
    Ok(())
}

/// Whole symbols per ON phase. The trailing mandatory puncture of the last
/// symbol may fall into the OFF phase.
pub fn symbols_per_cycle(cycle_ms: f64, duty: f64) -> u32 {
    let on = cycle_ms * duty;
    ((on + MANDATORY_PUNCTURE_MS + 1e-9) / SYMBOL_MS).floor().max(0.0) as u32
}

/// Bits carried per cycle divided by the cycle length.
pub fn ctc_data_rate(cycle_ms: f64, duty: f64, k: u32) -> Result<f64, AnalyticsError> {
    check(cycle_ms, duty)?;
    let bits = modulation_capacity(POSITIONS, k)?.bits_per_symbol;
    Ok(symbols_per_cycle(cycle_ms, duty) as f64 * bits as f64 / (cycle_ms / 1000.0))
}

/// Rate with symbols sent back to back, no OFF phase at all.
pub fn continuous_rate_ceiling(k: u32) -> Result<f64, AnalyticsError> {
    let bits = modulation_capacity(POSITIONS, k)?.bits_per_symbol;
    Ok(bits as f64 / (SYMBOL_MS / 1000.0))
}

/// Worst-case split of a cycle between WiFi, LTE and guard loss.
pub fn airtime_breakdown(cycle_ms: f64, duty: f64, k: u32) -> Result<AirtimeBreakdown, AnalyticsError> {
    check(cycle_ms, duty)?;
    modulation_capacity(POSITIONS, k)?;
    let on = cycle_ms * duty;
    let off = cycle_ms - on;
    let mut credit = 0.0;
    let mut guard = 0.0;
    let mut gap_in_on = 0.0;
    let mut charge = |len: f64| {
        if len > 0.0 {
            let g = len.min(GUARD_MS);
            guard += g;
            credit += len - g;
            gap_in_on += len;
        }
    };
    for s in 0..symbols_per_cycle(cycle_ms, duty) {
        let start = s as f64 * SYMBOL_MS;
        for _ in 0..k {
            charge(EXTRA_PUNCTURE_MS);
        }
        let p0 = start + SYMBOL_MS - MANDATORY_PUNCTURE_MS;
        charge((on.min(p0 + MANDATORY_PUNCTURE_MS) - p0).max(0.0));
    }
    Ok(AirtimeBreakdown {
        wifi: (off + credit) / cycle_ms,
        lte: (on - gap_in_on) / cycle_ms,
        guard: guard / cycle_ms,
    })
}

pub fn wifi_airtime(cycle_ms: f64, duty: f64, k: u32) -> Result<f64, AnalyticsError> {
    Ok(airtime_breakdown(cycle_ms, duty, k)?.wifi)
}

pub fn analytics_point(cycle_ms: f64, duty: f64, k: u32) -> Result<AnalyticsPoint, AnalyticsError> {
    Ok(AnalyticsPoint {
        cycle_ms,
        duty,
        k,
        rate_bps: ctc_data_rate(cycle_ms, duty, k)?,
        wifi_airtime: wifi_airtime(cycle_ms, duty, k)?,
    })
}

/// One row per (cycle, duty, k), in that nesting order.
pub fn rate_airtime_table(
    cycles_ms: &[f64],
    duties: &[f64],
    ks: impl IntoIterator<Item = u32> + Clone,
) -> Result<Vec<AnalyticsPoint>, AnalyticsError> {
    let mut out = Vec::new();
    for &c in cycles_ms {
        for &d in duties {
            for k in ks.clone() {
                out.push(analytics_point(c, d, k)?);
            }
        }
    }
    Ok(out)
}

/// Default table: cycles 40/80/160 ms, duties 24 %, 50 % and 90 %, k = 0..=9.
pub fn default_table() -> Vec<AnalyticsPoint> {
    rate_airtime_table(&[40.0, 80.0, 160.0], &[0.24, 0.5, 0.9], 0..=9)
        .expect("default grid is valid")
}

/// Writes `cycle_ms, duty, k, rate_bps, wifi_airtime`.
pub fn write_analytics_csv<W: Write>(w: W, points: &[AnalyticsPoint]) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    for p in points {
        wr.serialize(p)?;
    }
    wr.flush()?;
    Ok(())
}
