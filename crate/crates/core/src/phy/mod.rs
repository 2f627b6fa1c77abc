//! LTE-U waveform synthesis and the WiFi NIC's view of the medium.

mod channel;
mod csat;
mod ed;
mod sampler;
mod traffic;
mod waveform;

pub use channel::{
    dbm_to_mw, draw_shadowing, mw_to_dbm, noise_floor_dbm, PathLossModel, RadioLink,
    ShadowingField, CHANNEL_BANDWIDTH_HZ, THERMAL_NOISE_DBM_PER_HZ, WIFI_NOISE_FIGURE_DB,
};
pub use csat::{CsatConfig, ALLOWED_CYCLES_MS, MAX_DUTY};
pub use ed::{EdRegisterMap, DEFAULT_THETA};
pub use sampler::{
    read_samples_csv, sample_mac_states, write_samples_csv, LteSource, MacStateSample,
    ReceiverFrontEnd, SAMPLE_US, TICKS_PER_SAMPLE,
};
pub use traffic::{
    generate_traffic, FrameKind, Scenario, TrafficConfig, TrafficLoad, TrafficSource,
    TrafficTrace, WifiFrame,
};
pub use waveform::{
    generate_waveform, GapKind, ScheduledGap, Waveform, WaveformBuilder, FILLER_PUNCTURE_MS,
    MAX_ON_RUN_MS, TICKS_PER_MS, TICK_US,
};

use crate::codec::CodecError;

#[derive(Debug, thiserror::Error)]
pub enum PhyError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("scheduling error: {0}")]
    Scheduling(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
