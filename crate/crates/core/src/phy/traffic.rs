//! WiFi frame traces produced by a simplified DCF (CSMA/CA) transmitter.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::waveform::{Waveform, TICK_US};
use super::PhyError;

const DIFS_US: f64 = 34.0;
const SLOT_US: f64 = 9.0;
const SIFS_US: f64 = 16.0;
const ACK_US: f64 = 44.0;
const CW_MIN: u32 = 15;

/// How the sampling node is involved in a frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    /// Sent by the sampling node.
    OwnTx,
    /// Addressed to the sampling node.
    Rx,
    /// Between other stations; the sampling node only overhears it.
    Overheard,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WifiFrame {
    pub start_us: f64,
    pub duration_us: f64,
    pub kind: FrameKind,
    /// Power of the frame at the sampling node.
    pub power_dbm: f64,
}

impl WifiFrame {
    pub fn end_us(&self) -> f64 {
        self.start_us + self.duration_us
    }
}

/// Time-ordered, non-overlapping WiFi frames.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrafficTrace {
    pub frames: Vec<WifiFrame>,
}

impl TrafficTrace {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Fraction of `[0, horizon_us)` occupied by frames of `kind`.
    pub fn airtime(&self, kind: FrameKind, horizon_us: f64) -> f64 {
        self.frames
            .iter()
            .filter(|f| f.kind == kind)
            .map(|f| (f.end_us().min(horizon_us) - f.start_us).max(0.0))
            .sum::<f64>()
            / horizon_us
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficLoad {
    /// Poisson frame arrivals.
    Light,
    /// Backlogged transmitter, frames back to back with contention gaps.
    High,
}

/// Which transmitter carries the traffic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficSource {
    /// A neighbouring AP; its data frames and their ACKs are overheard.
    Background,
    /// The sampling node itself sends downlink data and receives ACKs.
    SamplingNode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficConfig {
    pub load: TrafficLoad,
    pub source: TrafficSource,
    pub frame_us: f64,
    /// Poisson arrival rate under light load; 10 Mbit/s of 1500 byte frames.
    pub arrival_rate_fps: f64,
    /// Share of frames longer than `frame_us`; their length is uniform in
    /// `[frame_us, long_frame_max_us]`.
    pub long_frame_prob: f64,
    pub long_frame_max_us: f64,
    /// ED threshold of a background AP.
    pub background_ed_dbm: f64,
    /// How much weaker the LTE signal is at the background AP than at the
    /// sampling node.
    pub background_offset_db: f64,
    /// Power of background frames at the sampling node.
    pub background_power_dbm: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            load: TrafficLoad::Light,
            source: TrafficSource::Background,
            frame_us: 384.0,
            arrival_rate_fps: 10e6 / (1500.0 * 8.0),
            long_frame_prob: 0.03,
            long_frame_max_us: 2400.0,
            background_ed_dbm: -62.0,
            background_offset_db: 5.0,
            background_power_dbm: -45.0,
        }
    }
}

/// Link-experiment scenario: which WiFi traffic shares the channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Clear,
    BackgroundLight,
    BackgroundHigh,
    ApdlLight,
    ApdlHigh,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Clear,
        Scenario::BackgroundLight,
        Scenario::BackgroundHigh,
        Scenario::ApdlLight,
        Scenario::ApdlHigh,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Clear => "clear",
            Scenario::BackgroundLight => "background-light",
            Scenario::BackgroundHigh => "background-high",
            Scenario::ApdlLight => "apdl-light",
            Scenario::ApdlHigh => "apdl-high",
        }
    }

    /// Traffic configuration on top of `base`, or `None` for a clear channel.
    pub fn traffic(&self, base: TrafficConfig) -> Option<TrafficConfig> {
        let (load, source) = match self {
            Scenario::Clear => return None,
            Scenario::BackgroundLight => (TrafficLoad::Light, TrafficSource::Background),
            Scenario::BackgroundHigh => (TrafficLoad::High, TrafficSource::Background),
            Scenario::ApdlLight => (TrafficLoad::Light, TrafficSource::SamplingNode),
            Scenario::ApdlHigh => (TrafficLoad::High, TrafficSource::SamplingNode),
        };
        Some(TrafficConfig {
            load,
            source,
            ..base
        })
    }
}

impl std::str::FromStr for Scenario {
    type Err = PhyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| PhyError::Config(format!("unknown scenario '{s}'")))
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The medium as sensed by the WiFi transmitter: busy whenever the LTE cell
/// is ON and its power reaches the transmitter's ED threshold.
struct Medium<'a> {
    on: &'a [bool],
    senses_lte: bool,
}

impl Medium<'_> {
    fn busy_tick(&self, tick: usize) -> bool {
        self.senses_lte && self.on.get(tick).copied().unwrap_or(false)
    }

    fn idle_from(&self, mut t: f64) -> f64 {
        let mut tick = (t / TICK_US as f64) as usize;
        while self.busy_tick(tick) {
            tick += 1;
            t = (tick as u64 * TICK_US) as f64;
        }
        t
    }

    fn first_busy_in(&self, a: f64, b: f64) -> Option<f64> {
        if !self.senses_lte {
            return None;
        }
        let first = (a / TICK_US as f64) as usize;
        let last = (b / TICK_US as f64).ceil() as usize;
        (first..last)
            .find(|&tick| self.busy_tick(tick))
            .map(|tick| a.max((tick as u64 * TICK_US) as f64))
    }

    /// Start of a transmission that became ready at `t`: DIFS of idle
    /// medium, then `slots` idle backoff slots, freezing while busy.
    fn access(&self, mut t: f64, mut slots: u32) -> f64 {
        'outer: loop {
            t = self.idle_from(t);
            if let Some(b) = self.first_busy_in(t, t + DIFS_US) {
                t = b;
                continue;
            }
            t += DIFS_US;
            while slots > 0 {
                if let Some(b) = self.first_busy_in(t, t + SLOT_US) {
                    t = b;
                    continue 'outer;
                }
                t += SLOT_US;
                slots -= 1;
            }
            if self.busy_tick((t / TICK_US as f64) as usize) {
                continue;
            }
            return t;
        }
    }
}

/// Generates WiFi traffic over the span of `waveform`.
///
/// `lte_power_dbm` is the LTE power at the sampling node and `node_ed_dbm`
/// the node's own ED threshold. A background AP senses the LTE cell
/// `background_offset_db` weaker and compares it with its own threshold.
pub fn generate_traffic<R: Rng>(
    cfg: &TrafficConfig,
    waveform: &Waveform,
    lte_power_dbm: f64,
    node_ed_dbm: f64,
    rng: &mut R,
) -> Result<TrafficTrace, PhyError> {
    if !(cfg.frame_us > 0.0) || !(cfg.long_frame_max_us >= cfg.frame_us) {
        return Err(PhyError::Config(
            "WiFi frame durations must be positive and long frames no shorter than regular ones".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cfg.long_frame_prob) {
        return Err(PhyError::Config("long-frame probability outside [0, 1]".into()));
    }
    let senses_lte = match cfg.source {
        TrafficSource::Background => lte_power_dbm - cfg.background_offset_db >= cfg.background_ed_dbm,
        TrafficSource::SamplingNode => lte_power_dbm >= node_ed_dbm,
    };
    let medium = Medium {
        on: &waveform.on,
        senses_lte,
    };
    let (data_kind, ack_kind) = match cfg.source {
        TrafficSource::Background => (FrameKind::Overheard, FrameKind::Overheard),
        TrafficSource::SamplingNode => (FrameKind::OwnTx, FrameKind::Rx),
    };
    let horizon = waveform.duration_us() as f64;
    let mut frames = Vec::new();
    let mut t = 0.0;

    let arrivals = match cfg.load {
        TrafficLoad::Light => {
            if !(cfg.arrival_rate_fps > 0.0) {
                return Err(PhyError::Config("arrival rate must be positive".into()));
            }
            Some(Exp::new(cfg.arrival_rate_fps / 1e6).expect("positive rate"))
        }
        TrafficLoad::High => None,
    };
    let mut next_arrival = 0.0;

    loop {
        let ready = match &arrivals {
            Some(exp) => {
                next_arrival += exp.sample(rng);
                next_arrival.max(t)
            }
            None => t,
        };
        if ready >= horizon {
            break;
        }
        let start = medium.access(ready, rng.random_range(0..=CW_MIN));
        if start >= horizon {
            break;
        }
        let duration_us = if rng.random_bool(cfg.long_frame_prob) {
            rng.random_range(cfg.frame_us..=cfg.long_frame_max_us)
        } else {
            cfg.frame_us
        };
        let data = WifiFrame {
            start_us: start,
            duration_us,
            kind: data_kind,
            power_dbm: cfg.background_power_dbm,
        };
        let ack = WifiFrame {
            start_us: data.end_us() + SIFS_US,
            duration_us: ACK_US,
            kind: ack_kind,
            power_dbm: cfg.background_power_dbm,
        };
        t = ack.end_us();
        frames.push(data);
        frames.push(ack);
    }
    Ok(TrafficTrace { frames })
}
