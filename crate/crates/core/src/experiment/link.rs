//! Link experiments: frames sent through the simulated channel and decoded
//! by the receiver, swept over receive power, scenario and ED threshold.

use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{build_frame, AirSymbol, CodingScheme, CtcFrame, CLUSTER_SLOTS};
use crate::demod::{
    demodulate, measure_fer_ser, DecodedFrame, ErrorRates, ReceiverConfig, ReceiverSettings,
    SentFrame,
};
use crate::phy::{
    generate_traffic, sample_mac_states, CsatConfig, EdRegisterMap, LteSource, MacStateSample,
    ReceiverFrontEnd, Scenario, TrafficConfig, TrafficTrace, WaveformBuilder, DEFAULT_THETA,
    TICKS_PER_SAMPLE,
};

use super::ExperimentError;

/// Fixed parts of a link experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkSetup {
    pub scheme: CodingScheme,
    pub csat: CsatConfig,
    pub receiver: ReceiverSettings,
    pub traffic: TrafficConfig,
    pub ed_map: EdRegisterMap,
    /// Receiver front end; its ED threshold is replaced by the mapped θ.
    pub front_end: ReceiverFrontEnd,
    /// Idle cycles before each frame are drawn from `1..=max_lead_cycles`,
    /// then up to one cycle of samples is cut from the start.
    pub max_lead_cycles: usize,
}

impl Default for LinkSetup {
    fn default() -> Self {
        Self {
            scheme: CodingScheme::short_three_bit(),
            csat: CsatConfig::new(40, 12.0).expect("valid CSAT"),
            receiver: ReceiverSettings::default(),
            traffic: TrafficConfig::default(),
            ed_map: EdRegisterMap::default(),
            front_end: ReceiverFrontEnd::default(),
            max_lead_cycles: 10,
        }
    }
}

impl LinkSetup {
    pub fn receiver_config(&self) -> Result<ReceiverConfig, ExperimentError> {
        Ok(ReceiverConfig::new(self.scheme.clone(), self.csat, self.receiver)?)
    }

    pub fn front_end(&self, theta: i32) -> Result<ReceiverFrontEnd, ExperimentError> {
        Ok(ReceiverFrontEnd {
            ed_threshold_dbm: self.ed_map.map(theta)?,
            ..self.front_end
        })
    }
}

/// One simulated transmission: what was sent and what the receiver saw.
#[derive(Clone, Debug)]
pub struct FrameTrial {
    pub sent: SentFrame,
    pub samples: Vec<MacStateSample>,
    pub traffic: TrafficTrace,
}

/// A random frame: random network ID and cluster IDs.
pub fn random_frame<R: Rng>(rng: &mut R) -> CtcFrame {
    let mut clusters = [0u16; CLUSTER_SLOTS];
    clusters.iter_mut().for_each(|c| *c = rng.random());
    CtcFrame {
        network_id: Ipv4Addr::from(rng.random::<u32>()),
        clusters,
    }
}

/// Sends `frame` once at `rx_power_dbm` under `scenario` and returns the
/// MAC-state samples seen by the receiver, starting at a random offset.
pub fn simulate_frame<R: Rng>(
    setup: &LinkSetup,
    scenario: Scenario,
    rx_power_dbm: f64,
    front_end: &ReceiverFrontEnd,
    frame: &CtcFrame,
    rng: &mut R,
) -> Result<FrameTrial, ExperimentError> {
    let stream = build_frame(frame, &setup.scheme)?;
    let lead = rng.random_range(1..=setup.max_lead_cycles.max(1));
    let mut builder = WaveformBuilder::new(setup.csat, &setup.scheme);
    builder.idle_cycles(lead)?;
    builder.symbols(&stream.symbols)?;
    builder.idle_cycles(1)?;
    let wf = builder.build();
    let preamble_tick = wf.symbol_starts[0];

    let traffic = match scenario.traffic(setup.traffic) {
        Some(cfg) => generate_traffic(&cfg, &wf, rx_power_dbm, front_end.ed_threshold_dbm, rng)?,
        None => TrafficTrace::empty(),
    };
    let src = [LteSource {
        waveform: &wf,
        rx_power_dbm,
    }];
    let mut samples = sample_mac_states(&src, &traffic, front_end, rng);
    let window = wf.cycle_ticks / TICKS_PER_SAMPLE;
    let cut = rng.random_range(0..window);
    samples.drain(..cut);
    Ok(FrameTrial {
        sent: SentFrame {
            sync_index: (preamble_tick / TICKS_PER_SAMPLE - cut) as u64,
            symbols: stream
                .symbols
                .iter()
                .filter_map(|s| match s {
                    AirSymbol::Data(v) => Some(*v),
                    AirSymbol::Preamble(_) => None,
                })
                .collect(),
        },
        samples,
        traffic,
    })
}

/// Sends and decodes one frame, returning its error counts.
pub fn run_frame<R: Rng>(
    setup: &LinkSetup,
    rx_cfg: &ReceiverConfig,
    scenario: Scenario,
    rx_power_dbm: f64,
    front_end: &ReceiverFrontEnd,
    rng: &mut R,
) -> Result<(ErrorRates, Vec<DecodedFrame>), ExperimentError> {
    let frame = random_frame(rng);
    let trial = simulate_frame(setup, scenario, rx_power_dbm, front_end, &frame, rng)?;
    let decoded = demodulate(&trial.samples, rx_cfg);
    let tolerance = rx_cfg.window() as u64 / 2;
    Ok((measure_fer_ser(&[trial.sent], &decoded, tolerance), decoded))
}

/// Which powers, scenario and ED setting to sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    /// Receive powers in dBm, ascending.
    pub powers_dbm: Vec<f64>,
    #[serde(default = "default_theta")]
    pub theta: i32,
    #[serde(default)]
    pub seed: u64,
    /// Frames per power point.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

fn default_theta() -> i32 {
    DEFAULT_THETA
}

fn default_repetitions() -> usize {
    200
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.repetitions == 0 {
            return Err(ExperimentError::Config("at least one repetition is needed".into()));
        }
        if self.powers_dbm.is_empty() {
            return Err(ExperimentError::Config("empty power sweep".into()));
        }
        if self.powers_dbm.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(ExperimentError::Config("power sweep must be strictly ascending".into()));
        }
        Ok(())
    }
}

/// Error rates at one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkPoint {
    pub scenario: Scenario,
    pub theta: i32,
    pub ed_dbm: f64,
    pub power_dbm: f64,
    pub rates: ErrorRates,
}

/// Deterministic generator for frame `frame` of sweep point `point`.
pub fn trial_rng(seed: u64, point: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((point << 32) | frame);
    rng
}

/// FER/SER per power point. Points run in parallel; results come back in
/// sweep order and depend only on the seed.
pub fn run_link_sweep(setup: &LinkSetup, spec: &ExperimentSpec) -> Result<Vec<LinkPoint>, ExperimentError> {
    spec.validate()?;
    let rx_cfg = setup.receiver_config()?;
    let fe = setup.front_end(spec.theta)?;
    let theta_tag = (spec.theta as i64 as u64 & 0xffff) << 16;
    spec.powers_dbm
        .par_iter()
        .enumerate()
        .map(|(i, &power)| {
            let mut parts = Vec::with_capacity(spec.repetitions);
            for f in 0..spec.repetitions {
                let mut rng = trial_rng(spec.seed, theta_tag | i as u64, f as u64);
                let (rates, _) = run_frame(setup, &rx_cfg, spec.scenario, power, &fe, &mut rng)?;
                parts.push(rates);
            }
            Ok(LinkPoint {
                scenario: spec.scenario,
                theta: spec.theta,
                ed_dbm: fe.ed_threshold_dbm,
                power_dbm: power,
                rates: ErrorRates::merge(&parts),
            })
        })
        .collect()
}

/// FER table per θ; one sweep per register value.
pub fn run_ed_sweep(
    setup: &LinkSetup,
    spec: &ExperimentSpec,
    thetas: &[i32],
) -> Result<Vec<LinkPoint>, ExperimentError> {
    let mut out = Vec::new();
    for &theta in thetas {
        out.extend(run_link_sweep(setup, &ExperimentSpec { theta, ..spec.clone() })?);
    }
    Ok(out)
}

/// Lowest swept power from which every higher point has FER ≤ `max_fer`.
pub fn knee(points: &[LinkPoint], max_fer: f64) -> Option<f64> {
    let mut sorted: Vec<&LinkPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.power_dbm.total_cmp(&b.power_dbm));
    let mut knee = None;
    for p in sorted.iter().rev() {
        if p.rates.fer <= max_fer {
            knee = Some(p.power_dbm);
        } else {
            break;
        }
    }
    knee
}

/// Highest swept power whose FER is still at least `min_fer`.
pub fn last_failing_power(points: &[LinkPoint], min_fer: f64) -> Option<f64> {
    points
        .iter()
        .filter(|p| p.rates.fer >= min_fer)
        .map(|p| p.power_dbm)
        .max_by(f64::total_cmp)
}

/// Writes `scenario, theta, ed_dbm, power_dbm, frames, fer, fer_lo, fer_hi, ser`.
pub fn write_link_csv<W: std::io::Write>(w: W, points: &[LinkPoint]) -> Result<(), ExperimentError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "scenario", "theta", "ed_dbm", "power_dbm", "frames", "fer", "fer_lo", "fer_hi", "ser",
    ])?;
    for p in points {
        wr.write_record([
            p.scenario.name().to_string(),
            p.theta.to_string(),
            format!("{:.2}", p.ed_dbm),
            format!("{:.2}", p.power_dbm),
            p.rates.frames.to_string(),
            format!("{:.4}", p.rates.fer),
            format!("{:.4}", p.rates.fer_ci.0),
            format!("{:.4}", p.rates.fer_ci.1),
            format!("{:.5}", p.rates.ser),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
