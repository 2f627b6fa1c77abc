//! What the WiFi NIC reports: the share of each sampling window spent in
//! the idle, receive, transmit and interference MAC states.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::channel::{dbm_to_mw, mw_to_dbm, noise_floor_dbm};
use super::traffic::{FrameKind, TrafficTrace};
use super::waveform::{Waveform, TICK_US};
use super::PhyError;

pub const SAMPLE_US: u64 = 250;
pub const TICKS_PER_SAMPLE: usize = (SAMPLE_US / TICK_US) as usize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacStateSample {
    pub t_us: u64,
    pub idle: f64,
    pub rx: f64,
    pub tx: f64,
    pub intf: f64,
}

/// One LTE transmitter and its power at the sampling node.
#[derive(Clone, Copy, Debug)]
pub struct LteSource<'a> {
    pub waveform: &'a Waveform,
    pub rx_power_dbm: f64,
}

/// Energy detector of the sampling NIC.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReceiverFrontEnd {
    pub noise_floor_dbm: f64,
    pub ed_threshold_dbm: f64,
    /// Standard deviation of the per-tick energy estimate in dB.
    pub ed_jitter_db: f64,
    /// An overheard WiFi frame is decoded only while its power exceeds the
    /// concurrent LTE power plus noise by this much.
    pub decode_sinr_db: f64,
}

impl Default for ReceiverFrontEnd {
    fn default() -> Self {
        Self {
            noise_floor_dbm: noise_floor_dbm(),
            ed_threshold_dbm: -62.0,
            ed_jitter_db: 1.0,
            decode_sinr_db: 10.0,
        }
    }
}

/// Samples the MAC-state fractions over the span of the longest source.
///
/// Time covered by the node's own frames goes to `tx`, frames addressed to
/// it go to `rx`. Overheard frames go to `rx` only when they can be decoded
/// over the LTE signal. The remainder of a tick is `intf` when the summed
/// LTE and noise energy (plus estimation jitter) reaches the ED threshold,
/// and `idle` otherwise.
pub fn sample_mac_states<R: Rng>(
    sources: &[LteSource<'_>],
    traffic: &TrafficTrace,
    front_end: &ReceiverFrontEnd,
    rng: &mut R,
) -> Vec<MacStateSample> {
    let ticks = sources.iter().map(|s| s.waveform.on.len()).max().unwrap_or(0);
    let mut tx = vec![0.0f64; ticks];
    let mut rx = vec![0.0f64; ticks];
    let mut overheard = vec![0.0f64; ticks];
    let mut overheard_dbm = vec![f64::NEG_INFINITY; ticks];
    let tick_us = TICK_US as f64;
    for f in &traffic.frames {
        let acc = match f.kind {
            FrameKind::OwnTx => &mut tx,
            FrameKind::Rx => &mut rx,
            FrameKind::Overheard => &mut overheard,
        };
        let first = (f.start_us / tick_us) as usize;
        let last = ((f.end_us() / tick_us).ceil() as usize).min(ticks);
        for (tick, slot) in acc.iter_mut().enumerate().take(last).skip(first) {
            let a = (tick as f64 * tick_us).max(f.start_us);
            let b = ((tick + 1) as f64 * tick_us).min(f.end_us());
            *slot += (b - a).max(0.0) / tick_us;
        }
        if f.kind == FrameKind::Overheard {
            for p in overheard_dbm.iter_mut().take(last).skip(first) {
                *p = p.max(f.power_dbm);
            }
        }
    }

    let noise_mw = dbm_to_mw(front_end.noise_floor_dbm);
    let source_mw: Vec<f64> = sources.iter().map(|s| dbm_to_mw(s.rx_power_dbm)).collect();
    let jitter = (front_end.ed_jitter_db > 0.0)
        .then(|| Normal::new(0.0, front_end.ed_jitter_db).expect("positive jitter"));

    let mut out = Vec::with_capacity(ticks / TICKS_PER_SAMPLE);
    for w in 0..ticks / TICKS_PER_SAMPLE {
        let mut s = MacStateSample {
            t_us: w as u64 * SAMPLE_US,
            idle: 0.0,
            rx: 0.0,
            tx: 0.0,
            intf: 0.0,
        };
        for tick in w * TICKS_PER_SAMPLE..(w + 1) * TICKS_PER_SAMPLE {
            // a tick holds at most one frame's worth of WiFi time
            let mut mw = noise_mw;
            for (src, p) in sources.iter().zip(&source_mw) {
                if src.waveform.on.get(tick).copied().unwrap_or(false) {
                    mw += p;
                }
            }
            let t = tx[tick].min(1.0);
            let mut r = rx[tick].min(1.0 - t);
            if overheard[tick] > 0.0
                && overheard_dbm[tick] - mw_to_dbm(mw) >= front_end.decode_sinr_db
            {
                r = (r + overheard[tick]).min(1.0 - t);
            }
            let rest = 1.0 - t - r;
            let sensed = mw_to_dbm(mw) + jitter.as_ref().map_or(0.0, |n| n.sample(rng));
            if sensed >= front_end.ed_threshold_dbm {
                s.intf += rest;
            } else {
                s.idle += rest;
            }
            s.tx += t;
            s.rx += r;
        }
        let n = TICKS_PER_SAMPLE as f64;
        s.idle /= n;
        s.rx /= n;
        s.tx /= n;
        s.intf /= n;
        out.push(s);
    }
    out
}

pub fn write_samples_csv<W: Write>(w: W, samples: &[MacStateSample]) -> Result<(), PhyError> {
    let mut wr = csv::Writer::from_writer(w);
    for s in samples {
        wr.serialize(s)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_samples_csv<R: Read>(r: R) -> Result<Vec<MacStateSample>, PhyError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        let s: MacStateSample = rec?;
        let sum = s.idle + s.rx + s.tx + s.intf;
        if (sum - 1.0).abs() > 1e-6 {
            return Err(PhyError::Domain(format!(
                "sample at {} us: state fractions sum to {sum}",
                s.t_us
            )));
        }
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{AirSymbol, CodingScheme};
    use crate::phy::{generate_traffic, generate_waveform, CsatConfig, Scenario, TrafficConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn waveform() -> Waveform {
        let scheme = CodingScheme::baseline();
        let syms: Vec<AirSymbol> = (0..8).map(AirSymbol::Data).collect();
        generate_waveform(CsatConfig::new(80, 19.0).unwrap(), &scheme, &syms).unwrap()
    }

    fn quiet() -> ReceiverFrontEnd {
        ReceiverFrontEnd {
            ed_jitter_db: 0.0,
            ..ReceiverFrontEnd::default()
        }
    }

    #[test]
    fn strong_lte_on_clean_channel() {
        let wf = waveform();
        let src = [LteSource { waveform: &wf, rx_power_dbm: -50.0 }];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let samples = sample_mac_states(&src, &TrafficTrace::empty(), &quiet(), &mut rng);
        for s in &samples {
            let tick = s.t_us as usize / TICK_US as usize;
            let on = wf.on[tick..tick + TICKS_PER_SAMPLE].iter().all(|&b| b);
            let off = wf.on[tick..tick + TICKS_PER_SAMPLE].iter().all(|&b| !b);
            if on {
                assert_eq!(s.intf, 1.0);
            }
            if off {
                assert_eq!(s.idle, 1.0);
            }
        }
    }

    #[test]
    fn weak_lte_is_invisible() {
        let wf = waveform();
        let src = [LteSource { waveform: &wf, rx_power_dbm: -95.0 }];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let samples = sample_mac_states(&src, &TrafficTrace::empty(), &quiet(), &mut rng);
        assert!(samples.iter().all(|s| s.intf == 0.0 && s.idle == 1.0));
    }

    #[test]
    fn own_transmissions_hide_lte() {
        let wf = waveform();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = Scenario::ApdlHigh.traffic(TrafficConfig::default()).unwrap();
        // LTE below the node's ED: the node keeps transmitting through ON time
        let trace = generate_traffic(&cfg, &wf, -50.0, -40.0, &mut rng).unwrap();
        let src = [LteSource { waveform: &wf, rx_power_dbm: -50.0 }];
        let samples = sample_mac_states(&src, &trace, &quiet(), &mut rng);
        let on_samples: Vec<&MacStateSample> = samples
            .iter()
            .filter(|s| {
                let tick = s.t_us as usize / TICK_US as usize;
                wf.on[tick..tick + TICKS_PER_SAMPLE].iter().all(|&b| b)
            })
            .collect();
        let tx = on_samples.iter().map(|s| s.tx).sum::<f64>() / on_samples.len() as f64;
        let intf = on_samples.iter().map(|s| s.intf).sum::<f64>() / on_samples.len() as f64;
        assert!(tx > intf, "tx {tx} intf {intf}");
    }

    #[test]
    fn fractions_sum_to_one_and_are_deterministic() {
        let wf = waveform();
        let cfg = Scenario::BackgroundHigh.traffic(TrafficConfig::default()).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let trace = generate_traffic(&cfg, &wf, -70.0, -62.0, &mut rng).unwrap();
            let src = [LteSource { waveform: &wf, rx_power_dbm: -61.0 }];
            sample_mac_states(&src, &trace, &ReceiverFrontEnd::default(), &mut rng)
        };
        let a = run(11);
        for s in &a {
            assert!((s.idle + s.rx + s.tx + s.intf - 1.0).abs() < 1e-9);
        }
        assert_eq!(a, run(11));
    }

    #[test]
    fn csv_roundtrip() {
        let wf = waveform();
        let src = [LteSource { waveform: &wf, rx_power_dbm: -55.0 }];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let samples = sample_mac_states(&src, &TrafficTrace::empty(), &quiet(), &mut rng);
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &samples).unwrap();
        assert!(buf.starts_with(b"t_us,idle,rx,tx,intf\n"));
        assert_eq!(read_samples_csv(&buf[..]).unwrap(), samples);
    }
}
