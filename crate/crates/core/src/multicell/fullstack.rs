//! Slow cross-check of the threshold model: every cell sends its real frame
//! through the waveform generator, the summed signal goes through the MAC
//! sampler and the receiver decodes whatever survives.

use std::net::Ipv4Addr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::clusters::ClusterPlan;
use super::hex::Deployment;
use super::proximity::{ProximityObservation, RadioEnvironment};
use super::MulticellError;
use crate::codec::{build_frame, CodingScheme, CtcFrame};
use crate::demod::{demodulate, ReceiverConfig};
use crate::phy::{
    sample_mac_states, CsatConfig, LteSource, ReceiverFrontEnd, TrafficTrace, WaveformBuilder,
};

/// Cells this far below the noise floor are left out of the sum.
const NEGLIGIBLE_DB: f64 = 20.0;

#[derive(Clone, Debug)]
pub struct FullStack {
    pub scheme: CodingScheme,
    pub csat: CsatConfig,
    pub network_id: Ipv4Addr,
    pub ed_jitter_db: f64,
    pub seed: u64,
}

impl Default for FullStack {
    fn default() -> Self {
        Self {
            scheme: CodingScheme::short_three_bit(),
            csat: CsatConfig::new(40, 12.0).expect("valid CSAT"),
            network_id: Ipv4Addr::new(192, 0, 2, 1),
            ed_jitter_db: 1.0,
            seed: 1,
        }
    }
}

impl FullStack {
    /// Decoded fields at `location` when all cells transmit their frames in
    /// aligned CSAT cycles and the receiver's ED threshold equals the
    /// sensitivity.
    pub fn observe(
        &self,
        location: (f64, f64),
        dep: &Deployment,
        plan: &ClusterPlan,
        env: &RadioEnvironment,
    ) -> Result<ProximityObservation, MulticellError> {
        let rx_cfg = ReceiverConfig::with_defaults(self.scheme.clone(), self.csat)?;
        let powers = env.received_powers(dep, location);
        let mut waveforms = Vec::new();
        for (cell, &p) in dep.cells.iter().zip(&powers) {
            if p < env.noise_floor_dbm - NEGLIGIBLE_DB {
                continue;
            }
            let clusters = plan.cell_fields(cell.id).ok_or_else(|| {
                MulticellError::Config(format!("cell {} has no cluster assignment", cell.id))
            })?;
            let frame = CtcFrame {
                network_id: self.network_id,
                clusters,
            };
            let stream = build_frame(&frame, &self.scheme)?;
            let mut b = WaveformBuilder::new(self.csat, &self.scheme);
            b.idle_cycles(2)?.symbols(&stream.symbols)?.idle_cycles(1)?;
            waveforms.push((b.build(), p));
        }
        let sources: Vec<LteSource<'_>> = waveforms
            .iter()
            .map(|(wf, p)| LteSource {
                waveform: wf,
                rx_power_dbm: *p,
            })
            .collect();
        let fe = ReceiverFrontEnd {
            noise_floor_dbm: env.noise_floor_dbm,
            ed_threshold_dbm: env.sensitivity_dbm,
            ed_jitter_db: self.ed_jitter_db,
            ..ReceiverFrontEnd::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let samples = sample_mac_states(&sources, &TrafficTrace::empty(), &fe, &mut rng);
        let mut obs = ProximityObservation::default();
        for f in demodulate(&samples, &rx_cfg) {
            if f.fields.network_id == Some(self.network_id) {
                obs.network_id = true;
            }
            obs.fields.extend(f.fields.observations());
        }
        Ok(obs)
    }
}
