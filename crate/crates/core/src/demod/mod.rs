//! Receiver: cleans the interference share reported by the NIC, finds
//! frame preambles by cross-correlation and decides symbols by template
//! matching.

mod clean;
mod metrics;
mod receiver;

use std::io::Write;

pub use clean::{clean_sample, clean_signal, CleaningThresholds};
pub use metrics::{measure_fer_ser, wilson_interval, ErrorRates, SentFrame};
pub use receiver::{
    demodulate, demodulate_cleaned, detect_preamble, DecodedFrame, FrameStatus, Receiver,
    ReceiverConfig, ReceiverSettings, SyncEvent, CHUNK_SAMPLES,
};

use crate::codec::CodecError;
use crate::phy::{PhyError, SAMPLE_US};

#[derive(Debug, thiserror::Error)]
pub enum DemodError {
    #[error("receiver configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Writes decoded frames as `frame_idx, sync_t, fields_ok, bits_hex`.
///
/// `sync_t` is the preamble start in µs; `fields_ok` has one character per
/// field (network ID first), `1` when its CRC passed.
pub fn write_frames_csv<W: Write>(w: W, frames: &[DecodedFrame]) -> Result<(), DemodError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["frame_idx", "sync_t", "fields_ok", "bits_hex"])?;
    for (i, f) in frames.iter().enumerate() {
        let mut ok = String::with_capacity(7);
        ok.push(if f.fields.network_id.is_some() { '1' } else { '0' });
        for c in &f.fields.clusters {
            ok.push(if c.is_some() { '1' } else { '0' });
        }
        wr.write_record([
            i.to_string(),
            (f.sync_index * SAMPLE_US).to_string(),
            ok,
            f.bits_hex(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
