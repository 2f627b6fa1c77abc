//! Experiment drivers that wire the codec, channel simulator and receiver
//! together and tabulate the results.

mod link;

pub use link::{
    knee, last_failing_power, random_frame, run_ed_sweep, run_frame, run_link_sweep,
    simulate_frame, trial_rng, write_link_csv, ExperimentSpec, FrameTrial, LinkPoint, LinkSetup,
};

use crate::codec::CodecError;
use crate::demod::DemodError;
use crate::phy::PhyError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("experiment configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error(transparent)]
    Demod(#[from] DemodError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
