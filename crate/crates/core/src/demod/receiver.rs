//! Preamble synchronization and symbol-by-symbol demodulation of the cleaned
//! interference signal.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{
    frame_symbols, parse_frame_data, AirSymbol, CodingScheme, PartialFrame, PREAMBLE,
};
use crate::phy::{
    generate_waveform, sample_mac_states, CsatConfig, LteSource, MacStateSample,
    ReceiverFrontEnd, TrafficTrace, SAMPLE_US,
};

use super::clean::{clean_sample, clean_signal, CleaningThresholds};
use super::DemodError;

/// Samples per streaming chunk (1 s).
pub const CHUNK_SAMPLES: usize = (1_000_000 / SAMPLE_US) as usize;

/// Tunable receiver parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReceiverSettings {
    pub cleaning: CleaningThresholds,
    /// Preamble threshold as a fraction of the largest attainable correlation.
    pub preamble_fraction: f64,
}

impl Default for ReceiverSettings {
    fn default() -> Self {
        Self {
            cleaning: CleaningThresholds::default(),
            preamble_fraction: 0.75,
        }
    }
}

/// Everything the receiver needs to know about the transmitter.
#[derive(Clone, Debug)]
pub struct ReceiverConfig {
    scheme: CodingScheme,
    csat: CsatConfig,
    settings: ReceiverSettings,
    window: usize,
    frame_len: usize,
    tau_p: f64,
    preamble: Vec<f64>,
    preamble_runs: Vec<(usize, usize, f64)>,
    templates: Vec<Vec<f64>>,
}

impl ReceiverConfig {
    /// Builds the preamble reference and one template per used symbol from
    /// ideal, noise-free renderings of the transmitter's waveform.
    pub fn new(
        scheme: CodingScheme,
        csat: CsatConfig,
        settings: ReceiverSettings,
    ) -> Result<Self, DemodError> {
        settings.cleaning.validate().map_err(DemodError::Config)?;
        if !(settings.preamble_fraction > 0.0 && settings.preamble_fraction <= 1.0) {
            return Err(DemodError::Config(format!(
                "preamble fraction {} outside (0, 1]",
                settings.preamble_fraction
            )));
        }
        if scheme.symbols_per_on_phase(csat.on_ms()) != 1 {
            return Err(DemodError::Config(format!(
                "the receiver expects exactly one {} ms symbol per cycle, a {} ms ON phase holds {}",
                scheme.symbol_duration_ms(),
                csat.on_ms(),
                scheme.symbols_per_on_phase(csat.on_ms())
            )));
        }
        let cycle_us = csat.cycle_ms() as u64 * 1000;
        if cycle_us % SAMPLE_US != 0 {
            return Err(DemodError::Config("cycle is not a whole number of samples".into()));
        }
        let window = (cycle_us / SAMPLE_US) as usize;
        let frame_len = frame_symbols(&scheme)?;

        let pre: Vec<AirSymbol> = PREAMBLE.iter().map(|&p| AirSymbol::Preamble(p)).collect();
        let preamble = ideal_signal(&scheme, csat, &pre)?;
        let templates = (0..scheme.used_symbols())
            .map(|v| ideal_signal(&scheme, csat, &[AirSymbol::Data(v)]))
            .collect::<Result<Vec<_>, _>>()?;

        let max_r: f64 = preamble.iter().map(|p| p.abs() * 0.5).sum();
        let preamble_runs = runs(&preamble);
        Ok(Self {
            scheme,
            csat,
            settings,
            window,
            frame_len,
            tau_p: settings.preamble_fraction * max_r,
            preamble,
            preamble_runs,
            templates,
        })
    }

    pub fn with_defaults(scheme: CodingScheme, csat: CsatConfig) -> Result<Self, DemodError> {
        Self::new(scheme, csat, ReceiverSettings::default())
    }

    pub fn scheme(&self) -> &CodingScheme {
        &self.scheme
    }

    pub fn csat(&self) -> CsatConfig {
        self.csat
    }

    pub fn settings(&self) -> &ReceiverSettings {
        &self.settings
    }

    /// Samples per LTE-U cycle (`W`).
    pub fn window(&self) -> usize {
        self.window
    }

    /// Preamble length in samples (`N = 4W`).
    pub fn preamble_len(&self) -> usize {
        self.preamble.len()
    }

    /// Data symbols per frame (`L`).
    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn tau_p(&self) -> f64 {
        self.tau_p
    }

    pub fn preamble(&self) -> &[f64] {
        &self.preamble
    }

    /// Template of each used symbol, indexed by symbol value.
    pub fn templates(&self) -> &[Vec<f64>] {
        &self.templates
    }
}

/// Cleaned, hard-decided signal of `symbols` sent one per cycle over a
/// perfect channel.
fn ideal_signal(
    scheme: &CodingScheme,
    csat: CsatConfig,
    symbols: &[AirSymbol],
) -> Result<Vec<f64>, DemodError> {
    let wf = generate_waveform(csat, scheme, symbols)?;
    let fe = ReceiverFrontEnd {
        ed_jitter_db: 0.0,
        ..ReceiverFrontEnd::default()
    };
    let src = [LteSource {
        waveform: &wf,
        rx_power_dbm: 0.0,
    }];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let samples = sample_mac_states(&src, &TrafficTrace::empty(), &fe, &mut rng);
    Ok(clean_signal(&samples, &CleaningThresholds::default())
        .into_iter()
        .map(|v| if v >= 0.0 { 0.5 } else { -0.5 })
        .collect())
}

/// Maximal constant runs `(start, end, value)` of a reference signal.
fn runs(signal: &[f64]) -> Vec<(usize, usize, f64)> {
    let mut out: Vec<(usize, usize, f64)> = Vec::new();
    for (i, &v) in signal.iter().enumerate() {
        match out.last_mut() {
            Some(run) if run.2 == v => run.1 = i + 1,
            _ => out.push((i, i + 1, v)),
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameStatus {
    Complete,
    /// The stream ended before all `L` symbols arrived.
    Truncated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodedFrame {
    /// Index of the first preamble sample.
    pub sync_index: u64,
    /// Preamble correlation at synchronization.
    pub peak: f64,
    /// Decoded symbol values, `L` of them for a complete frame.
    pub symbols: Vec<u64>,
    /// Symbol bits, most significant first.
    pub bits: Vec<bool>,
    pub fields: PartialFrame,
    pub status: FrameStatus,
}

impl DecodedFrame {
    pub fn bits_hex(&self) -> String {
        self.bits
            .chunks(4)
            .map(|nib| {
                let v = nib.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32) << (4 - nib.len());
                char::from_digit(v, 16).expect("nibble")
            })
            .collect()
    }
}

/// A preamble detection or re-synchronization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyncEvent {
    /// Index of the first sample of the matched preamble.
    pub sync_index: u64,
    pub correlation: f64,
    pub resync: bool,
}

/// Sliding history of cleaned samples with prefix sums, so that the
/// correlation with a run-length coded reference costs one term per run.
#[derive(Clone, Debug, Default)]
struct History {
    base: u64,
    values: Vec<f64>,
    prefix: Vec<f64>,
}

impl History {
    fn push(&mut self, v: f64, keep: usize) {
        if self.values.len() >= 4 * keep.max(CHUNK_SAMPLES) {
            let drop = self.values.len() - keep;
            self.values.drain(..drop);
            self.base += drop as u64;
            self.prefix.clear();
        }
        if self.prefix.is_empty() {
            self.prefix.push(0.0);
            let mut acc = 0.0;
            for &x in &self.values {
                acc += x;
                self.prefix.push(acc);
            }
        }
        self.values.push(v);
        let last = *self.prefix.last().expect("prefix starts at zero");
        self.prefix.push(last + v);
    }

    fn len(&self) -> u64 {
        self.base + self.values.len() as u64
    }

    /// Correlation of `runs` with the `n` newest samples.
    fn correlate_runs(&self, runs: &[(usize, usize, f64)], n: usize) -> Option<f64> {
        if self.values.len() < n {
            return None;
        }
        let start = self.values.len() - n;
        Some(
            runs.iter()
                .map(|&(a, b, p)| p * (self.prefix[start + b] - self.prefix[start + a]))
                .sum(),
        )
    }

    fn newest(&self, n: usize) -> &[f64] {
        &self.values[self.values.len() - n..]
    }
}

/// Streaming receiver state machine.
#[derive(Clone, Debug)]
pub struct Receiver<'a> {
    cfg: &'a ReceiverConfig,
    history: History,
    synced: bool,
    peak: f64,
    /// Index of the last sample of the current symbol boundary.
    t0: u64,
    symbols: Vec<u64>,
    events: Vec<SyncEvent>,
}

impl<'a> Receiver<'a> {
    pub fn new(cfg: &'a ReceiverConfig) -> Self {
        Self {
            cfg,
            history: History::default(),
            synced: false,
            peak: 0.0,
            t0: 0,
            symbols: Vec::new(),
            events: Vec::new(),
        }
    }

    /// Sync events seen so far.
    pub fn events(&self) -> &[SyncEvent] {
        &self.events
    }

    /// Feeds one raw sample.
    pub fn push(&mut self, sample: &MacStateSample) -> Option<DecodedFrame> {
        self.push_cleaned(clean_sample(sample, &self.cfg.settings.cleaning))
    }

    /// Feeds one cleaned sample.
    pub fn push_cleaned(&mut self, v: f64) -> Option<DecodedFrame> {
        let n = self.cfg.preamble_len();
        let w = self.cfg.window;
        self.history.push(v, n + w);
        let t = self.history.len() - 1;

        if let Some(r) = self.history.correlate_runs(&self.cfg.preamble_runs, n) {
            if !self.synced && r >= self.cfg.tau_p {
                self.synced = true;
                self.sync_at(t, r, false);
            } else if self.synced && r >= self.peak {
                self.sync_at(t, r, true);
            }
        }

        if self.synced && t - self.t0 == w as u64 {
            self.t0 = t;
            let symbol = self.decide(self.history.newest(w));
            self.symbols.push(symbol);
            if self.symbols.len() == self.cfg.frame_len {
                let frame = self.assemble(FrameStatus::Complete);
                self.synced = false;
                self.symbols.clear();
                return Some(frame);
            }
        }
        None
    }

    /// Feeds a chunk of raw samples, returning the frames completed in it.
    pub fn process_chunk(&mut self, samples: &[MacStateSample]) -> Vec<DecodedFrame> {
        samples.iter().filter_map(|s| self.push(s)).collect()
    }

    /// Ends the stream; a frame in progress comes back as truncated. A sync
    /// that has not yet produced a symbol is dropped.
    pub fn finish(self) -> Option<DecodedFrame> {
        (self.synced && !self.symbols.is_empty()).then(|| self.assemble(FrameStatus::Truncated))
    }

    fn sync_at(&mut self, t: u64, r: f64, resync: bool) {
        self.peak = r;
        self.t0 = t;
        self.symbols.clear();
        self.events.push(SyncEvent {
            sync_index: t + 1 - self.cfg.preamble_len() as u64,
            correlation: r,
            resync,
        });
    }

    /// Index of the template with the highest correlation; ties go to the
    /// lowest index.
    fn decide(&self, window: &[f64]) -> u64 {
        let mut best = 0;
        let mut best_r = f64::NEG_INFINITY;
        for (k, m) in self.cfg.templates.iter().enumerate() {
            let r: f64 = m.iter().zip(window).map(|(a, b)| a * b).sum();
            if r > best_r {
                best_r = r;
                best = k;
            }
        }
        best as u64
    }

    fn assemble(&self, status: FrameStatus) -> DecodedFrame {
        let k = self.cfg.scheme.bits_per_symbol();
        let bits = self
            .symbols
            .iter()
            .flat_map(|&s| (0..k).rev().map(move |i| (s >> i) & 1 == 1))
            .collect();
        let mut padded: Vec<Option<u64>> = self.symbols.iter().copied().map(Some).collect();
        padded.resize(self.cfg.frame_len, None);
        let fields = parse_frame_data(&padded, &self.cfg.scheme)
            .expect("padded to the frame length of this scheme");
        DecodedFrame {
            sync_index: self.t0 + 1
                - (self.cfg.preamble_len() + self.symbols.len() * self.cfg.window) as u64,
            peak: self.peak,
            symbols: self.symbols.clone(),
            bits,
            fields,
            status,
        }
    }
}

/// Runs the receiver over a whole recording in 1 s chunks.
pub fn demodulate(samples: &[MacStateSample], cfg: &ReceiverConfig) -> Vec<DecodedFrame> {
    let mut rx = Receiver::new(cfg);
    let mut frames = Vec::new();
    for chunk in samples.chunks(CHUNK_SAMPLES) {
        frames.extend(rx.process_chunk(chunk));
    }
    frames.extend(rx.finish());
    frames
}

/// Runs the receiver over an already cleaned signal.
pub fn demodulate_cleaned(signal: &[f64], cfg: &ReceiverConfig) -> Vec<DecodedFrame> {
    let mut rx = Receiver::new(cfg);
    let mut frames: Vec<DecodedFrame> = signal.iter().filter_map(|&v| rx.push_cleaned(v)).collect();
    frames.extend(rx.finish());
    frames
}

/// Preamble detector alone: the first crossing of `tau_p` and every later
/// correlation at least as high as the last event. The final event marks the
/// best alignment.
pub fn detect_preamble(signal: &[f64], preamble: &[f64], tau_p: f64) -> Vec<SyncEvent> {
    let n = preamble.len();
    let mut events: Vec<SyncEvent> = Vec::new();
    if n == 0 || signal.len() < n {
        return events;
    }
    let pr = runs(preamble);
    let mut prefix = Vec::with_capacity(signal.len() + 1);
    prefix.push(0.0);
    for &v in signal {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + v);
    }
    for start in 0..=signal.len() - n {
        let r: f64 = pr
            .iter()
            .map(|&(a, b, p)| p * (prefix[start + b] - prefix[start + a]))
            .sum();
        let fire = match events.last() {
            None => r >= tau_p,
            Some(e) => r >= e.correlation,
        };
        if fire {
            events.push(SyncEvent {
                sync_index: start as u64,
                correlation: r,
                resync: !events.is_empty(),
            });
        }
    }
    events
}
