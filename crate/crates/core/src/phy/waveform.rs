//! LTE-U ON/OFF waveform with LtFi symbols embedded in the ON phases.

use crate::codec::{AirSymbol, CodingScheme, Gap, SymbolStream};

use super::csat::CsatConfig;
use super::PhyError;

/// Simulation resolution.
pub const TICK_US: u64 = 50;
pub const TICKS_PER_MS: usize = 20;
/// Longest LTE transmission allowed without a puncture.
pub const MAX_ON_RUN_MS: usize = 20;
/// Length of a filler puncture inserted into data-free ON time.
pub const FILLER_PUNCTURE_MS: usize = 2;

/// A scheduled transmission gap, in ticks from the start of the waveform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScheduledGap {
    pub start: usize,
    pub len: usize,
    pub kind: GapKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapKind {
    /// Part of a data or preamble symbol.
    Symbol,
    /// Keeps data-free ON time within the 20 ms limit.
    Filler,
}

/// LTE transmit indicator sampled every [`TICK_US`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Waveform {
    /// `true` while the LTE cell is transmitting.
    pub on: Vec<bool>,
    pub cycle_ticks: usize,
    /// ON-phase length in ticks (punctures included).
    pub on_ticks: usize,
    /// Tick at which each embedded symbol starts.
    pub symbol_starts: Vec<usize>,
    pub gaps: Vec<ScheduledGap>,
}

impl Waveform {
    pub fn cycles(&self) -> usize {
        self.on.len() / self.cycle_ticks
    }

    pub fn duration_us(&self) -> u64 {
        self.on.len() as u64 * TICK_US
    }

    /// Fraction of time inside ON phases, punctures counted as ON.
    pub fn measured_duty(&self) -> f64 {
        if self.on.is_empty() {
            return 0.0;
        }
        (self.cycles() * self.on_ticks) as f64 / self.on.len() as f64
    }

    /// Longest run of consecutive transmitting ticks.
    pub fn longest_on_run_ticks(&self) -> usize {
        let mut best = 0;
        let mut run = 0;
        for &b in &self.on {
            run = if b { run + 1 } else { 0 };
            best = best.max(run);
        }
        best
    }
}

/// Builds a waveform cycle by cycle.
#[derive(Clone, Debug)]
pub struct WaveformBuilder<'a> {
    csat: CsatConfig,
    scheme: &'a CodingScheme,
    wf: Waveform,
}

impl<'a> WaveformBuilder<'a> {
    pub fn new(csat: CsatConfig, scheme: &'a CodingScheme) -> Self {
        let cycle_ticks = csat.cycle_ms() as usize * TICKS_PER_MS;
        let on_ticks = (csat.on_ms() * TICKS_PER_MS as f64).round() as usize;
        Self {
            csat,
            scheme,
            wf: Waveform {
                on: Vec::new(),
                cycle_ticks,
                on_ticks,
                symbol_starts: Vec::new(),
                gaps: Vec::new(),
            },
        }
    }

    /// Appends `n` cycles that carry no symbols.
    pub fn idle_cycles(&mut self, n: usize) -> Result<&mut Self, PhyError> {
        for _ in 0..n {
            self.push_cycle(&[])?;
        }
        Ok(self)
    }

    /// Appends as many cycles as needed to carry `symbols`, packing each ON
    /// phase with as many whole symbols as fit.
    pub fn symbols(&mut self, symbols: &[AirSymbol]) -> Result<&mut Self, PhyError> {
        let per_cycle = self.scheme.symbols_per_on_phase(self.csat.on_ms()) as usize;
        if per_cycle == 0 && !symbols.is_empty() {
            return Err(PhyError::Scheduling(format!(
                "a {} ms symbol does not fit into a {} ms ON phase",
                self.scheme.symbol_duration_ms(),
                self.csat.on_ms()
            )));
        }
        for chunk in symbols.chunks(per_cycle.max(1)) {
            self.push_cycle(chunk)?;
        }
        Ok(self)
    }

    pub fn stream(&mut self, stream: &SymbolStream) -> Result<&mut Self, PhyError> {
        self.symbols(&stream.symbols)
    }

    pub fn build(&mut self) -> Waveform {
        let empty = Waveform {
            on: Vec::new(),
            cycle_ticks: self.wf.cycle_ticks,
            on_ticks: self.wf.on_ticks,
            symbol_starts: Vec::new(),
            gaps: Vec::new(),
        };
        std::mem::replace(&mut self.wf, empty)
    }

    fn push_cycle(&mut self, symbols: &[AirSymbol]) -> Result<(), PhyError> {
        let base = self.wf.on.len();
        let on_ticks = self.wf.on_ticks;
        let mut cycle = vec![false; self.wf.cycle_ticks];
        cycle[..on_ticks].fill(true);
        let sym_ticks = self.scheme.symbol_duration_ms() as usize * TICKS_PER_MS;
        let mut gaps = Vec::new();

        for (i, sym) in symbols.iter().enumerate() {
            let start = i * sym_ticks;
            self.wf.symbol_starts.push(base + start);
            for g in self.symbol_gaps(sym)? {
                let s = start + g.start_ms as usize * TICKS_PER_MS;
                let e = (s + g.len_ms as usize * TICKS_PER_MS).min(on_ticks);
                if s < e {
                    cycle[s..e].fill(false);
                    gaps.push(ScheduledGap {
                        start: base + s,
                        len: e - s,
                        kind: GapKind::Symbol,
                    });
                }
            }
        }

        // data-free tail of the ON phase: keep every run within 20 ms
        let data_end = (symbols.len() * sym_ticks).min(on_ticks);
        let max_run = MAX_ON_RUN_MS * TICKS_PER_MS;
        let filler = FILLER_PUNCTURE_MS * TICKS_PER_MS;
        let mut run_start = (0..data_end)
            .rev()
            .find(|&t| !cycle[t])
            .map_or(0, |t| t + 1);
        let mut t = data_end.max(run_start);
        while t < on_ticks {
            if !cycle[t] {
                run_start = t + 1;
            } else if t + 1 - run_start > max_run - filler && on_ticks > run_start + max_run {
                let e = (t + filler).min(on_ticks);
                cycle[t..e].fill(false);
                gaps.push(ScheduledGap {
                    start: base + t,
                    len: e - t,
                    kind: GapKind::Filler,
                });
                run_start = e;
                t = e;
                continue;
            }
            t += 1;
        }

        let mut run = 0;
        for &b in &cycle[..on_ticks] {
            run = if b { run + 1 } else { 0 };
            if run > max_run {
                return Err(PhyError::Scheduling(format!(
                    "symbols leave an LTE transmission of more than {MAX_ON_RUN_MS} ms without a puncture"
                )));
            }
        }

        self.wf.on.extend_from_slice(&cycle);
        self.wf.gaps.extend(gaps);
        Ok(())
    }

    fn symbol_gaps(&self, sym: &AirSymbol) -> Result<Vec<Gap>, PhyError> {
        Ok(match sym {
            AirSymbol::Preamble(p) => self.scheme.preamble_gaps(*p),
            AirSymbol::Data(v) => {
                let schedule = self.scheme.encode_symbol(*v)?;
                self.scheme.data_gaps(&schedule)
            }
        })
    }
}

/// Waveform carrying `symbols`, one cycle after another.
pub fn generate_waveform(
    csat: CsatConfig,
    scheme: &CodingScheme,
    symbols: &[AirSymbol],
) -> Result<Waveform, PhyError> {
    let mut b = WaveformBuilder::new(csat, scheme);
    b.symbols(symbols)?;
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{build_frame, CtcFrame, PunctureMode};
    use std::net::Ipv4Addr;

    fn frame() -> CtcFrame {
        CtcFrame {
            network_id: Ipv4Addr::new(10, 1, 2, 3),
            clusters: [7, 8, 9, 10, 11, 12],
        }
    }

    #[test]
    fn rate_of_the_link_experiment_setup() {
        let csat = CsatConfig::new(40, 12.0).unwrap();
        let scheme = CodingScheme::short_three_bit();
        let stream = build_frame(&frame(), &scheme).unwrap();
        let wf = generate_waveform(csat, &scheme, &stream.symbols).unwrap();
        assert_eq!(wf.cycles(), stream.symbols.len());
        let data_bits = stream.data().count() as f64 * scheme.bits_per_symbol() as f64;
        let data_secs = stream.data().count() as f64 * 0.040;
        assert!((data_bits / data_secs - 75.0).abs() < 1e-9);
    }

    #[test]
    fn prototype_setup_fits_one_symbol() {
        let csat = CsatConfig::new(80, 19.0).unwrap();
        let scheme = CodingScheme::baseline();
        let wf = generate_waveform(csat, &scheme, &[AirSymbol::Data(3), AirSymbol::Data(5)]).unwrap();
        assert_eq!(wf.cycles(), 2);
        assert!(wf.longest_on_run_ticks() <= MAX_ON_RUN_MS * TICKS_PER_MS);
    }

    #[test]
    fn symbol_longer_than_on_phase() {
        let csat = CsatConfig::new(40, 12.0).unwrap();
        let scheme = CodingScheme::baseline();
        let err = generate_waveform(csat, &scheme, &[AirSymbol::Data(0)]).unwrap_err();
        assert!(matches!(err, PhyError::Scheduling(_)));
    }

    #[test]
    fn empty_stream_is_plain_duty_cycle() {
        let csat = CsatConfig::new(80, 40.0).unwrap();
        let scheme = CodingScheme::baseline();
        let mut b = WaveformBuilder::new(csat, &scheme);
        b.idle_cycles(3).unwrap();
        let wf = b.build();
        assert_eq!(wf.cycles(), 3);
        assert!(wf.gaps.iter().all(|g| g.kind == GapKind::Filler));
        assert_eq!(wf.gaps.len(), 3);
        assert!(wf.longest_on_run_ticks() <= MAX_ON_RUN_MS * TICKS_PER_MS);
        assert!((wf.measured_duty() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn short_on_phase_needs_no_filler() {
        let csat = CsatConfig::new(40, 12.0).unwrap();
        let scheme = CodingScheme::short_three_bit();
        let mut b = WaveformBuilder::new(csat, &scheme);
        b.idle_cycles(2).unwrap();
        assert!(b.build().gaps.is_empty());
    }

    #[test]
    fn puncture_count_is_conserved() {
        let csat = CsatConfig::new(80, 40.0).unwrap();
        for k in 0..=4 {
            let scheme = CodingScheme::extra_punctures(k).unwrap();
            let values: Vec<AirSymbol> = (0..scheme.used_symbols().min(9)).map(AirSymbol::Data).collect();
            let wf = generate_waveform(csat, &scheme, &values).unwrap();
            let symbol_gaps = wf.gaps.iter().filter(|g| g.kind == GapKind::Symbol).count();
            assert_eq!(symbol_gaps, values.len() * (1 + k as usize));
        }
        assert_eq!(CodingScheme::baseline().mode(), PunctureMode::Mandatory);
    }

    #[test]
    fn duty_over_whole_cycles() {
        let csat = CsatConfig::from_duty(80, 0.24).unwrap();
        let scheme = CodingScheme::extra_punctures(3).unwrap();
        let values: Vec<AirSymbol> = (0..5).map(AirSymbol::Data).collect();
        let wf = generate_waveform(csat, &scheme, &values).unwrap();
        let quantum = 1.0 / wf.cycle_ticks as f64;
        assert!((wf.measured_duty() - 0.24).abs() <= quantum);
    }
}
