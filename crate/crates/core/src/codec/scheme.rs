use serde::{Deserialize, Serialize};

use super::capacity::{binomial, modulation_capacity, MAX_POSITIONS};
use super::CodecError;

/// Where the data-carrying punctures live inside a symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PunctureMode {
    /// The mandatory puncture itself is moved around. The symbol is cut into
    /// `duration / puncture` equal slots; the first and last slot are
    /// reserved so the receiver can find the symbol edges.
    Mandatory,
    /// The mandatory puncture is pinned to the end of the symbol and `k`
    /// additional 1 ms punctures are placed in the remaining time.
    Extra,
}

/// Serializable description of a symbol alphabet, as found in config files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub symbol_duration_ms: u32,
    pub mandatory_puncture_ms: u32,
    pub n_positions: u32,
    pub k_extra: u32,
    pub mode: PunctureMode,
}

/// A validated symbol alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemeConfig", into = "SchemeConfig")]
pub struct CodingScheme {
    symbol_duration_ms: u32,
    mandatory_puncture_ms: u32,
    n_positions: u32,
    k_extra: u32,
    mode: PunctureMode,
    alphabet_size: u128,
    bits_per_symbol: u32,
}

/// One of the two reserved symbol shapes that make up the frame preamble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PreambleSymbol {
    A,
    B,
}

/// Puncture positions of one data symbol under a scheme's canonical
/// (lexicographic) enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PunctureSchedule {
    pub symbol_index: u64,
    /// Strictly increasing position indices of the data-carrying punctures.
    /// In [`PunctureMode::Mandatory`] the unit is one puncture length and the
    /// single entry is the mandatory puncture; in [`PunctureMode::Extra`] the
    /// unit is 1 ms and the pinned trailing puncture is implied.
    pub positions: Vec<u32>,
}

/// A gap in LTE transmission, relative to the symbol start.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gap {
    pub start_ms: u32,
    pub len_ms: u32,
}

impl CodingScheme {
    /// The 20 ms, 3 bit alphabet: one 2 ms puncture in one of eight slots.
    pub fn baseline() -> Self {
        Self::new(SchemeConfig {
            symbol_duration_ms: 20,
            mandatory_puncture_ms: 2,
            n_positions: 8,
            k_extra: 1,
            mode: PunctureMode::Mandatory,
        })
        .expect("baseline scheme is valid")
    }

    /// A 10 ms, 3 bit alphabet with a 1 ms puncture. Fits a 12 ms ON phase,
    /// which the 40 ms link experiments use.
    pub fn short_three_bit() -> Self {
        Self::new(SchemeConfig {
            symbol_duration_ms: 10,
            mandatory_puncture_ms: 1,
            n_positions: 8,
            k_extra: 1,
            mode: PunctureMode::Mandatory,
        })
        .expect("short scheme is valid")
    }

    /// 20 ms symbols with `k` extra 1 ms punctures among 18 positions.
    pub fn extra_punctures(k: u32) -> Result<Self, CodecError> {
        Self::new(SchemeConfig {
            symbol_duration_ms: 20,
            mandatory_puncture_ms: 2,
            n_positions: 18,
            k_extra: k,
            mode: PunctureMode::Extra,
        })
    }

    pub fn new(cfg: SchemeConfig) -> Result<Self, CodecError> {
        let SchemeConfig {
            symbol_duration_ms: d,
            mandatory_puncture_ms: p,
            n_positions: n,
            k_extra: k,
            mode,
        } = cfg;
        let invalid = |msg: String| Err(CodecError::InvalidScheme(msg));
        if p == 0 || d == 0 {
            return invalid("durations must be positive".into());
        }
        if k > n {
            return invalid(format!("k_extra {k} exceeds n_positions {n}"));
        }
        if n > MAX_POSITIONS {
            return invalid(format!("n_positions {n} exceeds {MAX_POSITIONS}"));
        }
        if d < p + k {
            return invalid(format!(
                "symbol of {d} ms cannot hold a {p} ms puncture and {k} extra"
            ));
        }
        match mode {
            PunctureMode::Mandatory => {
                if d % p != 0 {
                    return invalid(format!("{d} ms is not a multiple of the {p} ms puncture"));
                }
                let slots = d / p;
                if slots < 3 || n != slots - 2 {
                    return invalid(format!(
                        "{slots} slots leave {} usable positions, config says {n}",
                        slots.saturating_sub(2)
                    ));
                }
            }
            PunctureMode::Extra => {
                if n > d - p {
                    return invalid(format!(
                        "{n} one-millisecond positions do not fit before the trailing {p} ms puncture"
                    ));
                }
                if d - p < 2 {
                    return invalid("symbol too short for a distinct preamble".into());
                }
            }
        }
        let cap = modulation_capacity(n, k)?;
        Ok(Self {
            symbol_duration_ms: d,
            mandatory_puncture_ms: p,
            n_positions: n,
            k_extra: k,
            mode,
            alphabet_size: binomial(n, k),
            bits_per_symbol: cap.bits_per_symbol,
        })
    }

    pub fn symbol_duration_ms(&self) -> u32 {
        self.symbol_duration_ms
    }

    pub fn mandatory_puncture_ms(&self) -> u32 {
        self.mandatory_puncture_ms
    }

    pub fn n_positions(&self) -> u32 {
        self.n_positions
    }

    pub fn k_extra(&self) -> u32 {
        self.k_extra
    }

    pub fn mode(&self) -> PunctureMode {
        self.mode
    }

    /// `M`, the number of distinct schedules.
    pub fn alphabet_size(&self) -> u128 {
        self.alphabet_size
    }

    /// `K`, bits carried by one symbol.
    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    /// Number of schedules used for data, `2^K`.
    pub fn used_symbols(&self) -> u64 {
        1u64 << self.bits_per_symbol
    }

    /// Shortest ON span that still holds a whole symbol. The trailing
    /// puncture-length of a symbol may coincide with the start of the OFF
    /// phase.
    pub fn min_on_ms(&self) -> u32 {
        self.symbol_duration_ms - self.mandatory_puncture_ms
    }

    /// How many symbols fit back to back into an ON phase of `on_ms`.
    pub fn symbols_per_on_phase(&self, on_ms: f64) -> u32 {
        let d = self.symbol_duration_ms as f64;
        let p = self.mandatory_puncture_ms as f64;
        // small epsilon so that e.g. 0.24 * 80 ms does not lose a symbol to rounding
        ((on_ms + p + 1e-9) / d).floor().max(0.0) as u32
    }

    fn position_base(&self) -> u32 {
        match self.mode {
            PunctureMode::Mandatory => 1,
            PunctureMode::Extra => 0,
        }
    }

    /// Maps `value` to its canonical schedule: the `value`-th `k`-subset of
    /// the allowed positions in lexicographic order.
    pub fn encode_symbol(&self, value: u64) -> Result<PunctureSchedule, CodecError> {
        if value >= self.used_symbols() {
            return Err(CodecError::Range {
                value,
                bits: self.bits_per_symbol,
            });
        }
        let n = self.n_positions;
        let k = self.k_extra;
        let mut rank = value as u128;
        let mut positions = Vec::with_capacity(k as usize);
        let mut next = 0u32;
        for remaining in (1..=k).rev() {
            loop {
                // subsets whose smallest remaining element is `next`
                let count = binomial(n - next - 1, remaining - 1);
                if rank < count {
                    break;
                }
                rank -= count;
                next += 1;
            }
            positions.push(next + self.position_base());
            next += 1;
        }
        Ok(PunctureSchedule {
            symbol_index: value,
            positions,
        })
    }

    /// Inverse of [`encode_symbol`](Self::encode_symbol).
    pub fn decode_symbol(&self, positions: &[u32]) -> Result<u64, CodecError> {
        let invalid = |why: &str| {
            Err(CodecError::InvalidSymbol(format!(
                "{positions:?}: {why}"
            )))
        };
        if positions.len() != self.k_extra as usize {
            return invalid("wrong number of punctures");
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("positions not strictly increasing");
        }
        let base = self.position_base();
        let n = self.n_positions;
        let k = self.k_extra;
        let mut rank: u128 = 0;
        let mut prev: Option<u32> = None;
        for (i, &pos) in positions.iter().enumerate() {
            if pos < base || pos - base >= n {
                return invalid("position outside the alphabet");
            }
            let idx = pos - base;
            let start = prev.map_or(0, |p| p + 1);
            let remaining = k - i as u32;
            for skipped in start..idx {
                rank += binomial(n - skipped - 1, remaining - 1);
            }
            prev = Some(idx);
        }
        if rank >= self.used_symbols() as u128 {
            return invalid("schedule is outside the used 2^K subset");
        }
        Ok(rank as u64)
    }

    /// Gaps (in ms, relative to the symbol start) that a data symbol puts
    /// into the LTE transmission.
    pub fn data_gaps(&self, schedule: &PunctureSchedule) -> Vec<Gap> {
        let p = self.mandatory_puncture_ms;
        match self.mode {
            PunctureMode::Mandatory => schedule
                .positions
                .iter()
                .map(|&slot| Gap {
                    start_ms: slot * p,
                    len_ms: p,
                })
                .collect(),
            PunctureMode::Extra => {
                let mut gaps: Vec<Gap> = schedule
                    .positions
                    .iter()
                    .map(|&ms| Gap {
                        start_ms: ms,
                        len_ms: 1,
                    })
                    .collect();
                gaps.push(Gap {
                    start_ms: self.symbol_duration_ms - p,
                    len_ms: p,
                });
                gaps
            }
        }
    }

    /// Gaps of a reserved preamble symbol. No data schedule produces them:
    /// in mandatory mode they use the two reserved edge slots, in extra mode
    /// they lack the pinned trailing puncture every data symbol has.
    pub fn preamble_gaps(&self, which: PreambleSymbol) -> Vec<Gap> {
        let d = self.symbol_duration_ms;
        let p = self.mandatory_puncture_ms;
        let start_ms = match (self.mode, which) {
            (_, PreambleSymbol::A) => 0,
            (PunctureMode::Mandatory, PreambleSymbol::B) => d - p,
            (PunctureMode::Extra, PreambleSymbol::B) => (d - p) / 2,
        };
        vec![Gap { start_ms, len_ms: p }]
    }
}

impl TryFrom<SchemeConfig> for CodingScheme {
    type Error = CodecError;

    fn try_from(cfg: SchemeConfig) -> Result<Self, Self::Error> {
        Self::new(cfg)
    }
}

impl From<CodingScheme> for SchemeConfig {
    fn from(s: CodingScheme) -> Self {
        SchemeConfig {
            symbol_duration_ms: s.symbol_duration_ms,
            mandatory_puncture_ms: s.mandatory_puncture_ms,
            n_positions: s.n_positions,
            k_extra: s.k_extra,
            mode: s.mode,
        }
    }
}
