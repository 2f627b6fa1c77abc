use serde::{Deserialize, Serialize};

use super::receiver::{DecodedFrame, FrameStatus};

/// What was sent: where the preamble started and the data symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentFrame {
    pub sync_index: u64,
    pub symbols: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub frames: usize,
    pub frame_errors: usize,
    pub symbols: usize,
    pub symbol_errors: usize,
    pub fer: f64,
    pub ser: f64,
    /// 95% Wilson score interval of the FER.
    pub fer_ci: (f64, f64),
}

impl ErrorRates {
    pub fn from_counts(frames: usize, frame_errors: usize, symbols: usize, symbol_errors: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Self {
            frames,
            frame_errors,
            symbols,
            symbol_errors,
            fer: ratio(frame_errors, frames),
            ser: ratio(symbol_errors, symbols),
            fer_ci: wilson_interval(frame_errors, frames, 1.96),
        }
    }

    /// Pools the counts of several measurements.
    pub fn merge(parts: &[ErrorRates]) -> Self {
        Self::from_counts(
            parts.iter().map(|p| p.frames).sum(),
            parts.iter().map(|p| p.frame_errors).sum(),
            parts.iter().map(|p| p.symbols).sum(),
            parts.iter().map(|p| p.symbol_errors).sum(),
        )
    }
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Frame and symbol error rates of a transmit log against receiver output.
///
/// A sent frame is matched to the first decoded frame whose sync index lies
/// within `tolerance` samples. It counts as a frame error when unmatched,
/// truncated, when any field fails its CRC, or when the decoded symbols
/// differ from the sent ones. Symbols of unmatched frames and symbols
/// missing from truncated frames all count as symbol errors.
pub fn measure_fer_ser(sent: &[SentFrame], received: &[DecodedFrame], tolerance: u64) -> ErrorRates {
    let mut used = vec![false; received.len()];
    let mut frame_errors = 0;
    let mut symbols = 0;
    let mut symbol_errors = 0;
    for tx in sent {
        symbols += tx.symbols.len();
        let hit = received
            .iter()
            .enumerate()
            .find(|(i, rx)| !used[*i] && rx.sync_index.abs_diff(tx.sync_index) <= tolerance);
        match hit {
            None => {
                frame_errors += 1;
                symbol_errors += tx.symbols.len();
            }
            Some((i, rx)) => {
                used[i] = true;
                let wrong = tx
                    .symbols
                    .iter()
                    .enumerate()
                    .filter(|(j, s)| rx.symbols.get(*j) != Some(s))
                    .count();
                symbol_errors += wrong;
                if wrong > 0 || rx.status == FrameStatus::Truncated || !rx.fields.all_valid() {
                    frame_errors += 1;
                }
            }
        }
    }
    ErrorRates::from_counts(sent.len(), frame_errors, symbols, symbol_errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{build_frame, parse_frame, CodingScheme, CtcFrame};
    use std::net::Ipv4Addr;

    fn decoded(sync: u64, symbols: Vec<u64>, scheme: &CodingScheme) -> DecodedFrame {
        let padded: Vec<Option<u64>> = symbols.iter().copied().map(Some).collect();
        DecodedFrame {
            sync_index: sync,
            peak: 0.0,
            bits: vec![],
            fields: crate::codec::parse_frame_data(&padded, scheme).unwrap(),
            symbols,
            status: FrameStatus::Complete,
        }
    }

    fn sent(scheme: &CodingScheme, n: usize) -> Vec<SentFrame> {
        (0..n)
            .map(|i| {
                let f = CtcFrame {
                    network_id: Ipv4Addr::new(10, 0, 0, i as u8),
                    clusters: [i as u16; 6],
                };
                let s = build_frame(&f, scheme).unwrap();
                assert!(parse_frame(&s, scheme).unwrap().all_valid());
                SentFrame {
                    sync_index: 10_000 * i as u64,
                    symbols: s.data().collect(),
                }
            })
            .collect()
    }

    #[test]
    fn perfect_and_lost() {
        let scheme = CodingScheme::baseline();
        let tx = sent(&scheme, 100);
        let rx: Vec<DecodedFrame> = tx.iter().map(|t| decoded(t.sync_index + 3, t.symbols.clone(), &scheme)).collect();
        let ok = measure_fer_ser(&tx, &rx, 160);
        assert_eq!((ok.fer, ok.ser), (0.0, 0.0));
        let lost = measure_fer_ser(&tx, &[], 160);
        assert_eq!((lost.fer, lost.ser), (1.0, 1.0));
    }

    #[test]
    fn one_wrong_symbol() {
        // 80-symbol frames built by hand
        let tx: Vec<SentFrame> = (0..10)
            .map(|i| SentFrame {
                sync_index: 1000 * i,
                symbols: vec![1; 80],
            })
            .collect();
        let mut rx: Vec<DecodedFrame> = tx
            .iter()
            .map(|t| DecodedFrame {
                sync_index: t.sync_index,
                peak: 0.0,
                symbols: t.symbols.clone(),
                bits: vec![],
                fields: {
                    let mut f = crate::codec::PartialFrame::default();
                    f.network_id = Some(Ipv4Addr::LOCALHOST);
                    f.clusters = [Some(0); 6];
                    f
                },
                status: FrameStatus::Complete,
            })
            .collect();
        rx[4].symbols[17] = 2;
        let e = measure_fer_ser(&tx, &rx, 0);
        assert_eq!(e.ser, 1.0 / 800.0);
        assert_eq!(e.fer, 0.1);
    }

    #[test]
    fn wilson_brackets_estimate() {
        let (lo, hi) = wilson_interval(20, 100, 1.96);
        assert!(lo < 0.2 && 0.2 < hi);
        assert!((lo - 0.1333).abs() < 1e-3 && (hi - 0.2888).abs() < 1e-3);
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
    }
}
