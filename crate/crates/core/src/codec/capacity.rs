//! Alphabet size of a puncture-position code.
//!
//! Choosing `k` punctures out of `n` candidate positions yields `C(n, k)`
//! distinct symbols. Only the largest power of two that fits is used for
//! data, so a symbol carries `floor(log2 C(n, k))` bits.

use num_bigint::BigUint;

use super::CodecError;

/// Largest number of candidate positions supported by the schedule ranking.
pub const MAX_POSITIONS: u32 = 64;

/// Exact alphabet size and usable bits per symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Capacity {
    pub alphabet_size: BigUint,
    pub bits_per_symbol: u32,
}

/// Computes `M = C(n, k)` exactly and `K = floor(log2 M)`.
pub fn modulation_capacity(n: u32, k: u32) -> Result<Capacity, CodecError> {
    if k > n {
        return Err(CodecError::Domain(format!(
            "cannot choose {k} punctures from {n} positions"
        )));
    }
    if n > MAX_POSITIONS {
        return Err(CodecError::Domain(format!(
            "{n} positions exceeds the supported maximum of {MAX_POSITIONS}"
        )));
    }
    let alphabet_size = big_binomial(n, k);
    let bits_per_symbol = floor_log2(&alphabet_size);
    Ok(Capacity {
        alphabet_size,
        bits_per_symbol,
    })
}

fn big_binomial(n: u32, k: u32) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    // acc * (n - i) is always divisible by (i + 1) at this point
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn floor_log2(m: &BigUint) -> u32 {
    // bits() of 1 is 1, so this yields 0 for a single-symbol alphabet
    (m.bits() as u32).saturating_sub(1)
}

/// `C(n, k)` in machine arithmetic; exact for every `n <= 64`.
pub(crate) fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}
