//! Two-bin max-load measurement for four-wise independent sign hashes.
//!
//! Hash m = 2^k items into two bins with a random sign hash and record the
//! normalized max load max(B, m - B) / m.  The offset above 1/2 shrinks
//! like 2^(-k/2), so comparing two levels k < k' shows the larger domain
//! hugging a balanced split more tightly.

use crate::{HarnessError, Result};
use pedl_core::hash::SignHash;
use pedl_core::rng::derive_stream;
use pedl_core::SplitMix64;
use serde::Serialize;

/// sqrt(2/pi), the normal mean-absolute-deviation constant.
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, Serialize)]
pub struct BallsBinsResult {
    pub k: u32,
    pub trials: u64,
    /// Mean over trials of max(B, m - B) / m.
    pub average_max_load: f64,
    /// 1/2 + sqrt(2/pi) * 2^(-k/2).
    pub predicted_max_load: f64,
    /// `average_max_load - 1/2`.
    pub measured_offset: f64,
    /// sqrt(2/pi) * 2^(-k/2).
    pub predicted_offset: f64,
    /// |measured - predicted| / predicted.
    pub offset_relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BallsBinsReport {
    pub coarse: BallsBinsResult,
    pub fine: BallsBinsResult,
    /// `coarse.measured_offset - fine.measured_offset`; positive when the
    /// larger domain balances better.
    pub offset_gap: f64,
}

/// Measure one level: throw 2^k items into two bins `trials` times with
/// fresh sign hashes drawn from `stream` and average the normalized max
/// load.
pub fn measure_level(k: u32, trials: u64, stream: u64) -> Result<BallsBinsResult> {
    if k > 26 {
        return Err(HarnessError::Config(vec![format!(
            "balls-bins levels are capped at k <= 26, got {k}"
        )]));
    }
    if trials == 0 {
        return Err(HarnessError::Config(vec!["trials must be at least 1".into()]));
    }
    Ok(one_level(k, trials, stream))
}

fn one_level(k: u32, trials: u64, stream: u64) -> BallsBinsResult {
    let m = 1u64 << k;
    let mut rng = SplitMix64::new(stream);
    let mut sum_load = 0.0f64;
    for _ in 0..trials {
        let h = SignHash::sample(&mut rng);
        let mut plus = 0u64;
        for x in 0..m {
            if h.sign(x) > 0 {
                plus += 1;
            }
        }
        let max_bin = plus.max(m - plus);
        sum_load += max_bin as f64 / m as f64;
    }
    let average = sum_load / trials as f64;
    let predicted_offset = SQRT_2_OVER_PI * (-(k as f64) / 2.0).exp2();
    let measured_offset = average - 0.5;
    BallsBinsResult {
        k,
        trials,
        average_max_load: average,
        predicted_max_load: 0.5 + predicted_offset,
        measured_offset,
        predicted_offset,
        offset_relative_error: (measured_offset - predicted_offset).abs() / predicted_offset,
    }
}

/// Measure both levels.  Each level gets its own derived seed stream, so
/// the fine level's draws do not depend on the coarse level's trial count.
pub fn balls_bins(k: u32, k_prime: u32, trials: u64, seed: u64) -> Result<BallsBinsReport> {
    if k >= k_prime {
        return Err(HarnessError::Config(vec![format!(
            "balls-bins needs k < k', got k = {k}, k' = {k_prime}"
        )]));
    }
    let coarse = measure_level(k, trials, derive_stream(seed, 0))?;
    let fine = measure_level(k_prime, trials, derive_stream(seed, 1))?;
    let offset_gap = coarse.measured_offset - fine.measured_offset;
    Ok(BallsBinsReport { coarse, fine, offset_gap })
}
