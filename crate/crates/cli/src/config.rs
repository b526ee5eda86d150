//! Experiment configuration files.
//!
//! Configs are JSON with a closed schema (unknown keys are rejected) and a
//! validation pass that reports *every* violation at once rather than the
//! first.  Slice counts are given as `t` (the number of slices, which must
//! be a power of two) or indirectly as `epsilon` (a target advantage, from
//! which the minimal feasible power-of-two slice count is chosen); at most
//! one of the two may appear.

use crate::{HarnessError, Result};
use pedl_core::attack::choose_slice_count;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const DEFAULT_TRIALS: u64 = 200;
pub const DEFAULT_DELTA: f64 = 0.5;
pub const DEFAULT_SLICES: u64 = 16;
/// "PEDL" in ASCII.
pub const DEFAULT_SEED: u64 = 0x5045_444C;
pub const DEFAULT_SPIKE: f64 = 0.0625;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// X is the image of a uniform k-bit input under a random injective
    /// function into the n-bit domain; Y is flat on 2^(k+1) points disjoint
    /// from X's support.
    Pushforward,
    /// Y = X (flat on a random 2^k subset): every trial is vacuous.
    Identical,
    /// X carries mass `spike` on one random point with the rest uniform;
    /// Y is uniform on the whole domain.
    SpikedUniform,
}

/// On-disk schema.  Everything is optional so validation can itemize what
/// is missing or inconsistent in one pass.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: Option<Scenario>,
    pub n: Option<u32>,
    pub k: Option<f64>,
    pub delta: Option<f64>,
    /// Number of slices T; must be a power of two.
    pub t: Option<u64>,
    /// Target advantage; mutually exclusive with `t`.
    pub epsilon: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    /// Spike mass for the spiked-uniform scenario.
    pub spike: Option<f64>,
    /// Report file name inside the output directory.
    pub report: Option<String>,
    /// Per-trial CSV file name inside the output directory.
    pub trials_csv: Option<String>,
}

/// A validated experiment description.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n: u32,
    pub k: f64,
    pub delta: f64,
    /// Slice count T (a power of two).
    pub t: u64,
    /// The target advantage `t` was derived from, when given that way.
    pub epsilon: Option<f64>,
    pub trials: u64,
    pub seed: u64,
    pub spike: f64,
    pub report: String,
    pub trials_csv: String,
}

impl RawConfig {
    /// Validate and fill defaults, itemizing every violation.
    pub fn resolve(self) -> Result<ExperimentConfig> {
        let mut errors: Vec<String> = Vec::new();
        let scenario = self.scenario;
        if scenario.is_none() {
            errors.push(
                "missing field `scenario` (one of \"pushforward\", \"identical\", \
                 \"spiked-uniform\")"
                    .into(),
            );
        }
        let n = match self.n {
            None => {
                errors.push("missing field `n` (domain exponent)".into());
                0
            }
            Some(0) => {
                errors.push("`n` must be at least 1".into());
                0
            }
            Some(n) if n > 24 => {
                errors.push(format!("`n` = {n} too large; the harness supports n <= 24"));
                0
            }
            Some(n) => n,
        };
        let k = match self.k {
            None => {
                errors.push("missing field `k` (entropy floor in bits)".into());
                f64::NAN
            }
            Some(k) if !k.is_finite() || k < 0.0 => {
                errors.push(format!("`k` = {k} must be finite and >= 0"));
                f64::NAN
            }
            Some(k) => k,
        };
        let delta = self.delta.unwrap_or(DEFAULT_DELTA);
        if !delta.is_finite() || delta <= 0.0 || delta > 1.0 {
            errors.push(format!("`delta` = {delta} must lie in (0, 1]"));
        }
        let trials = self.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            errors.push("`trials` must be at least 1".into());
        }
        let spike = self.spike.unwrap_or(DEFAULT_SPIKE);
        if self.spike.is_some() && scenario.is_some() && scenario != Some(Scenario::SpikedUniform)
        {
            errors.push("`spike` only applies to the spiked-uniform scenario".into());
        }
        if !(spike > 0.0 && spike < 1.0) {
            errors.push(format!("`spike` = {spike} must lie in (0, 1)"));
        }

        // Scenario-specific shape checks (only meaningful once n and k
        // parsed; guard on the earlier error count).
        if let (Some(sc), true) = (scenario, n > 0 && k.is_finite()) {
            if k > n as f64 {
                errors.push(format!("`k` = {k} exceeds the domain exponent n = {n}"));
            } else {
                match sc {
                    Scenario::Pushforward => {
                        if k.fract() != 0.0 {
                            errors.push(format!(
                                "the pushforward scenario needs an integer `k`, got {k}"
                            ));
                        } else if k as u32 + 2 > n {
                            errors.push(format!(
                                "pushforward needs k + 2 <= n so X (2^k points) and the \
                                 disjoint Y (2^(k+1) points) both fit; got k = {k}, n = {n}"
                            ));
                        }
                    }
                    Scenario::Identical => {
                        if k.fract() != 0.0 {
                            errors.push(format!(
                                "the identical scenario needs an integer `k`, got {k}"
                            ));
                        }
                    }
                    Scenario::SpikedUniform => {}
                }
            }
        }

        // Slice count: explicit t (power of two) or derived from epsilon.
        let mut t = DEFAULT_SLICES;
        match (self.t, self.epsilon) {
            (Some(_), Some(_)) => {
                errors.push("give `t` or `epsilon`, not both".into());
            }
            (Some(tv), None) => {
                if tv == 0 || !tv.is_power_of_two() {
                    errors.push(format!(
                        "`t` = {tv} is invalid: the slice count must be a power of 2"
                    ));
                } else {
                    t = tv;
                }
            }
            (None, Some(eps)) => {
                if n > 0 && k.is_finite() && delta > 0.0 && delta <= 1.0 {
                    match choose_slice_count(eps, k, delta, n) {
                        Ok(tv) => t = tv,
                        Err(e) => errors.push(format!("`epsilon` = {eps} is infeasible: {e}")),
                    }
                }
            }
            (None, None) => {}
        }
        if n > 0 && t > (1u64 << n.min(20)) {
            errors.push(format!("`t` = {t} exceeds the domain (and the 2^20 slice cap)"));
        }

        if !errors.is_empty() {
            return Err(HarnessError::Config(errors));
        }
        Ok(ExperimentConfig {
            scenario: scenario.unwrap(),
            n,
            k,
            delta,
            t,
            epsilon: self.epsilon,
            trials,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            spike,
            report: self.report.unwrap_or_else(|| "report.json".into()),
            trials_csv: self.trials_csv.unwrap_or_else(|| "trials.csv".into()),
        })
    }
}

/// Read and validate a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = serde_json::from_str(text)
        .map_err(|e| HarnessError::Config(vec![format!("schema error: {e}")]))?;
    raw.resolve()
}

impl ExperimentConfig {
    /// log2 of the slice count (always exact: `t` is a power of two).
    pub fn t_bits(&self) -> u32 {
        self.t.trailing_zeros()
    }
}
