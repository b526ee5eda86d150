//! Experiment orchestration: build the scenario's (X, Y) pair, run the
//! trial loop, and emit a JSON report plus a per-trial CSV.
//!
//! Seed discipline: the config seed never feeds a generator directly.
//! Stream 0 derives X's fixture, stream 1 derives Y's, stream 2 is the root
//! for `run`'s per-trial seeds, and streams 3+row are the roots for sweep
//! rows, so adding trials or rows never perturbs earlier draws.

use crate::config::{ExperimentConfig, Scenario};
use crate::{HarnessError, Result};
use pedl_core::attack::{self, circuit_size_estimate};
use pedl_core::moments::SUCCESS_FLOOR;
use pedl_core::rng::derive_stream;
use pedl_core::stats::{wilson_lower_bound, WILSON_Z_95};
use pedl_core::{AttackParams, Distribution, SplitMix64};
use serde::Serialize;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

pub struct Fixtures {
    pub x: Distribution,
    pub y: Distribution,
}

/// Build the scenario's distribution pair from the config seed.
pub fn build_fixtures(cfg: &ExperimentConfig) -> Result<Fixtures> {
    let sx = derive_stream(cfg.seed, 0);
    let sy = derive_stream(cfg.seed, 1);
    let domain = 1u64 << cfg.n;
    match cfg.scenario {
        Scenario::Pushforward => {
            let k = cfg.k as u32;
            let x = Distribution::random_injective_pushforward(cfg.n, k, sx)?;
            let taken: BTreeSet<u64> = x.support().map(|(pt, _)| pt).collect();
            let mut rng = SplitMix64::new(sy);
            let want = 1u64 << (k + 1);
            let mut points = BTreeSet::new();
            while (points.len() as u64) < want {
                let cand = rng.next_below(domain);
                if !taken.contains(&cand) {
                    points.insert(cand);
                }
            }
            let y = Distribution::flat(cfg.n, &points.into_iter().collect::<Vec<_>>())?;
            Ok(Fixtures { x, y })
        }
        Scenario::Identical => {
            let x = Distribution::flat_random_subset(cfg.n, 1u64 << cfg.k as u32, sx)?;
            let y = x.clone();
            Ok(Fixtures { x, y })
        }
        Scenario::SpikedUniform => {
            let point = SplitMix64::new(sx).next_below(domain);
            let x = Distribution::spiked_uniform(cfg.n, cfg.spike, point)?;
            let y = Distribution::uniform(cfg.n)?;
            Ok(Fixtures { x, y })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    /// Library version, for provenance.
    pub version: String,
    /// Echo of the resolved config, including the seed.
    pub config: ExperimentConfig,
    /// Guaranteed advantage (1/3)*sqrt(T)*2^(-k/2)*delta.
    pub bound: f64,
    /// Composed distinguisher size, T + 2n^2.
    pub size_units: u64,
    pub x_min_entropy: f64,
    pub x_smooth_min_entropy: f64,
    /// Mass of X above the 2^-k threshold.
    pub x_threshold_mass: f64,
    pub y_min_entropy: f64,
    /// Whether the smoothing hypothesis held (smooth min-entropy of X below
    /// k); false means every trial was vacuous.
    pub guaranteed: bool,
    pub trials: u64,
    pub successes: u64,
    pub success_fraction: f64,
    pub wilson_lower: f64,
    pub mean_advantage: f64,
    pub min_advantage: f64,
    pub max_advantage: f64,
    /// `wilson_lower >= 1/17`.
    pub thresholds_met: bool,
}

pub struct RunOutcome {
    pub report: RunReport,
    pub report_path: PathBuf,
    pub csv_path: PathBuf,
}

/// Run the configured experiment and write `report.json` and `trials.csv`
/// (names configurable) into `out_dir`.  Byte-identical for equal configs.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let fixtures = build_fixtures(cfg)?;
    let params = AttackParams::new(cfg.n, cfg.k, cfg.delta, cfg.t_bits())?;
    let trial_root = derive_stream(cfg.seed, 2);

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["trial", "seed", "advantage", "bound", "success", "guaranteed"])
        .map_err(HarnessError::Csv)?;
    let mut successes = 0u64;
    let mut sum_adv = 0.0f64;
    let mut min_adv = f64::INFINITY;
    let mut max_adv = f64::NEG_INFINITY;
    let mut guaranteed = false;
    for i in 0..cfg.trials {
        let seed = derive_stream(trial_root, i);
        let r = attack::run_trial(&fixtures.x, &fixtures.y, &params, seed)?;
        if r.success {
            successes += 1;
        }
        sum_adv += r.advantage;
        min_adv = min_adv.min(r.advantage);
        max_adv = max_adv.max(r.advantage);
        guaranteed = r.guaranteed;
        csv.write_record([
            i.to_string(),
            format!("{seed:016x}"),
            r.advantage.to_string(),
            r.bound.to_string(),
            r.success.to_string(),
            r.guaranteed.to_string(),
        ])
        .map_err(HarnessError::Csv)?;
    }
    let wilson = wilson_lower_bound(successes, cfg.trials, WILSON_Z_95);
    let report = RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        bound: params.advantage_bound(),
        size_units: circuit_size_estimate(&params),
        x_min_entropy: fixtures.x.min_entropy(),
        x_smooth_min_entropy: fixtures.x.smooth_min_entropy(cfg.delta)?,
        x_threshold_mass: fixtures.x.mass_above_threshold(cfg.k)?,
        y_min_entropy: fixtures.y.min_entropy(),
        guaranteed,
        trials: cfg.trials,
        successes,
        success_fraction: successes as f64 / cfg.trials as f64,
        wilson_lower: wilson,
        mean_advantage: sum_adv / cfg.trials as f64,
        min_advantage: min_adv,
        max_advantage: max_adv,
        thresholds_met: wilson >= SUCCESS_FLOOR,
    };

    std::fs::create_dir_all(out_dir)?;
    let report_path = out_dir.join(&cfg.report);
    let csv_path = out_dir.join(&cfg.trials_csv);
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    std::fs::write(&report_path, json)?;
    let bytes = csv.into_inner().map_err(|e| HarnessError::Format(e.to_string()))?;
    std::fs::write(&csv_path, bytes)?;
    Ok(RunOutcome { report, report_path, csv_path })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub feasible: bool,
    pub t: Option<u64>,
    pub size_units: Option<u64>,
    pub bound: Option<f64>,
    pub mean_advantage: Option<f64>,
    pub success_fraction: Option<f64>,
    pub wilson_lower: Option<f64>,
    pub note: String,
}

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub csv_path: PathBuf,
    pub feasible_rows: usize,
    /// Every feasible row cleared the 1/17 floor (and at least one row was
    /// feasible).
    pub all_feasible_pass: bool,
}

/// Advantage-versus-size tradeoff sweep: one row per target advantage
/// `epsilon = 2^e`, each with the minimal feasible slice count.  Infeasible
/// targets are kept in the CSV, marked and skipped.
pub fn sweep_tradeoff(
    cfg: &ExperimentConfig,
    log2_epsilons: &[i32],
    out_dir: &Path,
) -> Result<SweepOutcome> {
    let fixtures = build_fixtures(cfg)?;
    let mut rows = Vec::new();
    let mut feasible_rows = 0usize;
    let mut all_pass = true;
    for (idx, &e) in log2_epsilons.iter().enumerate() {
        let epsilon = (e as f64).exp2();
        match AttackParams::from_epsilon(cfg.n, cfg.k, cfg.delta, epsilon) {
            Err(err) => {
                rows.push(SweepRow {
                    epsilon,
                    feasible: false,
                    t: None,
                    size_units: None,
                    bound: None,
                    mean_advantage: None,
                    success_fraction: None,
                    wilson_lower: None,
                    note: format!("skipped: {err}"),
                });
            }
            Ok(params) => {
                feasible_rows += 1;
                let trial_root = derive_stream(cfg.seed, 3 + idx as u64);
                let mut successes = 0u64;
                let mut sum_adv = 0.0f64;
                for i in 0..cfg.trials {
                    let r = attack::run_trial(
                        &fixtures.x,
                        &fixtures.y,
                        &params,
                        derive_stream(trial_root, i),
                    )?;
                    if r.success {
                        successes += 1;
                    }
                    sum_adv += r.advantage;
                }
                let wilson = wilson_lower_bound(successes, cfg.trials, WILSON_Z_95);
                all_pass &= wilson >= SUCCESS_FLOOR;
                rows.push(SweepRow {
                    epsilon,
                    feasible: true,
                    t: Some(params.slice_count()),
                    size_units: Some(circuit_size_estimate(&params)),
                    bound: Some(params.advantage_bound()),
                    mean_advantage: Some(sum_adv / cfg.trials as f64),
                    success_fraction: Some(successes as f64 / cfg.trials as f64),
                    wilson_lower: Some(wilson),
                    note: "ok".into(),
                });
            }
        }
    }
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("sweep.csv");
    let mut csv = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        csv.serialize(row).map_err(HarnessError::Csv)?;
    }
    let bytes = csv.into_inner().map_err(|e| HarnessError::Format(e.to_string()))?;
    std::fs::write(&csv_path, bytes)?;
    Ok(SweepOutcome {
        rows,
        csv_path,
        feasible_rows,
        all_feasible_pass: feasible_rows > 0 && all_pass,
    })
}
