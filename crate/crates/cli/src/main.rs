//! `pedl` — measurement harness for sliced sign-hash distinguishers.
//!
//! Every subcommand prints a single report to stdout (JSON by default, a
//! flattened one-row CSV with `--format csv`) and writes file artifacts
//! under `--out-dir` when it produces any.
//!
//! Exit codes: 0 when the command's success thresholds hold, 1 when the run
//! completed but a threshold failed, 2 for usage, config, or IO errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pedl_cli::config::{parse_config, DEFAULT_SEED};
use pedl_cli::{ballsbins, experiment, io, HarnessError};
use pedl_core::attack;
use pedl_core::hash::{SignHash, SliceHash};
use pedl_core::moments::{self, WalkSpec, SUCCESS_FLOOR};
use pedl_core::rng::derive_stream;
use pedl_core::{Distribution, SplitMix64};
use serde::Deserialize;
use serde_json::json;

/// Acceptable relative error between the measured and predicted max-load
/// offsets in `ballsbins run`.
const OFFSET_TOLERANCE: f64 = 0.2;

#[derive(Parser)]
#[command(name = "pedl", version, about = "Distinguisher measurements for low-entropy distributions")]
struct Cli {
    /// Override the seed (config files and fixture generators fall back to
    /// 0x5045444c when neither gives one).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for file artifacts such as report.json and trials.csv.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Format of the summary printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Create and inspect distributions.
    Dist {
        #[command(subcommand)]
        cmd: DistCmd,
    },
    /// Run the sliced distinguisher against a scenario.
    Attack {
        #[command(subcommand)]
        cmd: AttackCmd,
    },
    /// Moment identities and tail floors for sign-hash walks.
    Moments {
        #[command(subcommand)]
        cmd: MomentsCmd,
    },
    /// Two-bin max-load measurements.
    Ballsbins {
        #[command(subcommand)]
        cmd: BallsCmd,
    },
}

#[derive(Subcommand)]
enum DistCmd {
    /// Generate a fixture and write it to a .json or .bin file.
    Gen {
        /// Inline JSON, e.g. '{"kind": "flat-random-subset", "n": 10, "count": 64}'.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Min-entropy, threshold mass, and the optimal smoothing at delta.
    Entropy {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
    },
    /// Statistical distance (half L1) between two distributions.
    Distance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

#[derive(Subcommand)]
enum AttackCmd {
    /// Run the configured experiment; writes report.json and trials.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Advantage-versus-size tradeoff over target advantages 2^min..2^max;
    /// writes sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = -8, allow_hyphen_values = true)]
        log2_eps_min: i32,
        #[arg(long, default_value_t = -4, allow_hyphen_values = true)]
        log2_eps_max: i32,
    },
    /// Rebuild the distinguisher from a recorded trial seed and compute its
    /// exact worst-case advantage over every Y with min-entropy >= k.
    WorstCase {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        k: f64,
        /// Slice count (a power of 2).
        #[arg(long)]
        t: u64,
        #[arg(long)]
        trial_seed: u64,
        /// Optionally write the optimizing Y.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MomentsCmd {
    /// Verify moment identities and the 1/17 success floor for a walk.
    Check {
        /// Inline JSON, e.g.
        /// '{"weights": [1,1,1,1], "independence": {"mode": "exhaustive-small-field", "field_bits": 4}}'.
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
}

#[derive(Subcommand)]
enum BallsCmd {
    /// Compare measured max-load offsets at two levels k < k'.
    Run {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        k_prime: u32,
        #[arg(long, default_value_t = 2_000)]
        trials: u64,
    },
}

/// Inline fixture descriptions for `dist gen`.  Random kinds draw from the
/// global seed.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum FixtureKind {
    Uniform { n: u32 },
    Flat { n: u32, points: Vec<u64> },
    FlatRandomSubset { n: u32, count: u64 },
    SpikedUniform { n: u32, spike: f64, point: u64 },
    Pushforward { n: u32, k: u32 },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(threshold_ok) => {
            if threshold_ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether the command's thresholds held; commands without a
/// threshold always return true.
fn run(cli: &Cli) -> pedl_cli::Result<bool> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match &cli.command {
        Command::Dist { cmd } => match cmd {
            DistCmd::Gen { kind, out } => {
                let kind: FixtureKind = serde_json::from_str(kind)?;
                let dist = build_fixture(&kind, seed)?;
                io::write_distribution(out, &dist)?;
                emit(
                    cli,
                    &json!({
                        "out": out,
                        "n": dist.n(),
                        "support": dist.support_len(),
                        "min_entropy": dist.min_entropy(),
                    }),
                )?;
                Ok(true)
            }
            DistCmd::Entropy { input, delta } => {
                let dist = io::read_distribution(input)?;
                let witness = dist.smoothing_witness(dist.smooth_min_entropy(*delta)?)?;
                emit(
                    cli,
                    &json!({
                        "input": input,
                        "n": dist.n(),
                        "support": dist.support_len(),
                        "min_entropy": dist.min_entropy(),
                        "delta": delta,
                        "smooth_min_entropy": dist.smooth_min_entropy(*delta)?,
                        "witness_distance": dist.statistical_distance(&witness)?,
                        "witness_min_entropy": witness.min_entropy(),
                    }),
                )?;
                Ok(true)
            }
            DistCmd::Distance { a, b } => {
                let da = io::read_distribution(a)?;
                let db = io::read_distribution(b)?;
                emit(
                    cli,
                    &json!({
                        "a": a,
                        "b": b,
                        "n": da.n(),
                        "statistical_distance": da.statistical_distance(&db)?,
                    }),
                )?;
                Ok(true)
            }
        },
        Command::Attack { cmd } => match cmd {
            AttackCmd::Run { config } => {
                let mut cfg = parse_config(config)?;
                if let Some(s) = cli.seed {
                    cfg.seed = s;
                }
                let outcome = experiment::run_experiment(&cfg, &cli.out_dir)?;
                emit(cli, &serde_json::to_value(&outcome.report)?)?;
                Ok(outcome.report.thresholds_met)
            }
            AttackCmd::Sweep { config, log2_eps_min, log2_eps_max } => {
                if log2_eps_min > log2_eps_max {
                    return Err(HarnessError::Config(vec![format!(
                        "empty sweep: log2-eps-min = {log2_eps_min} > log2-eps-max = {log2_eps_max}"
                    )]));
                }
                let mut cfg = parse_config(config)?;
                if let Some(s) = cli.seed {
                    cfg.seed = s;
                }
                let exps: Vec<i32> = (*log2_eps_min..=*log2_eps_max).collect();
                let sweep = experiment::sweep_tradeoff(&cfg, &exps, &cli.out_dir)?;
                emit(
                    cli,
                    &json!({
                        "config": cfg,
                        "rows": sweep.rows,
                        "feasible_rows": sweep.feasible_rows,
                        "all_feasible_pass": sweep.all_feasible_pass,
                        "csv": sweep.csv_path,
                    }),
                )?;
                Ok(sweep.all_feasible_pass)
            }
            AttackCmd::WorstCase { x, y, k, t, trial_seed, witness_out } => {
                if !t.is_power_of_two() {
                    return Err(HarnessError::Config(vec![format!(
                        "the slice count must be a power of 2, got {t}"
                    )]));
                }
                let dx = io::read_distribution(x)?;
                let dy = io::read_distribution(y)?;
                let mut rng = SplitMix64::new(*trial_seed);
                let sign = SignHash::sample(&mut rng);
                let slicer = SliceHash::sample(&mut rng, t.trailing_zeros())?;
                let sliced = attack::build_sliced(sign, slicer, &dx, &dy)?;
                let observed = attack::signed_advantage(&sliced, &dx, &dy, None)?;
                let (worst, witness) = attack::worst_case_advantage(&sliced, &dx, *k)?;
                if let Some(path) = witness_out {
                    io::write_distribution(path, &witness)?;
                }
                emit(
                    cli,
                    &json!({
                        "x": x,
                        "y": y,
                        "k": k,
                        "t": t,
                        "trial_seed": format!("{trial_seed:016x}"),
                        "observed_advantage": observed.abs(),
                        "worst_case_advantage": worst,
                        "witness_min_entropy": witness.min_entropy(),
                        "witness_out": witness_out,
                    }),
                )?;
                Ok(true)
            }
        },
        Command::Moments { cmd } => match cmd {
            MomentsCmd::Check { spec, trials } => {
                let spec: WalkSpec = serde_json::from_str(spec)?;
                let report = moments::walk_moments(&spec, *trials, seed)?;
                let tail = moments::anticoncentration_check(&spec, *trials, seed)?;
                let ok = report.bounds_ok && tail.pass;
                emit(
                    cli,
                    &json!({
                        "moments": report,
                        "tail": tail,
                        "success_floor": SUCCESS_FLOOR,
                        "pass": ok,
                    }),
                )?;
                Ok(ok)
            }
        },
        Command::Ballsbins { cmd } => match cmd {
            BallsCmd::Run { k, k_prime, trials } => {
                let report = ballsbins::balls_bins(*k, *k_prime, *trials, seed)?;
                let ok = report.coarse.offset_relative_error <= OFFSET_TOLERANCE
                    && report.fine.offset_relative_error <= OFFSET_TOLERANCE;
                emit(
                    cli,
                    &json!({
                        "coarse": report.coarse,
                        "fine": report.fine,
                        "offset_gap": report.offset_gap,
                        "tolerance": OFFSET_TOLERANCE,
                        "pass": ok,
                    }),
                )?;
                Ok(ok)
            }
        },
    }
}

fn build_fixture(kind: &FixtureKind, seed: u64) -> pedl_cli::Result<Distribution> {
    let stream = derive_stream(seed, 0);
    let dist = match kind {
        FixtureKind::Uniform { n } => Distribution::uniform(*n)?,
        FixtureKind::Flat { n, points } => Distribution::flat(*n, points)?,
        FixtureKind::FlatRandomSubset { n, count } => {
            Distribution::flat_random_subset(*n, *count, stream)?
        }
        FixtureKind::SpikedUniform { n, spike, point } => {
            Distribution::spiked_uniform(*n, *spike, *point)?
        }
        FixtureKind::Pushforward { n, k } => {
            Distribution::random_injective_pushforward(*n, *k, stream)?
        }
    };
    Ok(dist)
}

fn emit(cli: &Cli, value: &serde_json::Value) -> pedl_cli::Result<()> {
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value)?),
        Format::Csv => {
            let mut cells = Vec::new();
            flatten(value, String::new(), &mut cells);
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(cells.iter().map(|(k, _)| k.as_str()))
                .map_err(HarnessError::Csv)?;
            w.write_record(cells.iter().map(|(_, v)| v.as_str()))
                .map_err(HarnessError::Csv)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Flatten a JSON object into dotted-key cells for one-row CSV output.
/// Arrays keep their JSON encoding inside a single cell.
fn flatten(value: &serde_json::Value, prefix: String, out: &mut Vec<(String, String)>) {
    match value {
        serde_json::Value::Object(map) => {
            for (key, inner) in map {
                let child = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                flatten(inner, child, out);
            }
        }
        serde_json::Value::String(s) => out.push((prefix, s.clone())),
        other => out.push((prefix, other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn fixture_kinds_parse_from_inline_json() {
        let k: FixtureKind =
            serde_json::from_str(r#"{"kind": "flat", "n": 4, "points": [1, 2]}"#).unwrap();
        let d = build_fixture(&k, 0).unwrap();
        assert_eq!(d.support_len(), 2);
        assert!(serde_json::from_str::<FixtureKind>(r#"{"kind": "nope", "n": 4}"#).is_err());
    }

    #[test]
    fn flatten_uses_dotted_keys() {
        let v = json!({"a": {"b": 1.5, "c": "x"}, "d": true, "e": [1, 2]});
        let mut cells = Vec::new();
        flatten(&v, String::new(), &mut cells);
        assert_eq!(
            cells,
            vec![
                ("a.b".to_string(), "1.5".to_string()),
                ("a.c".to_string(), "x".to_string()),
                ("d".to_string(), "true".to_string()),
                ("e".to_string(), "[1,2]".to_string()),
            ]
        );
    }
}
