// SPDX-License-Identifier: MIT OR Apache-2.0

//! `ceofop` command-line tool.
//!
//! Exit status: 0 on success, 2 for usage errors, 3 for unreadable or
//! malformed files, 4 for inputs or configs that fail validation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ceofop::asymptotics::{delta_grid, delta_max, mc_pair_distribution};
use ceofop::bench::{self, BenchmarkPlan, Mode};
use ceofop::detection::{detect_multiple, detect_single_report, DetectionConfig, DetectionReport};
use ceofop::ordinal::{extract_sequence, pattern_count};
use ceofop::processes::{generate, ProcessSpec};
use ceofop::statistics::{bd_corr_profile, bd_exp_profile, ceofop_profile};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

mod input;

const DETECT_SCHEMA: &str = "ceofop.detect/1";
const PROFILE_SCHEMA: &str = "ceofop.profile/1";
const SERIES_SCHEMA: &str = "ceofop.series/1";
const DELTA_SCHEMA: &str = "ceofop.delta/1";
const SWEEP_SCHEMA: &str = "ceofop.bench.sweep/1";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

impl From<ceofop::Error> for CliError {
    fn from(e: ceofop::Error) -> Self {
        match e {
            ceofop::Error::Serialization(m) => CliError::Io(m),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "ceofop", version, about = "Ordinal change-point detection with the CEofOP statistic")]
struct Cli {
    /// Worker threads for bootstrap replicates and benchmark trials.
    #[arg(long, global = true, env = "CEOFOP_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect change-points in a series file and write a JSON report.
    Detect {
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Bootstrap seed; a fresh one is generated and printed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        /// Look for any number of change-points instead of at most one.
        #[arg(long)]
        multi: bool,
        /// CSV column (name or 0-based index) holding the series.
        #[arg(long)]
        column: Option<String>,
        /// Include every examined CEofOP profile in the report.
        #[arg(long)]
        keep_profiles: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a statistic profile as CSV.
    Profile {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Stat::Ceofop)]
        stat: Stat,
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Skip this many splits at each end of the CEofOP profile.
        #[arg(long, default_value_t = 0)]
        t_min: usize,
        /// Exponent of the Brodsky–Darkhovsky weight.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long)]
        column: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a piecewise-stationary process described by a TOML file.
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte-Carlo benchmark and write per-trial CSV and summary JSON.
    Bench {
        /// Benchmark plan (TOML).
        #[arg(long, conflicts_with = "builtin")]
        plan: Option<PathBuf>,
        /// Name of a built-in plan; see --list.
        #[arg(long)]
        builtin: Option<String>,
        /// Print the built-in plans and exit.
        #[arg(long)]
        list: bool,
        /// Number of trials [default: 1000 single-change, 500 multi-change].
        #[arg(long)]
        trials: Option<usize>,
        /// Use 10000 trials.
        #[arg(long, conflicts_with = "trials")]
        full: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Also run the plan at these lengths (in windows), e.g. 24:120:4.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Tabulate the large-sample limit of CEofOP/L for a change from P to Q.
    Delta {
        /// Single-segment process (TOML) for the first part.
        #[arg(long)]
        p: PathBuf,
        /// Single-segment process for the second part; defaults to P.
        #[arg(long)]
        q: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value = "0.05:0.95:0.05")]
        theta_grid: String,
        /// Length of the simulated series used to estimate each distribution.
        #[arg(long, default_value_t = 1_000_000)]
        l_mc: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Stat {
    Ceofop,
    Bdexp,
    Bdcorr,
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos() as u64);
        let s = ceofop::seed::mix64(nanos ^ u64::from(std::process::id()).rotate_left(32));
        eprintln!("seed: {s}");
        s
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn check_length(values: usize, cfg: &DetectionConfig) -> Result<(), CliError> {
    let need = cfg.min_series_len();
    if values < need {
        let d = cfg.order;
        return Err(CliError::Validation(format!(
            "series has {values} values; order {d} needs at least 2·(d+1)!·(d+1) + 1 = {} ordinal patterns, i.e. {need} values",
            2 * pattern_count(d) * (d + 1) + 1
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct DetectOutput<'a> {
    schema: &'static str,
    input: String,
    values: usize,
    multi: bool,
    #[serde(flatten)]
    report: &'a DetectionReport<f64>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_detect(
    input: &Path,
    order: usize,
    alpha: f64,
    seed: Option<u64>,
    multi: bool,
    column: Option<&str>,
    keep_profiles: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let x = input::read_series(input, column)?;
    let mut cfg = DetectionConfig::new(order, alpha, 0)?;
    cfg.keep_profiles = keep_profiles;
    check_length(x.len(), &cfg)?;
    cfg.master_seed = resolve_seed(seed);
    let seq = extract_sequence(&x, order)?;
    let report = if multi { detect_multiple::<f64>(&seq, &cfg)? } else { detect_single_report::<f64>(&seq, &cfg)? };
    let doc = DetectOutput { schema: DETECT_SCHEMA, input: input.display().to_string(), values: x.len(), multi, report: &report };
    emit(out, &to_json(&doc)?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_profile(
    input: &Path,
    stat: Stat,
    order: usize,
    t_min: usize,
    delta: f64,
    column: Option<&str>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let x = input::read_series(input, column)?;
    let (name, rows): (&str, Vec<(usize, f64)>) = match stat {
        Stat::Ceofop => {
            let seq = extract_sequence(&x, order)?;
            ("ceofop", ceofop_profile::<f64>(&seq, t_min)?.iter().collect())
        }
        // a split after the first p values is reported at index p − 1
        Stat::Bdexp => ("bdexp", bd_exp_profile(&x, delta)?.iter().map(|(p, v)| (p - 1, v)).collect()),
        Stat::Bdcorr => ("bdcorr", bd_corr_profile(&x, delta)?.iter().map(|(p, v)| (p - 1, v)).collect()),
    };
    let mut text = String::from("schema,statistic,t,value\n");
    for (t, v) in rows {
        text.push_str(&format!("{PROFILE_SCHEMA},{name},{t},{v}\n"));
    }
    emit(out, &text)
}

fn cmd_simulate(spec_path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<(), CliError> {
    let spec: ProcessSpec = input::read_toml(spec_path)?;
    spec.validate().map_err(|e| CliError::Validation(format!("{}: {e}", spec_path.display())))?;
    let seed = resolve_seed(seed);
    let x: Vec<f64> = generate(&spec, seed)?;
    let mut text = format!(
        "# schema: {SERIES_SCHEMA}\n# seed: {seed}\n# change_points: {:?}\n# spec: {}\n",
        spec.change_points,
        serde_json::to_string(&spec).map_err(|e| CliError::Io(e.to_string()))?
    );
    for v in x {
        text.push_str(&format!("{v}\n"));
    }
    emit(out, &text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    plan: Option<&Path>,
    builtin: Option<&str>,
    list: bool,
    trials: Option<usize>,
    full: bool,
    seed: Option<u64>,
    sweep: Option<&str>,
    out_dir: &Path,
) -> Result<(), CliError> {
    if list {
        let mut text = String::new();
        for p in BenchmarkPlan::builtin() {
            text.push_str(&format!("{}\n", p.name));
        }
        return emit(None, &text);
    }
    let plan = match (plan, builtin) {
        (Some(path), _) => {
            let plan: BenchmarkPlan = input::read_toml(path)?;
            plan.validate().map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            plan
        }
        (None, Some(name)) => BenchmarkPlan::builtin_named(name)?,
        (None, None) => return Err(CliError::Validation("give --plan FILE or --builtin NAME (see --list)".into())),
    };
    let n = match (trials, full) {
        (Some(n), _) => n,
        (None, true) => 10_000,
        (None, false) if plan.mode == Mode::Single => 1000,
        (None, false) => 500,
    };
    let seed = resolve_seed(seed);
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let out = bench::run_benchmark(&plan, n, seed)?;
    let csv_path = out_dir.join(format!("{}.trials.csv", plan.name));
    let json_path = out_dir.join(format!("{}.summary.json", plan.name));
    emit(Some(&csv_path), &bench::trials_to_csv(&plan, &out.trials)?)?;
    emit(Some(&json_path), &bench::summary_to_json(&out.summary)?)?;
    let mut text = bench::summary_table(&out.summary);

    if let Some(grid) = sweep {
        let lengths: Vec<usize> = input::parse_grid(grid)?
            .into_iter()
            .map(|v| if v >= 1.0 && v.fract() == 0.0 { Ok(v as usize) } else { Err(()) })
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Validation(format!("--sweep {grid:?}: lengths must be positive integers")))?;
        let summaries = bench::run_length_sweep(&plan, &lengths, n, seed)?;
        let mut csv = String::from("schema,length_windows,statistic,se,bias,rmse,se_average,fcp\n");
        for s in &summaries {
            for st in &s.statistics {
                let (se, b, r) = st.single.map_or((String::new(), String::new(), String::new()), |m| {
                    (m.se.to_string(), m.bias.to_string(), m.rmse.to_string())
                });
                let (avg, fcp) = st
                    .multi
                    .as_ref()
                    .map_or((String::new(), String::new()), |m| (m.se_average.to_string(), m.fcp.to_string()));
                csv.push_str(&format!(
                    "{SWEEP_SCHEMA},{},{},{se},{b},{r},{avg},{fcp}\n",
                    s.plan.length_windows,
                    st.statistic.name()
                ));
            }
        }
        emit(Some(&out_dir.join(format!("{}.sweep.csv", plan.name))), &csv)?;
        text.push_str(&format!("length sweep over {} lengths written\n", lengths.len()));
    }
    emit(None, &text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_delta(
    p: &Path,
    q: Option<&Path>,
    order: usize,
    gamma: f64,
    theta_grid: &str,
    l_mc: usize,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let thetas = input::parse_grid(theta_grid)?;
    let load = |path: &Path| -> Result<ProcessSpec, CliError> {
        let spec: ProcessSpec = input::read_toml(path)?;
        spec.validate().map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Ok(spec)
    };
    let seed = resolve_seed(seed);
    let p_dist = mc_pair_distribution::<f64>(&load(p)?, order, l_mc, ceofop::seed::derive(seed, 0))?;
    let q_dist = match q {
        Some(q) if q != p => mc_pair_distribution::<f64>(&load(q)?, order, l_mc, ceofop::seed::derive(seed, 1))?,
        _ => p_dist.clone(),
    };
    let rows = delta_grid(gamma, &thetas, &p_dist, &q_dist)?;
    eprintln!("delta_max = {}", delta_max(gamma, &p_dist, &q_dist)?);
    let mut text = String::from("schema,gamma,theta,delta\n");
    for (theta, v) in rows {
        text.push_str(&format!("{DELTA_SCHEMA},{gamma},{theta},{v}\n"));
    }
    emit(out, &text)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Detect { input, order, alpha, seed, multi, column, keep_profiles, out } => {
            cmd_detect(&input, order, alpha, seed, multi, column.as_deref(), keep_profiles, out.as_deref())
        }
        Command::Profile { input, stat, order, t_min, delta, column, out } => {
            cmd_profile(&input, stat, order, t_min, delta, column.as_deref(), out.as_deref())
        }
        Command::Simulate { spec, seed, out } => cmd_simulate(&spec, seed, out.as_deref()),
        Command::Bench { plan, builtin, list, trials, full, seed, sweep, out_dir } => cmd_bench(
            plan.as_deref(),
            builtin.as_deref(),
            list,
            trials,
            full,
            seed,
            sweep.as_deref(),
            &out_dir,
        ),
        Command::Delta { p, q, order, gamma, theta_grid, l_mc, seed, out } => {
            cmd_delta(&p, q.as_deref(), order, gamma, &theta_grid, l_mc, seed, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ceofop::detection::default_t_min;

    #[test]
    fn length_message_cites_the_bound() {
        let cfg = DetectionConfig::new(3, 0.05, 0).unwrap();
        assert_eq!(default_t_min(3), 96);
        let e = check_length(100, &cfg).unwrap_err();
        assert!(e.to_string().contains("2·(d+1)!·(d+1) + 1 = 193"), "{e}");
        assert_eq!(e.exit_code(), 4);
        assert!(check_length(196, &cfg).is_ok());
        assert!(check_length(195, &cfg).is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
