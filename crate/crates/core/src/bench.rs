// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte-Carlo experiment harness.
//!
//! A [`BenchmarkPlan`] names a piecewise-stationary process, the positions of
//! its change-points (fractions of `L`, each jittered uniformly by `± W`), and
//! the statistics to compare. Single-change plans score the raw maximizer of
//! each statistic; multi-change plans run the full bootstrap-thresholded
//! detector.
//!
//! Single-change metrics over errors `err_j = t̂_j − t*_j`:
//! `sE = #{|err_j| ≤ MaxErr}/N`, `B = mean(err_j)`, `RMSE = sqrt(mean(err_j²))`.
//!
//! Multi-change metrics with `err_k = min_l |t̂_l − t*_k|`:
//! `sE_k = #{err_k ≤ MaxErr}/N` and
//! `fCP = mean(#detected − #{k : err_k ≤ MaxErr})`.
//!
//! Trial `j` draws everything from seeds derived from `(master_seed, j)`, and
//! trials are reduced in index order.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::{
    default_t_min, detect_multiple, detect_single_bd, segment_and_verify, DetectionConfig,
};
use crate::error::{Error, Result};
use crate::ordinal::extract_sequence;
use crate::processes::{generate, random_change_points, ProcessKind, ProcessSpec};
use crate::seed::{derive, rng_from};
use crate::statistics::{bd_corr_profile, bd_exp_profile, ceofop_profile, StatProfile};

pub const TRIALS_SCHEMA: &str = "ceofop.bench.trials/1";
pub const SUMMARY_SCHEMA: &str = "ceofop.bench.summary/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Ceofop,
    Bdexp,
    Bdcorr,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Ceofop => "ceofop",
            Statistic::Bdexp => "bdexp",
            Statistic::Bdcorr => "bdcorr",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "ceofop" => Ok(Statistic::Ceofop),
            "bdexp" => Ok(Statistic::Bdexp),
            "bdcorr" => Ok(Statistic::Bdcorr),
            other => Err(Error::invalid(format!("unknown statistic {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Raw maximizer of each statistic, one change-point.
    Single,
    /// Full two-step detection, any number of change-points.
    Multi,
}

fn default_window() -> usize {
    256
}
fn default_order() -> usize {
    3
}
fn default_alpha() -> f64 {
    0.05
}
fn default_bd_margin() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPlan {
    pub name: String,
    pub mode: Mode,
    /// Segment parameters; the number of segments is one more than `centers`.
    pub process: ProcessKind,
    /// Change-point centers as fractions of `L`.
    pub centers: Vec<f64>,
    /// `L = length_windows · window`.
    pub length_windows: usize,
    /// Jitter half-width `W`; also the default `MaxErr`.
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub max_err: Option<usize>,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Exponent of the Brodsky–Darkhovsky weight.
    #[serde(default)]
    pub delta: f64,
    /// Single mode: Brodsky–Darkhovsky maximizers are searched only over
    /// splits leaving at least this fraction of the values on each side.
    #[serde(default = "default_bd_margin")]
    pub bd_margin: f64,
    pub statistics: Vec<Statistic>,
}

impl BenchmarkPlan {
    pub fn length(&self) -> usize {
        self.length_windows * self.window
    }

    pub fn max_err(&self) -> usize {
        self.max_err.unwrap_or(self.window)
    }

    pub fn center_times(&self) -> Vec<usize> {
        let l = self.length() as f64;
        self.centers.iter().map(|c| (c * l).round() as usize).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.statistics.is_empty() {
            return Err(Error::config("plan.statistics must name at least one statistic"));
        }
        if self.window == 0 || self.length_windows == 0 {
            return Err(Error::config("plan.window and plan.length_windows must be positive"));
        }
        if self.mode == Mode::Single && self.centers.len() != 1 {
            return Err(Error::config("plan.centers: single mode needs exactly one center"));
        }
        if !(0.0..0.5).contains(&self.bd_margin) {
            return Err(Error::config(format!("plan.bd_margin = {} outside [0, 0.5)", self.bd_margin)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::config(format!("plan.delta = {} outside [0, 1]", self.delta)));
        }
        DetectionConfig::new(self.order, self.alpha, 0)
            .map_err(|e| Error::config(format!("plan: {e}")))?;
        let spec = ProcessSpec {
            kind: self.process.clone(),
            change_points: self.center_times(),
            length: self.length(),
        };
        spec.validate().map_err(|e| Error::config(format!("plan.process: {e}")))?;
        let mut rng = rng_from(0);
        random_change_points(&self.center_times(), self.window, self.length(), &mut rng)
            .map_err(|e| Error::config(format!("plan.centers: {e}")))?;
        Ok(())
    }

    fn single(name: &str, process: ProcessKind) -> Self {
        Self {
            name: name.into(),
            mode: Mode::Single,
            process,
            centers: vec![0.25],
            length_windows: 80,
            window: 256,
            max_err: None,
            order: 3,
            alpha: 0.05,
            delta: 0.0,
            bd_margin: default_bd_margin(),
            statistics: vec![Statistic::Ceofop, Statistic::Bdexp, Statistic::Bdcorr],
        }
    }

    fn multi(name: &str, process: ProcessKind) -> Self {
        Self {
            mode: Mode::Multi,
            centers: vec![0.3, 0.7, 0.9],
            length_windows: 100,
            statistics: vec![Statistic::Ceofop, Statistic::Bdcorr],
            ..Self::single(name, process)
        }
    }

    /// The six single-change processes and the two four-segment processes.
    pub fn builtin() -> Vec<Self> {
        let nl = |r: [f64; 2], s: f64| ProcessKind::Nl { r: r.to_vec(), sigma: vec![s, s] };
        let ar = |phi: [f64; 2]| ProcessKind::Ar { phi: phi.to_vec() };
        vec![
            Self::single("nl-3.95-3.98", nl([3.95, 3.98], 0.2)),
            Self::single("nl-3.95-3.80", nl([3.95, 3.80], 0.3)),
            Self::single("nl-3.95-4.00", nl([3.95, 4.00], 0.2)),
            Self::single("ar-0.1-0.3", ar([0.1, 0.3])),
            Self::single("ar-0.1-0.4", ar([0.1, 0.4])),
            Self::single("ar-0.1-0.5", ar([0.1, 0.5])),
            Self::multi(
                "nl-multi",
                ProcessKind::Nl { r: vec![3.98, 4.0, 3.95, 3.8], sigma: vec![0.2, 0.2, 0.2, 0.3] },
            ),
            Self::multi("ar-multi", ProcessKind::Ar { phi: vec![0.3, 0.5, 0.1, 0.4] }),
        ]
    }

    pub fn builtin_named(name: &str) -> Result<Self> {
        Self::builtin()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::config(format!("no built-in plan named {name:?}")))
    }
}

/// Estimates of every statistic for one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub true_change_points: Vec<usize>,
    /// `(statistic, estimated change-points)` in plan order.
    pub estimates: Vec<(Statistic, Vec<usize>)>,
}

impl TrialResult {
    /// Signed errors (single mode) or nearest-estimate distances (multi mode),
    /// one per true change-point. `None` where nothing was estimated.
    pub fn errors(&self, stat_estimates: &[usize], mode: Mode) -> Vec<Option<i64>> {
        self.true_change_points
            .iter()
            .map(|&t| match mode {
                Mode::Single => stat_estimates.first().map(|&e| e as i64 - t as i64),
                Mode::Multi => stat_estimates.iter().map(|&e| (e as i64 - t as i64).abs()).min(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleMetrics {
    pub se: f64,
    pub bias: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiMetrics {
    /// `sE_k` for each true change-point.
    pub se: Vec<f64>,
    pub se_average: f64,
    pub fcp: f64,
}

/// `sE`, bias and RMSE of signed errors.
pub fn single_change_metrics(errors: &[i64], max_err: usize) -> Result<SingleMetrics> {
    if errors.is_empty() {
        return Err(Error::invalid("no trials to summarize"));
    }
    let n = errors.len() as f64;
    let ok = errors.iter().filter(|e| e.unsigned_abs() as usize <= max_err).count();
    let bias = errors.iter().map(|&e| e as f64).sum::<f64>() / n;
    let mse = errors.iter().map(|&e| (e as f64) * (e as f64)).sum::<f64>() / n;
    Ok(SingleMetrics { se: ok as f64 / n, bias, rmse: mse.sqrt() })
}

/// `sE_k` and `fCP` from detected and true change-points of each trial.
pub fn multi_change_metrics(trials: &[(Vec<usize>, Vec<usize>)], max_err: usize) -> Result<MultiMetrics> {
    if trials.is_empty() {
        return Err(Error::invalid("no trials to summarize"));
    }
    let n_true = trials[0].1.len();
    if trials.iter().any(|(_, t)| t.len() != n_true) {
        return Err(Error::invalid("trials disagree on the number of true change-points"));
    }
    let mut hits = vec![0usize; n_true];
    let mut false_total = 0i64;
    for (detected, truth) in trials {
        let mut matched = 0i64;
        for (k, &t) in truth.iter().enumerate() {
            let err = detected.iter().map(|&e| e.abs_diff(t)).min();
            if err.is_some_and(|e| e <= max_err) {
                hits[k] += 1;
                matched += 1;
            }
        }
        false_total += detected.len() as i64 - matched;
    }
    let n = trials.len() as f64;
    let se: Vec<f64> = hits.iter().map(|&h| h as f64 / n).collect();
    let se_average = if n_true == 0 { 0.0 } else { se.iter().sum::<f64>() / n_true as f64 };
    Ok(MultiMetrics { se, se_average, fcp: false_total as f64 / n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticSummary {
    pub statistic: Statistic,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub single: Option<SingleMetrics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub multi: Option<MultiMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub schema: String,
    pub plan: BenchmarkPlan,
    pub n_trials: usize,
    pub master_seed: u64,
    pub statistics: Vec<StatisticSummary>,
}

impl BenchmarkSummary {
    pub fn get(&self, stat: Statistic) -> Option<&StatisticSummary> {
        self.statistics.iter().find(|s| s.statistic == stat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutput {
    pub trials: Vec<TrialResult>,
    pub summary: BenchmarkSummary,
}

/// Maximizer of a Brodsky–Darkhovsky profile over splits `p` with at least
/// `margin · n` of the `n` values on each side, as the index `p − 1` of the
/// last value before the split.
fn bd_argmax(profile: &StatProfile<f64>, margin: f64) -> Vec<usize> {
    let n = profile.t_values().last().map_or(0, |&t| t + 1);
    let m = ((margin * n as f64).ceil() as usize).max(1);
    let mut best: Option<(usize, f64)> = None;
    for (p, v) in profile.iter() {
        if p >= m && p + m <= n && best.is_none_or(|(_, b)| v > b) {
            best = Some((p, v));
        }
    }
    best.map(|(p, _)| p - 1).into_iter().collect()
}

fn run_trial(plan: &BenchmarkPlan, trial: usize, master_seed: u64) -> Result<TrialResult> {
    let trial_seed = derive(master_seed, trial as u64);
    let l = plan.length();
    let cps = random_change_points(&plan.center_times(), plan.window, l, &mut rng_from(derive(trial_seed, 0)))?;
    let spec = ProcessSpec { kind: plan.process.clone(), change_points: cps.clone(), length: l };
    let x: Vec<f64> = generate(&spec, derive(trial_seed, 1))?;
    let t_min = default_t_min(plan.order);

    let mut estimates = Vec::with_capacity(plan.statistics.len());
    for (s_idx, &stat) in plan.statistics.iter().enumerate() {
        let det_seed = derive(trial_seed, 2 + s_idx as u64);
        let est = match (plan.mode, stat) {
            (Mode::Single, Statistic::Ceofop) => {
                let seq = extract_sequence(&x, plan.order)?;
                ceofop_profile::<f64>(&seq, t_min)?.argmax_t().into_iter().collect()
            }
            // a split after the first p values puts the change at index p − 1
            (Mode::Single, Statistic::Bdexp) => bd_argmax(&bd_exp_profile(&x, plan.delta)?, plan.bd_margin),
            (Mode::Single, Statistic::Bdcorr) => bd_argmax(&bd_corr_profile(&x, plan.delta)?, plan.bd_margin),
            (Mode::Multi, Statistic::Ceofop) => {
                let seq = extract_sequence(&x, plan.order)?;
                let cfg = DetectionConfig::new(plan.order, plan.alpha, det_seed)?;
                detect_multiple::<f64>(&seq, &cfg)?.change_points
            }
            (Mode::Multi, Statistic::Bdexp | Statistic::Bdcorr) => {
                let values: Vec<f64> = if stat == Statistic::Bdcorr {
                    x.windows(2).map(|w| w[0] * w[1]).collect()
                } else {
                    x.clone()
                };
                let (b, _) = segment_and_verify::<f64, _>(0, values.len() - 1, 1, plan.alpha, det_seed, |lo, hi, a, seed| {
                    detect_single_bd(&values[lo..=hi], lo, a, plan.delta, t_min, plan.order + 1, None, seed)
                })?;
                b
            }
        };
        estimates.push((stat, est));
    }
    Ok(TrialResult { trial, true_change_points: cps, estimates })
}

/// Summary of already-computed trials.
pub fn summarize(plan: &BenchmarkPlan, trials: &[TrialResult], master_seed: u64) -> Result<BenchmarkSummary> {
    let statistics = plan
        .statistics
        .iter()
        .map(|&stat| {
            let est = |t: &TrialResult| -> Vec<usize> {
                t.estimates.iter().find(|(s, _)| *s == stat).map(|(_, e)| e.clone()).unwrap_or_default()
            };
            match plan.mode {
                Mode::Single => {
                    let errors = trials
                        .iter()
                        .map(|t| {
                            t.errors(&est(t), Mode::Single)[0].ok_or_else(|| {
                                Error::invalid(format!("trial {} has no {} estimate", t.trial, stat.name()))
                            })
                        })
                        .collect::<Result<Vec<i64>>>()?;
                    Ok(StatisticSummary {
                        statistic: stat,
                        single: Some(single_change_metrics(&errors, plan.max_err())?),
                        multi: None,
                    })
                }
                Mode::Multi => {
                    let pairs: Vec<(Vec<usize>, Vec<usize>)> =
                        trials.iter().map(|t| (est(t), t.true_change_points.clone())).collect();
                    Ok(StatisticSummary {
                        statistic: stat,
                        single: None,
                        multi: Some(multi_change_metrics(&pairs, plan.max_err())?),
                    })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkSummary {
        schema: SUMMARY_SCHEMA.into(),
        plan: plan.clone(),
        n_trials: trials.len(),
        master_seed,
        statistics,
    })
}

/// Run `n_trials` seeded realizations of a plan.
pub fn run_benchmark(plan: &BenchmarkPlan, n_trials: usize, master_seed: u64) -> Result<BenchmarkOutput> {
    plan.validate()?;
    if n_trials == 0 {
        return Err(Error::config("number of trials must be positive"));
    }
    let trials = (0..n_trials)
        .into_par_iter()
        .map(|j| run_trial(plan, j, master_seed))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(plan, &trials, master_seed)?;
    Ok(BenchmarkOutput { trials, summary })
}

/// Single-change summaries for several lengths `L = m·W`.
pub fn run_length_sweep(
    plan: &BenchmarkPlan,
    length_windows: &[usize],
    n_trials: usize,
    master_seed: u64,
) -> Result<Vec<BenchmarkSummary>> {
    length_windows
        .iter()
        .map(|&m| {
            let p = BenchmarkPlan { length_windows: m, ..plan.clone() };
            Ok(run_benchmark(&p, n_trials, master_seed)?.summary)
        })
        .collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn join_opt(v: &[Option<i64>]) -> String {
    v.iter().map(|x| x.map_or_else(|| "NA".to_string(), |e| e.to_string())).collect::<Vec<_>>().join(";")
}

/// Per-trial CSV: one row per `(trial, statistic)`.
///
/// Columns: `schema,trial,statistic,true_change_points,estimates,errors`;
/// list cells are `;`-separated and a missing error is `NA`.
pub fn trials_to_csv(plan: &BenchmarkPlan, trials: &[TrialResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(["schema", "trial", "statistic", "true_change_points", "estimates", "errors"]).map_err(ser)?;
    for t in trials {
        for (stat, est) in &t.estimates {
            w.write_record([
                TRIALS_SCHEMA.to_string(),
                t.trial.to_string(),
                stat.name().to_string(),
                join(&t.true_change_points),
                join(est),
                join_opt(&t.errors(est, plan.mode)),
            ])
            .map_err(ser)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

fn split_list(s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|v| v.parse().map_err(|_| Error::invalid(format!("bad list entry {v:?}"))))
        .collect()
}

/// Inverse of [`trials_to_csv`].
pub fn trials_from_csv(text: &str) -> Result<Vec<TrialResult>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out: Vec<TrialResult> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Serialization(e.to_string()))?;
        if rec.len() != 6 || &rec[0] != TRIALS_SCHEMA {
            return Err(Error::invalid(format!("unexpected row {rec:?}")));
        }
        let trial: usize = rec[1].parse().map_err(|_| Error::invalid("bad trial index"))?;
        let stat = Statistic::parse(&rec[2])?;
        let truth = split_list(&rec[3])?;
        let est = split_list(&rec[4])?;
        match out.last_mut() {
            Some(t) if t.trial == trial => t.estimates.push((stat, est)),
            _ => out.push(TrialResult { trial, true_change_points: truth, estimates: vec![(stat, est)] }),
        }
    }
    Ok(out)
}

pub fn summary_to_json(summary: &BenchmarkSummary) -> Result<String> {
    let mut s = serde_json::to_string_pretty(summary).map_err(|e| Error::Serialization(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Fixed-width text table of a summary.
pub fn summary_table(summary: &BenchmarkSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} (N = {}, seed = {})", summary.plan.name, summary.n_trials, summary.master_seed);
    for s in &summary.statistics {
        if let Some(m) = &s.single {
            let _ = writeln!(out, "  {:<7} sE {:.3}  B {:>8.1}  RMSE {:>8.1}", s.statistic.name(), m.se, m.bias, m.rmse);
        }
        if let Some(m) = &s.multi {
            let ks: Vec<String> = m.se.iter().map(|v| format!("{v:.3}")).collect();
            let _ = writeln!(
                out,
                "  {:<7} fCP {:.2}  sE_k [{}]  average {:.3}",
                s.statistic.name(),
                m.fcp,
                ks.join(", "),
                m.se_average
            );
        }
    }
    out
}
