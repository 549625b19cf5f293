// SPDX-License-Identifier: MIT OR Apache-2.0

//! Bootstrap-calibrated change-point detection.
//!
//! [`detect_single`] looks for at most one change-point: it maximizes CEofOP
//! over splits at least `T_min` patterns away from both ends and accepts the
//! maximizer if its value reaches a threshold taken from block-bootstrap
//! surrogates of the same sequence. [`detect_multiple`] runs binary
//! segmentation with the doubled false-alarm level `2α`, then re-checks every
//! boundary on the union of its two neighbouring segments at level `α`.
//!
//! Bootstrap replicates are computed in parallel, each from its own seed
//! derived from the call seed and the replicate index, and reduced in index
//! order, so results do not depend on the thread count.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::XlnxTable;
use crate::error::{Error, Result};
use crate::ordinal::{pattern_count, PatternSequence, MAX_COUNT_ORDER};
use crate::scalar::Real;
use crate::seed::{derive, rng_from};
use crate::statistics::{admissible_range, bd_exp_profile, scan_ceofop, StatProfile};

/// Guard for `⌊5/α⌋` and `⌊α N⌋` against representation error in `α`.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub order: usize,
    /// Nominal false-alarm probability.
    pub alpha: f64,
    /// Minimal segment length in patterns.
    pub t_min: usize,
    pub n_boot_override: Option<usize>,
    pub master_seed: u64,
    /// Keep every examined CEofOP profile in the report.
    #[serde(default)]
    pub keep_profiles: bool,
}

impl DetectionConfig {
    pub fn new(order: usize, alpha: f64, master_seed: u64) -> Result<Self> {
        let c = Self {
            order,
            alpha,
            t_min: default_t_min(order),
            n_boot_override: None,
            master_seed,
            keep_profiles: false,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order > MAX_COUNT_ORDER {
            return Err(Error::config(format!("order must be in 1..={MAX_COUNT_ORDER}, got {}", self.order)));
        }
        check_alpha(self.alpha)?;
        if self.t_min == 0 {
            return Err(Error::config("t_min must be at least 1"));
        }
        if self.n_boot_override == Some(0) {
            return Err(Error::config("n_boot_override must be positive"));
        }
        Ok(())
    }

    /// Shortest series (in values) that can hold a detectable change: `2 T_min + 1` patterns.
    pub fn min_series_len(&self) -> usize {
        2 * self.t_min + self.order + 1
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha must be in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// `(d+1)!(d+1)`, the number of possible pattern pairs of order `d`.
pub fn default_t_min(order: usize) -> usize {
    pattern_count(order) * (order + 1)
}

/// `⌊5/α⌋` bootstrap replicates.
pub fn n_boot_for(alpha: f64) -> usize {
    ((5.0 / alpha + FLOOR_SLACK).floor() as usize).max(1)
}

/// The `⌊α N⌋`-th largest replicate maximum (1-based, clamped to `[1, N]`).
pub fn threshold_from_maxima<F: Real>(maxima: &[F], alpha: f64) -> Option<F> {
    if maxima.is_empty() {
        return None;
    }
    let mut sorted = maxima.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let idx = ((alpha * sorted.len() as f64 + FLOOR_SLACK).floor() as usize).clamp(1, sorted.len());
    Some(sorted[idx - 1])
}

/// Pattern time to series time. The estimate is the last pattern before the
/// transitional window, which indexes the last pre-change value directly.
pub fn map_to_series_time(pattern_time: usize, _order: usize) -> usize {
    pattern_time
}

/// Cut `codes` into consecutive blocks of `block` codes (the last may be
/// shorter) and concatenate them in a uniformly random order.
pub fn block_shuffle(codes: &[u32], block: usize, seed: u64) -> Vec<u32> {
    let mut blocks: Vec<&[u32]> = codes.chunks(block.max(1)).collect();
    blocks.shuffle(&mut rng_from(seed));
    blocks.concat()
}

/// [`block_shuffle`] together with the junction mask of the result:
/// `cut[l]` is set when `l` is the last position of a block and `l + 1` starts
/// the next one, so the pair at `l` never occurred in `codes`.
pub fn block_shuffle_with_cuts(codes: &[u32], block: usize, seed: u64) -> (Vec<u32>, Vec<bool>) {
    let mut blocks: Vec<&[u32]> = codes.chunks(block.max(1)).collect();
    blocks.shuffle(&mut rng_from(seed));
    let mut cut = vec![false; codes.len()];
    let mut pos = 0;
    for b in &blocks {
        pos += b.len();
        cut[pos - 1] = true;
    }
    (blocks.concat(), cut)
}

/// Result of one single-change test on a segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Deserialize<'de>"))]
pub struct SingleOutcome<F> {
    /// Pattern-time range `[t_start, t_end]` examined.
    pub segment: (usize, usize),
    pub alpha: f64,
    /// Maximizer of CEofOP and its value; `None` when the segment is too short.
    pub candidate: Option<(usize, F)>,
    pub threshold: Option<F>,
    pub n_boot: usize,
    pub detected: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub profile: Option<StatProfile<F>>,
}

/// Test one pattern sequence for at most one change-point at level `alpha`.
pub fn detect_single<F: Real>(
    seq: &PatternSequence,
    alpha: f64,
    cfg: &DetectionConfig,
    seed: u64,
) -> Result<SingleOutcome<F>> {
    cfg.validate()?;
    check_alpha(alpha)?;
    if seq.order() != cfg.order {
        return Err(Error::config(format!(
            "sequence order {} differs from configured order {}",
            seq.order(),
            cfg.order
        )));
    }
    let (t_start, t_end) = (seq.start_time(), seq.end_time());
    let mut outcome = SingleOutcome {
        segment: (t_start, t_end),
        alpha,
        candidate: None,
        threshold: None,
        n_boot: 0,
        detected: None,
        profile: None,
    };
    if t_end - t_start < 2 * cfg.t_min {
        return Ok(outcome);
    }
    let Some(range) = admissible_range(t_start, t_end, cfg.order, cfg.t_min) else {
        return Ok(outcome);
    };

    let table = XlnxTable::<F>::new(seq.len());
    let mut best: Option<(usize, F)> = None;
    let mut kept = cfg.keep_profiles.then(|| (Vec::new(), Vec::new()));
    scan_ceofop(seq.codes(), None, t_start, cfg.order, range, &table, |t, v| {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((t, v));
        }
        if let Some((ts, vs)) = kept.as_mut() {
            ts.push(t);
            vs.push(v);
        }
    });
    let (t_hat, s_hat) = best.expect("admissible range is non-empty");
    outcome.candidate = best;
    outcome.profile = kept.map(|(ts, vs)| StatProfile::new(ts, vs).expect("increasing times"));

    let n_boot = cfg.n_boot_override.unwrap_or_else(|| n_boot_for(alpha));
    let block = cfg.order + 1;
    let maxima: Vec<F> = (0..n_boot as u64)
        .into_par_iter()
        .map(|l| {
            let (surrogate, cut) = block_shuffle_with_cuts(seq.codes(), block, derive(seed, l));
            let mut m = F::neg_infinity();
            scan_ceofop(&surrogate, Some(&cut), t_start, cfg.order, range, &table, |_, v| m = m.max(v));
            m
        })
        .collect();
    let h = threshold_from_maxima(&maxima, alpha).expect("at least one replicate");
    outcome.n_boot = n_boot;
    outcome.threshold = Some(h);
    if s_hat >= h {
        outcome.detected = Some(t_hat);
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Preliminary,
    Verification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Deserialize<'de>"))]
pub struct LogEntry<F> {
    pub stage: Stage,
    #[serde(flatten)]
    pub outcome: SingleOutcome<F>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Deserialize<'de>"))]
pub struct DetectionReport<F> {
    /// Estimated change-points as 0-based series indices, increasing.
    pub change_points: Vec<usize>,
    pub n_segments: usize,
    pub order: usize,
    pub alpha: f64,
    pub t_min: usize,
    pub master_seed: u64,
    /// Every single-change test, in execution order.
    pub log: Vec<LogEntry<F>>,
}

/// Report for at most one change-point.
pub fn detect_single_report<F: Real>(seq: &PatternSequence, cfg: &DetectionConfig) -> Result<DetectionReport<F>> {
    let outcome = detect_single::<F>(seq, cfg.alpha, cfg, derive(cfg.master_seed, 0))?;
    let change_points: Vec<usize> =
        outcome.detected.map(|t| map_to_series_time(t, cfg.order)).into_iter().collect();
    Ok(DetectionReport {
        n_segments: change_points.len() + 1,
        change_points,
        order: cfg.order,
        alpha: cfg.alpha,
        t_min: cfg.t_min,
        master_seed: cfg.master_seed,
        log: vec![LogEntry { stage: Stage::Preliminary, outcome }],
    })
}

/// Binary segmentation at level `2α` followed by boundary verification at level `α`.
pub fn detect_multiple<F: Real>(seq: &PatternSequence, cfg: &DetectionConfig) -> Result<DetectionReport<F>> {
    cfg.validate()?;
    let d = cfg.order;
    let (boundaries, log) = segment_and_verify(seq.start_time(), seq.end_time(), d, cfg.alpha, cfg.master_seed, |lo, hi, a, seed| {
        detect_single::<F>(&seq.slice(lo, hi)?, a, cfg, seed)
    })?;
    let change_points: Vec<usize> = boundaries.iter().map(|&t| map_to_series_time(t, d)).collect();
    Ok(DetectionReport {
        n_segments: change_points.len() + 1,
        change_points,
        order: d,
        alpha: cfg.alpha,
        t_min: cfg.t_min,
        master_seed: cfg.master_seed,
        log,
    })
}

/// The two-step multiple change-point procedure over positions `first..=last`.
///
/// A boundary `b` ends one segment; the next segment starts at `b + gap`.
/// `single(lo, hi, alpha, seed)` tests the range `[lo, hi]`. Returns the
/// interior boundaries and the log of every test.
pub fn segment_and_verify<F, S>(
    first: usize,
    last: usize,
    gap: usize,
    alpha: f64,
    master_seed: u64,
    mut single: S,
) -> Result<(Vec<usize>, Vec<LogEntry<F>>)>
where
    S: FnMut(usize, usize, f64, u64) -> Result<SingleOutcome<F>>,
{
    check_alpha(alpha)?;
    let alpha_step1 = (2.0 * alpha).min(1.0 - f64::EPSILON);
    let mut log = Vec::new();
    let mut calls = 0u64;
    let mut run = |b_lo: isize, hi: isize, a: f64, stage: Stage, log: &mut Vec<LogEntry<F>>| -> Result<Option<usize>> {
        let seed = derive(master_seed, calls);
        calls += 1;
        let lo = b_lo + gap as isize;
        if lo > hi {
            return Ok(None);
        }
        let outcome = single(lo as usize, hi as usize, a, seed)?;
        let found = outcome.detected;
        log.push(LogEntry { stage, outcome });
        Ok(found)
    };

    let mut b: Vec<isize> = vec![first as isize - gap as isize, last as isize];

    // Step 1: split until no segment yields a detection.
    let mut k = 0;
    while k + 1 < b.len() {
        match run(b[k], b[k + 1], alpha_step1, Stage::Preliminary, &mut log)? {
            Some(t) => b.insert(k + 1, t as isize),
            None => k += 1,
        }
    }

    // Step 2: re-test each boundary on the union of its neighbours.
    let mut k = 0;
    while k + 2 < b.len() {
        match run(b[k], b[k + 2], alpha, Stage::Verification, &mut log)? {
            Some(t) => {
                b[k + 1] = t as isize;
                k += 1;
            }
            None => {
                b.remove(k + 1);
            }
        }
    }

    Ok((b[1..b.len() - 1].iter().map(|&t| t as usize).collect(), log))
}

/// Single-change test with a Brodsky–Darkhovsky mean statistic on `values`,
/// thresholded with the same block bootstrap as CEofOP.
///
/// `values[0]` sits at absolute position `offset`. A split keeping the first
/// `p` values on the left reports boundary `offset + p − 1`, and both parts
/// hold at least `t_min` values.
#[allow(clippy::too_many_arguments)]
pub fn detect_single_bd<F: Real>(
    values: &[F],
    offset: usize,
    alpha: f64,
    delta: F,
    t_min: usize,
    block: usize,
    n_boot: Option<usize>,
    seed: u64,
) -> Result<SingleOutcome<F>> {
    check_alpha(alpha)?;
    let n = values.len();
    let mut outcome = SingleOutcome {
        segment: (offset, offset + n.saturating_sub(1)),
        alpha,
        candidate: None,
        threshold: None,
        n_boot: 0,
        detected: None,
        profile: None,
    };
    if n == 0 || n - 1 < 2 * t_min || t_min == 0 {
        return Ok(outcome);
    }
    let best_split = |v: &[F]| -> Result<(usize, F)> {
        let prof = bd_exp_profile(v, delta)?;
        let mut best: Option<(usize, F)> = None;
        for (p, s) in prof.iter().filter(|&(p, _)| p >= t_min && p <= n - t_min) {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((p, s));
            }
        }
        Ok(best.expect("range holds at least one split"))
    };
    let (p_hat, s_hat) = best_split(values)?;
    outcome.candidate = Some((offset + p_hat - 1, s_hat));

    let n_boot = n_boot.unwrap_or_else(|| n_boot_for(alpha));
    let maxima = (0..n_boot as u64)
        .into_par_iter()
        .map(|l| {
            let idx: Vec<u32> = (0..n as u32).collect();
            let order = block_shuffle(&idx, block, derive(seed, l));
            let surrogate: Vec<F> = order.iter().map(|&i| values[i as usize]).collect();
            best_split(&surrogate).map(|(_, s)| s)
        })
        .collect::<Result<Vec<F>>>()?;
    let h = threshold_from_maxima(&maxima, alpha).expect("at least one replicate");
    outcome.n_boot = n_boot;
    outcome.threshold = Some(h);
    if s_hat >= h {
        outcome.detected = Some(offset + p_hat - 1);
    }
    Ok(outcome)
}
