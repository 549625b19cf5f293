// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change-point statistics.
//!
//! For a pattern sequence `π(s), ..., π(e)` of order `d` and a split time
//! `t` with `s < t < e − d`, CEofOP compares the whole sequence with the part
//! before `t` (pairs `l ∈ [s, t − 1]`) and the part after `t + d` (pairs
//! `l ∈ [t + d, e − 1]`):
//!
//! ```text
//! CEofOP(t) = (e − s − d)·eCE(π(s..e)) − (t − s)·eCE(π(s..t)) − (e − t − d)·eCE(π(t+d..e))
//! ```
//!
//! The `d` pairs straddling `[t, t + d − 1]` mix both regimes and belong to
//! neither part. With `s = d` and `e = L` this is the usual form over
//! `π(d), ..., π(L)`.

use serde::{Deserialize, Serialize};

use crate::entropy::{ece, weighted_ece, XlnxTable};
use crate::error::{Error, Result};
use crate::ordinal::{count_range, pattern_count, PairCounts, PatternSequence, MAX_COUNT_ORDER};
use crate::scalar::Real;

/// Statistic values over a range of split times.
///
/// An empty profile signals that no split time was admissible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatProfile<F> {
    t_values: Vec<usize>,
    s_values: Vec<F>,
}

impl<F: Real> StatProfile<F> {
    pub fn new(t_values: Vec<usize>, s_values: Vec<F>) -> Result<Self> {
        if t_values.len() != s_values.len() {
            return Err(Error::invalid("profile times and values differ in length"));
        }
        if t_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("profile times must be strictly increasing"));
        }
        Ok(Self { t_values, s_values })
    }

    pub fn empty() -> Self {
        Self { t_values: Vec::new(), s_values: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.t_values.is_empty()
    }

    pub fn len(&self) -> usize {
        self.t_values.len()
    }

    pub fn t_values(&self) -> &[usize] {
        &self.t_values
    }

    pub fn s_values(&self) -> &[F] {
        &self.s_values
    }

    /// Position and value of the maximum; ties resolve to the smallest `t`.
    pub fn argmax(&self) -> Option<(usize, F)> {
        let mut best: Option<(usize, F)> = None;
        for (&t, &s) in self.t_values.iter().zip(&self.s_values) {
            match best {
                Some((_, b)) if !(s > b) => {}
                _ => best = Some((t, s)),
            }
        }
        best
    }

    pub fn argmax_t(&self) -> Option<usize> {
        self.argmax().map(|(t, _)| t)
    }

    pub fn max_value(&self) -> Option<F> {
        self.argmax().map(|(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, F)> + '_ {
        self.t_values.iter().copied().zip(self.s_values.iter().copied())
    }
}

fn check_split(seq: &PatternSequence, t: usize) -> Result<()> {
    let (s, e, d) = (seq.start_time(), seq.end_time(), seq.order());
    if !(t > s && t + d < e) {
        return Err(Error::invalid(format!(
            "split time {t} outside the admissible range ({s}, {}) exclusive",
            e.saturating_sub(d)
        )));
    }
    if d > MAX_COUNT_ORDER {
        return Err(Error::invalid(format!("order {d} too large for pair statistics")));
    }
    Ok(())
}

/// CEofOP at one split time, recomputing each conditional entropy from scratch.
pub fn ceofop_at<F: Real>(seq: &PatternSequence, t: usize) -> Result<F> {
    check_split(seq, t)?;
    let (s, e, d) = (seq.start_time(), seq.end_time(), seq.order());
    let whole: F = ece(&count_range(seq, s, e)?)?;
    let left: F = ece(&count_range(seq, s, t)?)?;
    let right: F = ece(&count_range(seq, t + d, e)?)?;
    let w = |n: usize| F::of_count(n as u64);
    Ok(w(e - s - d) * whole - w(t - s) * left - w(e - t - d) * right)
}

fn sum_n_ln_ratio<F: Real>(pairs: &[u64], singles: &[u64]) -> F {
    let k = singles.len();
    let mut acc = F::zero();
    for i in 0..k {
        if singles[i] == 0 {
            continue;
        }
        let ni = F::of_count(singles[i]);
        for j in 0..k {
            let nij = pairs[i * k + j];
            if nij > 0 {
                let nij = F::of_count(nij);
                acc = acc + nij * (nij / ni).ln();
            }
        }
    }
    acc
}

/// CEofOP at one split time through the cumulative-count form, where the
/// right part is obtained as `m(t) = n(e) − n(t + d)`.
pub fn ceofop_at_count_form<F: Real>(seq: &PatternSequence, t: usize) -> Result<F> {
    check_split(seq, t)?;
    let (s, e, d) = (seq.start_time(), seq.end_time(), seq.order());
    let n_end = count_range(seq, s, e)?;
    let n_t = count_range(seq, s, t)?;
    let n_td = count_range(seq, s, t + d)?;
    let m_pairs: Vec<u64> = n_end.pairs().iter().zip(n_td.pairs()).map(|(a, b)| a - b).collect();
    let m_singles: Vec<u64> = n_end.singles().iter().zip(n_td.singles()).map(|(a, b)| a - b).collect();
    let ratio = F::of_count((e - s - d) as u64) / F::of_count((e - s) as u64);
    Ok(-ratio * sum_n_ln_ratio::<F>(n_end.pairs(), n_end.singles())
        + sum_n_ln_ratio::<F>(n_t.pairs(), n_t.singles())
        + sum_n_ln_ratio::<F>(&m_pairs, &m_singles))
}

/// Likelihood-ratio statistic for a change of transition probabilities at `t`,
/// with the first pattern treated as fixed.
///
/// Evaluated pair by pair from the estimated transition probabilities
/// `p̂_{j|i}` (whole sequence, and before `t`) and `q̂_{j|i}` (after `t + d`).
pub fn lr_statistic<F: Real>(seq: &PatternSequence, t: usize) -> Result<F> {
    check_split(seq, t)?;
    let (s, e, d) = (seq.start_time(), seq.end_time(), seq.order());
    let whole = count_range(seq, s, e)?;
    let before = count_range(seq, s, t)?;
    let after = count_range(seq, t + d, e)?;

    let log_transition = |c: &PairCounts, i: usize, j: usize| -> F {
        (F::of_count(c.pair(i, j)) / F::of_count(c.single(i))).ln()
    };
    let pair_at = |l: usize| (seq.at(l) as usize, seq.at(l + 1) as usize);

    let ln_null: F = (s..e).map(|l| { let (i, j) = pair_at(l); log_transition(&whole, i, j) }).sum();
    let ln_alt: F = (s..t).map(|l| { let (i, j) = pair_at(l); log_transition(&before, i, j) }).sum::<F>()
        + (t + d..e).map(|l| { let (i, j) = pair_at(l); log_transition(&after, i, j) }).sum::<F>();
    let two = F::of(2.0);
    Ok(-two * ln_null + two * ln_alt)
}

/// Running sum with Neumaier compensation.
#[derive(Debug, Clone, Copy)]
struct CompensatedSum<F> {
    sum: F,
    carry: F,
}

impl<F: Real> CompensatedSum<F> {
    fn new(v: F) -> Self {
        Self { sum: v, carry: F::zero() }
    }

    #[inline]
    fn add(&mut self, v: F) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry = self.carry + ((self.sum - t) + v);
        } else {
            self.carry = self.carry + ((v - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    fn value(&self) -> F {
        self.sum + self.carry
    }
}

/// Pair counts of one side of the split with `Σ n_i ln n_i − Σ n_ij ln n_ij` kept current.
struct Side<'a, F> {
    k: usize,
    single: Vec<u32>,
    pair: Vec<u32>,
    acc: CompensatedSum<F>,
    table: &'a XlnxTable<F>,
}

impl<'a, F: Real> Side<'a, F> {
    fn from_codes(codes: &[u32], cut: Option<&[bool]>, k: usize, table: &'a XlnxTable<F>) -> Self {
        let mut single = vec![0u32; k];
        let mut pair = vec![0u32; k * k];
        for (l, w) in codes.windows(2).enumerate() {
            if cut.is_some_and(|c| c[l]) {
                continue;
            }
            single[w[0] as usize] += 1;
            pair[w[0] as usize * k + w[1] as usize] += 1;
        }
        let s: F = single.iter().map(|&n| table.get(n as u64)).sum();
        let p: F = pair.iter().map(|&n| table.get(n as u64)).sum();
        Self { k, single, pair, acc: CompensatedSum::new(s - p), table }
    }

    #[inline]
    fn add(&mut self, i: u32, j: u32) {
        let (i, ij) = (i as usize, i as usize * self.k + j as usize);
        let ni = self.single[i] as u64;
        let nij = self.pair[ij] as u64;
        self.acc.add(self.table.get(ni + 1) - self.table.get(ni));
        self.acc.add(self.table.get(nij) - self.table.get(nij + 1));
        self.single[i] += 1;
        self.pair[ij] += 1;
    }

    #[inline]
    fn remove(&mut self, i: u32, j: u32) {
        let (i, ij) = (i as usize, i as usize * self.k + j as usize);
        let ni = self.single[i] as u64;
        let nij = self.pair[ij] as u64;
        self.acc.add(self.table.get(ni - 1) - self.table.get(ni));
        self.acc.add(self.table.get(nij) - self.table.get(nij - 1));
        self.single[i] -= 1;
        self.pair[ij] -= 1;
    }
}

/// Admissible split times `[lo, hi]` of a sequence for a boundary offset.
pub(crate) fn admissible_range(start: usize, end: usize, order: usize, offset: usize) -> Option<(usize, usize)> {
    let lo = start + offset.max(1);
    let hi = end.checked_sub(offset.max(order + 1))?;
    (lo <= hi).then_some((lo, hi))
}

/// Evaluate CEofOP for every admissible split in `[lo, hi]`, calling `visit`
/// with each `(t, value)`. `codes[0]` is the pattern at time `start`.
///
/// When `cut` is given, the pair `(codes[l], codes[l + 1])` is left out of
/// every count wherever `cut[l]` is set.
pub(crate) fn scan_ceofop<F: Real>(
    codes: &[u32],
    cut: Option<&[bool]>,
    start: usize,
    order: usize,
    (lo, hi): (usize, usize),
    table: &XlnxTable<F>,
    mut visit: impl FnMut(usize, F),
) {
    let k = pattern_count(order);
    let end = start + codes.len() - 1;
    let idx = |t: usize| t - start;
    let kept = |l: usize| !cut.is_some_and(|c| c[l]);

    let whole = Side::from_codes(codes, cut, k, table).acc.value();
    let whole = whole * F::of_count((end - start - order) as u64) / F::of_count((end - start) as u64);

    let mut left = Side::from_codes(&codes[..=idx(lo)], cut, k, table);
    let mut right = Side::from_codes(&codes[idx(lo + order)..], cut.map(|c| &c[idx(lo + order)..]), k, table);
    let mut t = lo;
    loop {
        visit(t, whole - left.acc.value() - right.acc.value());
        if t == hi {
            break;
        }
        if kept(idx(t)) {
            left.add(codes[idx(t)], codes[idx(t + 1)]);
        }
        if kept(idx(t + order)) {
            right.remove(codes[idx(t + order)], codes[idx(t + order + 1)]);
        }
        t += 1;
    }
}

/// CEofOP at every split `t` in `[start + offset, end − offset]` that is also
/// inside the open range `(start, end − d)`, in `O(length)` time.
pub fn ceofop_profile<F: Real>(seq: &PatternSequence, t_min_offset: usize) -> Result<StatProfile<F>> {
    if seq.order() > MAX_COUNT_ORDER {
        return Err(Error::invalid(format!("order {} too large for pair statistics", seq.order())));
    }
    let Some(range) = admissible_range(seq.start_time(), seq.end_time(), seq.order(), t_min_offset) else {
        return Ok(StatProfile::empty());
    };
    let table = XlnxTable::new(seq.len());
    let n = range.1 - range.0 + 1;
    let (mut ts, mut vs) = (Vec::with_capacity(n), Vec::with_capacity(n));
    scan_ceofop(seq.codes(), None, seq.start_time(), seq.order(), range, &table, |t, v| {
        ts.push(t);
        vs.push(v);
    });
    Ok(StatProfile { t_values: ts, s_values: vs })
}

/// Whole-sequence `T · eCE`, exposed for the identity `LR = 2·CEofOP + 2d·eCE`.
pub fn weighted_ece_of<F: Real>(seq: &PatternSequence) -> Result<F> {
    Ok(weighted_ece(&count_range(seq, seq.start_time(), seq.end_time())?))
}

fn check_bd<F: Real>(x: &[F], t: usize, delta: F) -> Result<()> {
    if x.len() < 2 || t == 0 || t >= x.len() {
        return Err(Error::invalid(format!("split {t} outside 1..{}", x.len())));
    }
    if !(delta >= F::zero() && delta <= F::one()) {
        return Err(Error::invalid(format!("delta {delta} outside [0, 1]")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("series contains non-finite values"));
    }
    Ok(())
}

fn bd_value<F: Real>(len: usize, t: usize, left_sum: F, right_sum: F, delta: F) -> F {
    let (l, t_) = (F::of_count(len as u64), F::of_count(t as u64));
    let weight = (t_ * (l - t_) / (l * l)).powf(delta);
    weight * (left_sum / t_ - right_sum / (l - t_)).abs()
}

/// Brodsky–Darkhovsky mean-change statistic for splitting `x` after its first `t` values:
/// `(t(L−t)/L²)^δ · |mean(x[..t]) − mean(x[t..])|`.
pub fn bd_exp<F: Real>(x: &[F], t: usize, delta: F) -> Result<F> {
    check_bd(x, t, delta)?;
    let left: F = x[..t].iter().copied().sum();
    let right: F = x[t..].iter().copied().sum();
    Ok(bd_value(x.len(), t, left, right, delta))
}

fn lag_products<F: Real>(x: &[F]) -> Vec<F> {
    x.windows(2).map(|w| w[0] * w[1]).collect()
}

/// [`bd_exp`] applied to the lag-one products `y(k) = x(k)·x(k+1)`.
pub fn bd_corr<F: Real>(x: &[F], t: usize, delta: F) -> Result<F> {
    bd_exp(&lag_products(x), t, delta)
}

/// [`bd_exp`] at every split `t = 1, ..., len − 1` via prefix sums.
pub fn bd_exp_profile<F: Real>(x: &[F], delta: F) -> Result<StatProfile<F>> {
    if x.len() < 2 {
        return Ok(StatProfile::empty());
    }
    check_bd(x, 1, delta)?;
    let total: F = x.iter().copied().sum();
    let mut left = CompensatedSum::new(F::zero());
    let mut ts = Vec::with_capacity(x.len() - 1);
    let mut vs = Vec::with_capacity(x.len() - 1);
    for t in 1..x.len() {
        left.add(x[t - 1]);
        let l = left.value();
        ts.push(t);
        vs.push(bd_value(x.len(), t, l, total - l, delta));
    }
    Ok(StatProfile { t_values: ts, s_values: vs })
}

pub fn bd_corr_profile<F: Real>(x: &[F], delta: F) -> Result<StatProfile<F>> {
    if x.len() < 2 {
        return Ok(StatProfile::empty());
    }
    bd_exp_profile(&lag_products(x), delta)
}
