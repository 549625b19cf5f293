// SPDX-License-Identifier: MIT OR Apache-2.0

//! Ordinal patterns, pattern sequences and pair counts.
//!
//! A window `(x_0, ..., x_d)` has ordinal pattern `(r_0, ..., r_d)` when
//! `x_{r_0} >= x_{r_1} >= ... >= x_{r_d}`, with equal values ordered by
//! decreasing index. Patterns are stored as integer codes: the code is the
//! lexicographic rank of the reversed permutation `(r_d, ..., r_0)`, which is
//! the stable ascending argsort of the window. Under this code the monotone
//! increasing window is `0` for every order, and for order 1 "up" is `0` and
//! "down" is `1`.
//!
//! Ties are resolved exactly; no epsilon is applied. Callers wanting to break
//! ties randomly should dither the series before extraction.

use std::ops::Add;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest order accepted by the encoder; `11!` still fits a `u32` code.
pub const MAX_ORDER: usize = 10;

/// Largest order for which dense pair-count tables are built (`720²` cells).
pub const MAX_COUNT_ORDER: usize = 5;

/// `(d+1)!`, the number of distinct patterns of order `d`.
pub fn pattern_count(order: usize) -> usize {
    (1..=order + 1).product()
}

fn factorials(n: usize) -> Vec<u32> {
    let mut f = vec![1u32; n + 1];
    for i in 1..=n {
        f[i] = f[i - 1] * i as u32;
    }
    f
}

/// An ordinal pattern of order `d` identified by its canonical code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrdinalPattern {
    order: usize,
    code: u32,
}

impl OrdinalPattern {
    pub fn new(order: usize, code: u32) -> Result<Self> {
        check_order(order, MAX_ORDER)?;
        if code as usize >= pattern_count(order) {
            return Err(Error::invalid(format!(
                "code {code} out of range for order {order} (must be < {})",
                pattern_count(order)
            )));
        }
        Ok(Self { order, code })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn code(&self) -> u32 {
        self.code
    }

    /// The permutation `(r_0, ..., r_d)` listing window indices from the
    /// largest value to the smallest.
    pub fn permutation(&self) -> Vec<usize> {
        let mut ascending = unrank(self.code, self.order + 1);
        ascending.reverse();
        ascending
    }

    /// Inverse of [`OrdinalPattern::permutation`].
    pub fn from_permutation(perm: &[usize]) -> Result<Self> {
        if perm.len() < 2 {
            return Err(Error::invalid("permutation must have at least 2 entries"));
        }
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::invalid(format!("{perm:?} is not a permutation of 0..{n}")));
            }
            seen[p] = true;
        }
        let ascending: Vec<usize> = perm.iter().rev().copied().collect();
        Self::new(n - 1, rank(&ascending))
    }
}

/// Lexicographic rank of a permutation of `0..n`, `O(n²)`.
fn rank(perm: &[usize]) -> u32 {
    let n = perm.len();
    let fact = factorials(n);
    let mut code = 0u32;
    for k in 0..n {
        let smaller_after = perm[k + 1..].iter().filter(|&&m| m < perm[k]).count() as u32;
        code += smaller_after * fact[n - 1 - k];
    }
    code
}

fn unrank(mut code: u32, n: usize) -> Vec<usize> {
    let fact = factorials(n);
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let f = fact[n - 1 - k];
        let digit = (code / f) as usize;
        code %= f;
        out.push(pool.remove(digit));
    }
    out
}

fn check_order(order: usize, max: usize) -> Result<()> {
    if order == 0 || order > max {
        return Err(Error::invalid(format!("order must be in 1..={max}, got {order}")));
    }
    Ok(())
}

fn check_finite<T: Real>(x: &[T]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::invalid(format!("non-finite value at index {i}"))),
        None => Ok(()),
    }
}

/// Encode a window of `d+1` values as an ordinal pattern of order `d`.
pub fn encode_pattern<T: Real>(window: &[T]) -> Result<OrdinalPattern> {
    if window.len() < 2 {
        return Err(Error::invalid(format!(
            "window must hold at least 2 values, got {}",
            window.len()
        )));
    }
    let order = window.len() - 1;
    check_order(order, MAX_ORDER)?;
    check_finite(window)?;
    let ascending = stable_argsort(window);
    Ok(OrdinalPattern { order, code: rank(&ascending) })
}

fn stable_argsort<T: Real>(window: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..window.len()).collect();
    // values are finite, so partial_cmp never fails
    idx.sort_by(|&a, &b| window[a].partial_cmp(&window[b]).unwrap().then(a.cmp(&b)));
    idx
}

/// Pattern codes `π(t)` for `t = start_time ..= end_time`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSequence {
    order: usize,
    start_time: usize,
    codes: Vec<u32>,
}

impl PatternSequence {
    pub fn new(order: usize, start_time: usize, codes: Vec<u32>) -> Result<Self> {
        check_order(order, MAX_ORDER)?;
        if codes.is_empty() {
            return Err(Error::invalid("pattern sequence must not be empty"));
        }
        if start_time < order {
            return Err(Error::invalid(format!(
                "start_time {start_time} precedes the first complete window (order {order})"
            )));
        }
        let n = pattern_count(order) as u32;
        if let Some(bad) = codes.iter().find(|&&c| c >= n) {
            return Err(Error::invalid(format!("code {bad} invalid for order {order}")));
        }
        Ok(Self { order, start_time, codes })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn start_time(&self) -> usize {
        self.start_time
    }

    pub fn end_time(&self) -> usize {
        self.start_time + self.codes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    /// Code of the pattern at time `t`.
    pub fn at(&self, t: usize) -> u32 {
        self.codes[t - self.start_time]
    }

    pub fn pattern_at(&self, t: usize) -> OrdinalPattern {
        OrdinalPattern { order: self.order, code: self.at(t) }
    }

    /// The sub-sequence `π(t_start ..= t_end)`, keeping absolute times.
    pub fn slice(&self, t_start: usize, t_end: usize) -> Result<Self> {
        if t_start < self.start_time || t_end > self.end_time() || t_start > t_end {
            return Err(Error::invalid(format!(
                "range [{t_start}, {t_end}] outside sequence [{}, {}]",
                self.start_time,
                self.end_time()
            )));
        }
        Ok(Self {
            order: self.order,
            start_time: t_start,
            codes: self.codes[t_start - self.start_time..=t_end - self.start_time].to_vec(),
        })
    }
}

/// Extract `π(d), ..., π(L)` from `x(0), ..., x(L)`.
///
/// The window's sorted order is maintained across steps (one removal and one
/// insertion, `O(d)` each) so no window is re-sorted.
pub fn extract_sequence<T: Real>(x: &[T], order: usize) -> Result<PatternSequence> {
    check_order(order, MAX_ORDER)?;
    if x.len() < order + 1 {
        return Err(Error::invalid(format!(
            "series of {} values is shorter than one window of order {order}",
            x.len()
        )));
    }
    check_finite(x)?;

    let fact = factorials(order + 1);
    let mut sorted: Vec<(T, usize)> = (0..=order).map(|i| (x[i], i)).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut codes = Vec::with_capacity(x.len() - order);
    let mut local = vec![0usize; order + 1];
    for t in order..x.len() {
        let first = t - order;
        for (slot, &(_, idx)) in local.iter_mut().zip(&sorted) {
            *slot = idx - first;
        }
        let mut code = 0u32;
        for k in 0..=order {
            let smaller_after = local[k + 1..].iter().filter(|&&m| m < local[k]).count() as u32;
            code += smaller_after * fact[order - k];
        }
        codes.push(code);

        if t + 1 < x.len() {
            let pos = sorted.iter().position(|&(_, idx)| idx == first).unwrap();
            sorted.remove(pos);
            let v = x[t + 1];
            // newest index is the largest, so it goes after every equal value
            let at = sorted.iter().rposition(|&(w, _)| w <= v).map_or(0, |p| p + 1);
            sorted.insert(at, (v, t + 1));
        }
    }
    Ok(PatternSequence { order, start_time: order, codes })
}

/// Reference extraction that sorts every window from scratch.
pub fn extract_sequence_naive<T: Real>(x: &[T], order: usize) -> Result<PatternSequence> {
    check_order(order, MAX_ORDER)?;
    if x.len() < order + 1 {
        return Err(Error::invalid("series shorter than one window"));
    }
    let codes = x
        .windows(order + 1)
        .map(|w| encode_pattern(w).map(|p| p.code))
        .collect::<Result<Vec<_>>>()?;
    PatternSequence::new(order, order, codes)
}

/// Occurrence counts of patterns and pattern pairs over `l ∈ [t_start, t_end − 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCounts {
    order: usize,
    patterns: usize,
    n_single: Vec<u64>,
    n_pair: Vec<u64>,
    total_pairs: u64,
}

impl PairCounts {
    pub fn zeros(order: usize) -> Result<Self> {
        check_order(order, MAX_COUNT_ORDER)?;
        let patterns = pattern_count(order);
        Ok(Self {
            order,
            patterns,
            n_single: vec![0; patterns],
            n_pair: vec![0; patterns * patterns],
            total_pairs: 0,
        })
    }

    /// Counts from a row-major pair table; pattern counts are the row sums.
    pub fn from_pairs(order: usize, n_pair: Vec<u64>) -> Result<Self> {
        let mut c = Self::zeros(order)?;
        if n_pair.len() != c.n_pair.len() {
            return Err(Error::invalid(format!(
                "order {order} needs {} pair cells, got {}",
                c.n_pair.len(),
                n_pair.len()
            )));
        }
        for (i, row) in n_pair.chunks(c.patterns).enumerate() {
            c.n_single[i] = row.iter().sum();
        }
        c.total_pairs = c.n_single.iter().sum();
        c.n_pair = n_pair;
        Ok(c)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn patterns(&self) -> usize {
        self.patterns
    }

    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    pub fn single(&self, i: usize) -> u64 {
        self.n_single[i]
    }

    pub fn pair(&self, i: usize, j: usize) -> u64 {
        self.n_pair[i * self.patterns + j]
    }

    pub fn singles(&self) -> &[u64] {
        &self.n_single
    }

    /// Row-major `(d+1)! × (d+1)!` table.
    pub fn pairs(&self) -> &[u64] {
        &self.n_pair
    }

    pub fn add_pair(&mut self, i: u32, j: u32) {
        let (i, j) = (i as usize, j as usize);
        self.n_single[i] += 1;
        self.n_pair[i * self.patterns + j] += 1;
        self.total_pairs += 1;
    }
}

impl Add for &PairCounts {
    type Output = PairCounts;

    fn add(self, rhs: &PairCounts) -> PairCounts {
        assert_eq!(self.order, rhs.order, "cannot merge counts of different orders");
        PairCounts {
            order: self.order,
            patterns: self.patterns,
            n_single: self.n_single.iter().zip(&rhs.n_single).map(|(a, b)| a + b).collect(),
            n_pair: self.n_pair.iter().zip(&rhs.n_pair).map(|(a, b)| a + b).collect(),
            total_pairs: self.total_pairs + rhs.total_pairs,
        }
    }
}

/// Counts of `π(l)` and `(π(l), π(l+1))` for `l ∈ [t_start, t_end − 1]`.
pub fn count_range(seq: &PatternSequence, t_start: usize, t_end: usize) -> Result<PairCounts> {
    if t_start < seq.start_time() || t_end > seq.end_time() || t_end <= t_start {
        return Err(Error::invalid(format!(
            "count range [{t_start}, {t_end}] invalid for sequence [{}, {}]",
            seq.start_time(),
            seq.end_time()
        )));
    }
    let mut counts = PairCounts::zeros(seq.order())?;
    let codes = &seq.codes()[t_start - seq.start_time()..=t_end - seq.start_time()];
    for w in codes.windows(2) {
        counts.add_pair(w[0], w[1]);
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn perm(w: &[f64]) -> Vec<usize> {
        encode_pattern(w).unwrap().permutation()
    }

    #[test]
    fn order_one_labels() {
        assert_eq!(encode_pattern(&[1.0, 2.0]).unwrap().code(), 0);
        assert_eq!(encode_pattern(&[2.0, 1.0]).unwrap().code(), 1);
        assert_eq!(perm(&[1.0, 2.0]), vec![1, 0]);
    }

    #[test]
    fn ties_follow_index_rule() {
        assert_eq!(perm(&[5.0, 5.0]), vec![1, 0]);
        assert_eq!(encode_pattern(&[5.0, 5.0]).unwrap().code(), 0);
        assert_eq!(perm(&[2.0, 1.0, 2.0]), vec![2, 0, 1]);
    }

    #[test]
    fn increasing_is_code_zero() {
        assert_eq!(perm(&[1.0, 2.0, 3.0]), vec![2, 1, 0]);
        for d in 1..=MAX_ORDER {
            let w: Vec<f64> = (0..=d).map(|i| i as f64).collect();
            assert_eq!(encode_pattern(&w).unwrap().code(), 0);
        }
    }

    #[test]
    fn encode_rejects_bad_windows() {
        assert!(encode_pattern(&[1.0f64]).is_err());
        assert!(encode_pattern(&[1.0, f64::NAN]).is_err());
        assert!(encode_pattern(&[1.0, f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn extract_order_one_example() {
        let x = [3.0, 1.0, 2.0, 4.0, 1.0, 3.0, 2.0, 4.0];
        let seq = extract_sequence(&x, 1).unwrap();
        assert_eq!(seq.codes(), &[1, 0, 0, 1, 0, 1, 0]);
        assert_eq!(seq.start_time(), 1);
        assert_eq!(seq.end_time(), 7);
    }

    #[test]
    fn extract_edge_cases() {
        let seq = extract_sequence(&[1.0, 3.0, 2.0, 0.5], 3).unwrap();
        assert_eq!(seq.len(), 1);
        let constant = extract_sequence(&[4.0f32; 50], 3).unwrap();
        assert!(constant.codes().iter().all(|&c| c == constant.codes()[0]));
        // equal values keep index order, which is the increasing pattern
        assert_eq!(constant.codes()[0], 0);
        assert!(extract_sequence(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn count_range_hand_count() {
        let seq = PatternSequence::new(1, 1, vec![0, 1, 0, 1, 0]).unwrap();
        let c = count_range(&seq, 1, 5).unwrap();
        assert_eq!(c.pair(0, 1), 2);
        assert_eq!(c.pair(1, 0), 2);
        assert_eq!(c.singles(), &[2, 2]);
        assert_eq!(c.total_pairs(), 4);
        let one = count_range(&seq, 2, 3).unwrap();
        assert_eq!(one.total_pairs(), 1);
        assert_eq!(one.pair(1, 0), 1);
        assert!(count_range(&seq, 3, 3).is_err());
        assert!(count_range(&seq, 0, 3).is_err());
        assert!(count_range(&seq, 2, 6).is_err());
    }

    #[test]
    fn all_strict_windows_give_distinct_codes() {
        for d in 1..=4 {
            let n = pattern_count(d);
            let mut seen = vec![false; n];
            for code in 0..n as u32 {
                let p = OrdinalPattern::new(d, code).unwrap();
                // build a window realizing the permutation
                let r = p.permutation();
                let mut w = vec![0.0; d + 1];
                for (rank, &idx) in r.iter().enumerate() {
                    w[idx] = (d - rank) as f64;
                }
                let back = encode_pattern(&w).unwrap();
                assert_eq!(back.code(), code);
                seen[code as usize] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn iid_frequencies_are_uniform() {
        let mut rng = crate::seed::rng_from(11);
        let x: Vec<f64> = (0..100_001).map(|_| rng.random::<f64>()).collect();
        for d in 1..=3 {
            let seq = extract_sequence(&x, d).unwrap();
            let n = pattern_count(d);
            let mut freq = vec![0usize; n];
            for &c in seq.codes() {
                freq[c as usize] += 1;
            }
            let total = seq.len() as f64;
            let p = 1.0 / n as f64;
            // patterns of overlapping windows are dependent; 5 binomial
            // standard errors is still loose enough
            let se = (p * (1.0 - p) / total).sqrt();
            for f in freq {
                assert!((f as f64 / total - p).abs() < 5.0 * se, "d={d} freq {f}");
            }
        }
    }

    fn series_with_ties() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0i32..6, 8..80).prop_map(|v| v.into_iter().map(f64::from).collect())
    }

    proptest! {
        #[test]
        fn incremental_matches_naive(x in series_with_ties(), d in 1usize..=5) {
            prop_assume!(x.len() > d);
            let fast = extract_sequence(&x, d).unwrap();
            let slow = extract_sequence_naive(&x, d).unwrap();
            prop_assert_eq!(fast, slow);
        }

        #[test]
        fn emitted_permutation_satisfies_definition(w in prop::collection::vec(0i32..4, 2..8)) {
            let w: Vec<f64> = w.into_iter().map(f64::from).collect();
            let r = encode_pattern(&w).unwrap().permutation();
            for l in 1..r.len() {
                prop_assert!(w[r[l - 1]] >= w[r[l]]);
                if w[r[l - 1]] == w[r[l]] {
                    prop_assert!(r[l - 1] > r[l]);
                }
            }
            let back = OrdinalPattern::from_permutation(&r).unwrap();
            prop_assert_eq!(back, encode_pattern(&w).unwrap());
        }

        #[test]
        fn counts_are_additive(codes in prop::collection::vec(0u32..6, 4..60), cut in 0.0f64..1.0, cut2 in 0.0f64..1.0) {
            let seq = PatternSequence::new(2, 2, codes).unwrap();
            let (s, e) = (seq.start_time(), seq.end_time());
            let mut a = s + ((e - s) as f64 * cut.min(cut2)) as usize;
            let mut c = s + ((e - s) as f64 * cut.max(cut2)) as usize;
            if a == c { if c < e { c += 1 } else { a -= 1 } }
            let b_lo = a + 1;
            prop_assume!(b_lo < c);
            let b = (a + c) / 2;
            let b = b.clamp(b_lo, c - 1);
            let merged = &count_range(&seq, a, b).unwrap() + &count_range(&seq, b, c).unwrap();
            prop_assert_eq!(merged, count_range(&seq, a, c).unwrap());
        }

        #[test]
        fn pair_rows_sum_to_singles(codes in prop::collection::vec(0u32..24, 2..200)) {
            let seq = PatternSequence::new(3, 3, codes).unwrap();
            let c = count_range(&seq, seq.start_time(), seq.end_time()).unwrap();
            for i in 0..c.patterns() {
                let row: u64 = (0..c.patterns()).map(|j| c.pair(i, j)).sum();
                prop_assert_eq!(row, c.single(i));
            }
            prop_assert_eq!(c.singles().iter().sum::<u64>(), c.total_pairs());
        }
    }

    #[test]
    fn random_order_one_steps() {
        let mut rng = crate::seed::rng_from(3);
        let x: Vec<f32> = (0..500).map(|_| rng.random_range(-1.0..1.0)).collect();
        let seq = extract_sequence(&x, 1).unwrap();
        for (k, &c) in seq.codes().iter().enumerate() {
            let up = x[k + 1] >= x[k];
            assert_eq!(c, if up { 0 } else { 1 });
        }
    }
}
