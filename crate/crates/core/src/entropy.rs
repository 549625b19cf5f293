// SPDX-License-Identifier: MIT OR Apache-2.0

//! Conditional entropy of ordinal patterns, in nats.
//!
//! For counts `n_i`, `n_{i,j}` over `T` pairs the empirical conditional entropy is
//!
//! ```text
//! eCE = -(1/T) Σ_{i,j} n_{i,j} ln(n_{i,j} / n_i)
//!     =  (1/T) (Σ_i n_i ln n_i - Σ_{i,j} n_{i,j} ln n_{i,j})
//! ```
//!
//! and for a pair distribution `P = (p_{i,j})` with marginals `p_i`
//!
//! ```text
//! H(P) = -Σ_{i,j} p_{i,j} ln p_{i,j} + Σ_i p_i ln p_i.
//! ```
//!
//! `0 ln 0 = 0` and `0/0 = 0` throughout.

use crate::error::{Error, Result};
use crate::ordinal::{count_range, encode_pattern, pattern_count, OrdinalPattern, PairCounts, PatternSequence};
use crate::scalar::Real;

/// Tabulated `n ln n` for `n = 0..=max`.
#[derive(Debug, Clone)]
pub struct XlnxTable<F> {
    table: Vec<F>,
}

impl<F: Real> XlnxTable<F> {
    pub fn new(max: usize) -> Self {
        let table = (0..=max as u64).map(|n| F::of_count(n).xlnx()).collect();
        Self { table }
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }

    #[inline]
    pub fn get(&self, n: u64) -> F {
        match self.table.get(n as usize) {
            Some(&v) => v,
            None => F::of_count(n).xlnx(),
        }
    }
}

/// `T · eCE`: `Σ_i n_i ln n_i − Σ_{i,j} n_{i,j} ln n_{i,j}`.
pub fn weighted_ece<F: Real>(counts: &PairCounts) -> F {
    let singles: F = counts.singles().iter().map(|&n| F::of_count(n).xlnx()).sum();
    let pairs: F = counts.pairs().iter().map(|&n| F::of_count(n).xlnx()).sum();
    singles - pairs
}

/// Empirical conditional entropy of the pairs in `counts`.
pub fn ece<F: Real>(counts: &PairCounts) -> Result<F> {
    if counts.total_pairs() == 0 {
        return Err(Error::invalid("empirical conditional entropy needs at least one pair"));
    }
    let v = weighted_ece::<F>(counts) / F::of_count(counts.total_pairs());
    // rounding can leave a tiny negative residue when the entropy is zero
    Ok(v.max(F::zero()))
}

/// Probability table `(p_{i,j})` over pairs of ordinal patterns of one order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistribution<F> {
    order: usize,
    patterns: usize,
    p_pair: Vec<F>,
}

fn sum_tolerance<F: Real>(cells: usize) -> F {
    let eps_bound = F::epsilon() * F::of(16.0 * (cells as f64).sqrt());
    eps_bound.max(F::of(1e-9))
}

impl<F: Real> PairDistribution<F> {
    /// Table in row-major order, `(d+1)!²` entries. Entries must be finite
    /// and nonnegative and sum to one.
    pub fn new(order: usize, p_pair: Vec<F>) -> Result<Self> {
        let patterns = pattern_count(order);
        if order == 0 || order > crate::ordinal::MAX_COUNT_ORDER {
            return Err(Error::invalid(format!("unsupported order {order}")));
        }
        if p_pair.len() != patterns * patterns {
            return Err(Error::invalid(format!(
                "order {order} needs {} cells, got {}",
                patterns * patterns,
                p_pair.len()
            )));
        }
        if p_pair.iter().any(|p| !p.is_finite() || *p < F::zero()) {
            return Err(Error::invalid("probabilities must be finite and nonnegative"));
        }
        let d = Self { order, patterns, p_pair };
        let total = d.total();
        if (total - F::one()).abs() > sum_tolerance::<F>(d.p_pair.len()) {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(d)
    }

    /// Point mass on the pair `(i, j)`.
    pub fn point_mass(order: usize, i: usize, j: usize) -> Result<Self> {
        let k = pattern_count(order);
        if i >= k || j >= k {
            return Err(Error::invalid("pattern index out of range"));
        }
        let mut p = vec![F::zero(); k * k];
        p[i * k + j] = F::one();
        Self::new(order, p)
    }

    pub fn uniform(order: usize) -> Result<Self> {
        let k = pattern_count(order);
        Self::new(order, vec![F::one() / F::of((k * k) as f64); k * k])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn patterns(&self) -> usize {
        self.patterns
    }

    pub fn cells(&self) -> &[F] {
        &self.p_pair
    }

    pub fn pair(&self, i: usize, j: usize) -> F {
        self.p_pair[i * self.patterns + j]
    }

    /// Marginal `p_i = Σ_j p_{i,j}`.
    pub fn marginal(&self, i: usize) -> F {
        self.p_pair[i * self.patterns..(i + 1) * self.patterns].iter().copied().sum()
    }

    /// `p_{j|i} = p_{i,j} / p_i`, zero when `p_i = 0`.
    pub fn conditional(&self, j: usize, i: usize) -> F {
        let pi = self.marginal(i);
        if pi == F::zero() {
            F::zero()
        } else {
            self.pair(i, j) / pi
        }
    }

    fn total(&self) -> F {
        self.p_pair.iter().copied().sum()
    }
}

/// Conditional entropy `H(P)` of a pair distribution.
pub fn entropy_h<F: Real>(p: &PairDistribution<F>) -> Result<F> {
    let total = p.total();
    if (total - F::one()).abs() > sum_tolerance::<F>(p.p_pair.len()) {
        return Err(Error::invalid(format!("distribution sums to {total}, not 1")));
    }
    Ok(entropy_h_unchecked(p))
}

pub(crate) fn entropy_h_unchecked<F: Real>(p: &PairDistribution<F>) -> F {
    let k = p.patterns;
    let mut h = F::zero();
    for i in 0..k {
        let row = &p.p_pair[i * k..(i + 1) * k];
        let pi: F = row.iter().copied().sum();
        h = h + pi.xlnx() - row.iter().map(|&v| v.xlnx()).sum::<F>();
    }
    h.max(F::zero())
}

/// `w P + (1 − w) Q`, cell by cell.
pub fn mix<F: Real>(p: &PairDistribution<F>, q: &PairDistribution<F>, w: F) -> Result<PairDistribution<F>> {
    if p.order != q.order {
        return Err(Error::invalid(format!("cannot mix orders {} and {}", p.order, q.order)));
    }
    if !(w >= F::zero() && w <= F::one()) {
        return Err(Error::invalid(format!("mixture weight {w} outside [0, 1]")));
    }
    let cells = p.p_pair.iter().zip(&q.p_pair).map(|(&a, &b)| w * a + (F::one() - w) * b).collect();
    Ok(PairDistribution { order: p.order, patterns: p.patterns, p_pair: cells })
}

/// Relative pair frequencies over the whole sequence.
pub fn estimate_pair_distribution<F: Real>(seq: &PatternSequence) -> Result<PairDistribution<F>> {
    if seq.len() < 2 {
        return Err(Error::invalid("need at least 2 patterns to estimate pair frequencies"));
    }
    let counts = count_range(seq, seq.start_time(), seq.end_time())?;
    Ok(distribution_from_counts(&counts))
}

pub fn distribution_from_counts<F: Real>(counts: &PairCounts) -> PairDistribution<F> {
    let t = F::of_count(counts.total_pairs());
    PairDistribution {
        order: counts.order(),
        patterns: counts.patterns(),
        p_pair: counts.pairs().iter().map(|&n| F::of_count(n) / t).collect(),
    }
}

/// Pair distribution of order `d` induced by a pattern distribution of order `d + 1`.
///
/// `dist_high[c]` is the probability of the order-`(d+1)` pattern with code `c`.
/// Each pattern of `d + 2` points contributes its mass to the pair formed by
/// the patterns of its first and last `d + 1` points.
pub fn project_pairs<F: Real>(dist_high: &[F]) -> Result<PairDistribution<F>> {
    let high_order = (1..=crate::ordinal::MAX_COUNT_ORDER + 1)
        .find(|&o| pattern_count(o) == dist_high.len())
        .filter(|&o| o >= 2)
        .ok_or_else(|| {
            Error::invalid(format!(
                "{} entries is not (d+2)! for a supported order d",
                dist_high.len()
            ))
        })?;
    if dist_high.iter().any(|p| !p.is_finite() || *p < F::zero()) {
        return Err(Error::invalid("probabilities must be finite and nonnegative"));
    }
    let total: F = dist_high.iter().copied().sum();
    if (total - F::one()).abs() > sum_tolerance::<F>(dist_high.len()) {
        return Err(Error::invalid(format!("input distribution sums to {total}, not 1")));
    }

    let order = high_order - 1;
    let k = pattern_count(order);
    let mut cells = vec![F::zero(); k * k];
    for (code, &p) in dist_high.iter().enumerate() {
        let r = OrdinalPattern::new(high_order, code as u32)?.permutation();
        let mut window = vec![0.0f64; high_order + 1];
        for (rank, &idx) in r.iter().enumerate() {
            window[idx] = (high_order - rank) as f64;
        }
        let first = encode_pattern(&window[..=order])?.code() as usize;
        let last = encode_pattern(&window[1..])?.code() as usize;
        cells[first * k + last] = cells[first * k + last] + p;
    }
    let total: F = cells.iter().copied().sum();
    cells.iter_mut().for_each(|c| *c = *c / total);
    PairDistribution::new(order, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    /// Brute force straight from the definition, independent of the count tables.
    fn ece_oracle(codes: &[u32]) -> f64 {
        let mut pairs: HashMap<(u32, u32), f64> = HashMap::new();
        let mut singles: HashMap<u32, f64> = HashMap::new();
        for w in codes.windows(2) {
            *pairs.entry((w[0], w[1])).or_default() += 1.0;
            *singles.entry(w[0]).or_default() += 1.0;
        }
        let t = (codes.len() - 1) as f64;
        -pairs.iter().map(|(&(i, _), &n)| n * (n / singles[&i]).ln()).sum::<f64>() / t
    }

    fn full(seq: &PatternSequence) -> PairCounts {
        count_range(seq, seq.start_time(), seq.end_time()).unwrap()
    }

    #[test]
    fn alternating_sequence_has_zero_entropy() {
        let seq = PatternSequence::new(1, 1, vec![0, 1, 0, 1, 0]).unwrap();
        assert_eq!(ece::<f64>(&full(&seq)).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_value() {
        let seq = PatternSequence::new(1, 1, vec![0, 0, 1, 1]).unwrap();
        let v: f64 = ece(&full(&seq)).unwrap();
        assert!((v - 2.0 * 2f64.ln() / 3.0).abs() < 1e-12);
        assert!((v - 0.462098).abs() < 1e-6);
        assert!((v - ece_oracle(seq.codes())).abs() < 1e-12);
    }

    #[test]
    fn uniform_table_hits_upper_bound() {
        for d in 1..=3 {
            let k = pattern_count(d);
            let counts = PairCounts::from_pairs(d, vec![3; k * k]).unwrap();
            let v: f64 = ece(&counts).unwrap();
            assert!((v - (k as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn ece_rejects_empty_counts() {
        assert!(ece::<f64>(&PairCounts::zeros(2).unwrap()).is_err());
    }

    #[test]
    fn entropy_h_examples() {
        let point = PairDistribution::<f64>::point_mass(2, 3, 4).unwrap();
        assert_eq!(entropy_h(&point).unwrap(), 0.0);
        for d in 1..=3 {
            let u = PairDistribution::<f64>::uniform(d).unwrap();
            let h = entropy_h(&u).unwrap();
            assert!((h - (pattern_count(d) as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_h_rejects_unnormalized() {
        assert!(PairDistribution::<f64>::new(1, vec![0.5, 0.5, 0.5, 0.0]).is_err());
        let mut u = PairDistribution::<f64>::uniform(1).unwrap();
        u.p_pair[0] = 0.5;
        assert!(entropy_h(&u).is_err());
    }

    #[test]
    fn entropy_h_matches_conditional_form() {
        // CE = -Σ p_i p_{j|i} ln p_{j|i}
        let p = PairDistribution::<f64>::new(1, vec![0.1, 0.3, 0.45, 0.15]).unwrap();
        let mut ce = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let c = p.conditional(j, i);
                if c > 0.0 {
                    ce -= p.marginal(i) * c * c.ln();
                }
            }
        }
        assert!((entropy_h(&p).unwrap() - ce).abs() < 1e-14);
    }

    #[test]
    fn mix_examples() {
        let p = PairDistribution::<f64>::point_mass(1, 0, 0).unwrap();
        let q = PairDistribution::<f64>::point_mass(1, 1, 1).unwrap();
        assert_eq!(mix(&p, &q, 1.0).unwrap(), p);
        assert_eq!(mix(&p, &p, 0.3).unwrap(), p);
        assert_eq!(mix(&p, &q, 0.5).unwrap().cells(), &[0.5, 0.0, 0.0, 0.5]);
        let r = PairDistribution::<f64>::uniform(2).unwrap();
        assert!(mix(&p, &r, 0.5).is_err());
        assert!(mix(&p, &q, 1.5).is_err());
    }

    #[test]
    fn estimate_examples() {
        let seq = PatternSequence::new(1, 1, vec![0, 1, 0, 1, 0]).unwrap();
        let p: PairDistribution<f64> = estimate_pair_distribution(&seq).unwrap();
        assert_eq!(p.cells(), &[0.0, 0.5, 0.5, 0.0]);
        let c = PatternSequence::new(2, 2, vec![4; 10]).unwrap();
        let p: PairDistribution<f64> = estimate_pair_distribution(&c).unwrap();
        assert_eq!(p.pair(4, 4), 1.0);
        let single = PatternSequence::new(2, 2, vec![1]).unwrap();
        assert!(estimate_pair_distribution::<f64>(&single).is_err());
    }

    /// Enumerate all orderings of `d + 2` distinct points, all equally likely
    /// for an exchangeable sequence, and tally the up/down pairs directly.
    fn iid_pairs_by_enumeration(d: usize) -> Vec<f64> {
        let n = d + 2;
        let k = pattern_count(d);
        let mut cells = vec![0.0; k * k];
        let mut perm: Vec<usize> = (0..n).collect();
        let mut all = Vec::new();
        heap_permutations(n, &mut perm, &mut all);
        for p in &all {
            let w: Vec<f64> = p.iter().map(|&v| v as f64).collect();
            let a = encode_pattern(&w[..=d]).unwrap().code() as usize;
            let b = encode_pattern(&w[1..]).unwrap().code() as usize;
            cells[a * k + b] += 1.0 / all.len() as f64;
        }
        cells
    }

    fn heap_permutations(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap_permutations(k - 1, a, out);
            if k % 2 == 0 { a.swap(i, k - 1) } else { a.swap(0, k - 1) }
        }
    }

    #[test]
    fn projection_of_uniform_order_two() {
        let uniform = vec![1.0 / 6.0; 6];
        let p = project_pairs(&uniform).unwrap();
        let expected: [f64; 4] = [1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0];
        for (a, b) in p.cells().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let brute = iid_pairs_by_enumeration(1);
        for (a, b) in p.cells().iter().zip(&brute) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_matches_enumeration_order_two_three() {
        for d in 2..=3 {
            let n = pattern_count(d + 1);
            let p = project_pairs(&vec![1.0 / n as f64; n]).unwrap();
            let brute = iid_pairs_by_enumeration(d);
            for (a, b) in p.cells().iter().zip(&brute) {
                assert!((a - b).abs() < 1e-14);
            }
            // each pattern has d + 1 possible successors
            let k = pattern_count(d);
            for i in 0..k {
                let nonzero = (0..k).filter(|&j| p.pair(i, j) > 0.0).count();
                assert_eq!(nonzero, d + 1);
            }
        }
    }

    #[test]
    fn projection_of_monotone_point_mass() {
        let mut high = vec![0.0; 24];
        high[0] = 1.0;
        let p = project_pairs(&high).unwrap();
        assert_eq!(p.pair(0, 0), 1.0);
        assert!((p.cells().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(project_pairs(&vec![0.5f64; 6]).is_err());
        assert!(project_pairs(&vec![0.2f64; 5]).is_err());
    }

    #[test]
    fn f32_instantiation() {
        let seq = PatternSequence::new(1, 1, vec![0, 0, 1, 1]).unwrap();
        let v: f32 = ece(&full(&seq)).unwrap();
        assert!((v - 0.462_098).abs() < 1e-5);
    }

    fn codes(k: u32) -> impl Strategy<Value = Vec<u32>> {
        prop::collection::vec(0..k, 3..300)
    }

    proptest! {
        #[test]
        fn ece_matches_oracle_and_bounds(c in codes(6)) {
            let seq = PatternSequence::new(2, 2, c).unwrap();
            let v: f64 = ece(&full(&seq)).unwrap();
            prop_assert!((v - ece_oracle(seq.codes())).abs() < 1e-9);
            prop_assert!(v >= 0.0 && v <= 6f64.ln() + 1e-12);
        }

        #[test]
        fn ece_equals_h_of_estimate(c in codes(24)) {
            let seq = PatternSequence::new(3, 3, c).unwrap();
            let v: f64 = ece(&full(&seq)).unwrap();
            let h = entropy_h(&estimate_pair_distribution::<f64>(&seq).unwrap()).unwrap();
            prop_assert!((v - h).abs() < 1e-9);
        }

        #[test]
        fn merged_counts_are_concave(c in codes(6), cut in 0.05f64..0.95) {
            let seq = PatternSequence::new(2, 2, c).unwrap();
            prop_assume!(seq.len() >= 3);
            let (s, e) = (seq.start_time(), seq.end_time());
            let b = (s + ((e - s) as f64 * cut) as usize).clamp(s + 1, e - 1);
            let left = count_range(&seq, s, b).unwrap();
            let right = count_range(&seq, b, e).unwrap();
            let merged = &left + &right;
            let lhs = weighted_ece::<f64>(&merged);
            let rhs = weighted_ece::<f64>(&left) + weighted_ece::<f64>(&right);
            prop_assert!(lhs >= rhs - 1e-9);
        }
    }
}
