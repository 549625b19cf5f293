// SPDX-License-Identifier: MIT OR Apache-2.0

//! Large-sample behaviour of CEofOP.
//!
//! Gluing a stationary process with pair distribution `P` (first fraction
//! `γ` of the series) to one with `Q`, `(1/L)·CEofOP(⌊θL⌋)` tends to
//!
//! ```text
//! θ < γ:  H(γP + (1−γ)Q) − θ H(P) − (1−θ) H(((γ−θ)/(1−θ)) P + ((1−γ)/(1−θ)) Q)
//! θ ≥ γ:  H(γP + (1−γ)Q) − θ H((γ/θ) P + ((θ−γ)/θ) Q) − (1−θ) H(Q)
//! ```
//!
//! which is maximal at `θ = γ`. Pair distributions of the AR processes are
//! estimated here by simulation.

use crate::entropy::{entropy_h_unchecked, estimate_pair_distribution, mix, PairDistribution};
use crate::error::{Error, Result};
use crate::ordinal::{extract_sequence, pattern_count};
use crate::processes::{generate, ProcessSpec};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaQuery<F> {
    pub gamma: F,
    pub theta: F,
    pub p: PairDistribution<F>,
    pub q: PairDistribution<F>,
}

impl<F: Real> DeltaQuery<F> {
    pub fn new(gamma: F, theta: F, p: PairDistribution<F>, q: PairDistribution<F>) -> Result<Self> {
        let query = Self { gamma, theta, p, q };
        query.validate()?;
        Ok(query)
    }

    pub fn order(&self) -> usize {
        self.p.order()
    }

    fn validate(&self) -> Result<()> {
        if self.p.order() != self.q.order() {
            return Err(Error::invalid(format!(
                "pair distributions have orders {} and {}",
                self.p.order(),
                self.q.order()
            )));
        }
        let interior = |v: F| v > F::zero() && v < F::one();
        if !interior(self.gamma) || !interior(self.theta) {
            return Err(Error::invalid(format!(
                "gamma ({}) and theta ({}) must lie in (0, 1)",
                self.gamma, self.theta
            )));
        }
        Ok(())
    }
}

/// Limit of `(1/L)·CEofOP(⌊θL⌋)` for a change at `⌊γL⌋` from `P` to `Q`.
pub fn delta<F: Real>(query: &DeltaQuery<F>) -> Result<F> {
    query.validate()?;
    let (g, th, one) = (query.gamma, query.theta, F::one());
    let (p, q) = (&query.p, &query.q);
    let h = entropy_h_unchecked::<F>;
    let whole = h(&mix(p, q, g)?);
    let v = if th < g {
        whole - th * h(p) - (one - th) * h(&mix(p, q, ((g - th) / (one - th)).min(one))?)
    } else {
        whole - th * h(&mix(p, q, (g / th).min(one))?) - (one - th) * h(q)
    };
    Ok(v)
}

/// `max_θ Δ = H(γP + (1−γ)Q) − γ H(P) − (1−γ) H(Q)`.
pub fn delta_max<F: Real>(gamma: F, p: &PairDistribution<F>, q: &PairDistribution<F>) -> Result<F> {
    let query = DeltaQuery::new(gamma, gamma, p.clone(), q.clone())?;
    let h = entropy_h_unchecked::<F>;
    let (g, one) = (query.gamma, F::one());
    Ok(h(&mix(p, q, g)?) - g * h(p) - (one - g) * h(q))
}

/// `Δ` at each `θ` of a grid.
pub fn delta_grid<F: Real>(gamma: F, thetas: &[F], p: &PairDistribution<F>, q: &PairDistribution<F>) -> Result<Vec<(F, F)>> {
    thetas
        .iter()
        .map(|&theta| Ok((theta, delta(&DeltaQuery::new(gamma, theta, p.clone(), q.clone())?)?)))
        .collect()
}

fn single_segment(spec: &ProcessSpec) -> Result<()> {
    spec.validate()?;
    if spec.segments() != 1 {
        return Err(Error::config("Monte-Carlo distributions need a single-segment process"));
    }
    Ok(())
}

/// Pattern-pair distribution of order `order` estimated from one realization
/// of length `l_mc` of a single-segment process.
pub fn mc_pair_distribution<F: Real>(spec: &ProcessSpec, order: usize, l_mc: usize, seed: u64) -> Result<PairDistribution<F>> {
    single_segment(spec)?;
    let spec = ProcessSpec { length: l_mc, ..spec.clone() };
    let x: Vec<f64> = generate(&spec, seed)?;
    let seq = extract_sequence(&x, order)?;
    estimate_pair_distribution(&seq)
}

/// Pattern distribution of order `order`, indexed by code.
pub fn mc_pattern_distribution<F: Real>(spec: &ProcessSpec, order: usize, l_mc: usize, seed: u64) -> Result<Vec<F>> {
    single_segment(spec)?;
    let spec = ProcessSpec { length: l_mc, ..spec.clone() };
    let x: Vec<f64> = generate(&spec, seed)?;
    let seq = extract_sequence(&x, order)?;
    let mut counts = vec![0u64; pattern_count(order)];
    for &c in seq.codes() {
        counts[c as usize] += 1;
    }
    let n = F::of_count(seq.len() as u64);
    Ok(counts.into_iter().map(|c| F::of_count(c) / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::project_pairs;

    fn dist(order: usize, seed: u64) -> PairDistribution<f64> {
        let k = pattern_count(order);
        let mut s = seed;
        let raw: Vec<f64> = (0..k * k)
            .map(|_| {
                s = crate::seed::mix64(s);
                (s >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        let total: f64 = raw.iter().sum();
        PairDistribution::new(order, raw.into_iter().map(|v| v / total).collect()).unwrap()
    }

    #[test]
    fn equal_distributions_give_zero() {
        let p = dist(2, 1);
        for &g in &[0.1, 0.5, 0.9] {
            for &t in &[0.05, 0.5, 0.95] {
                let v = delta(&DeltaQuery::new(g, t, p.clone(), p.clone()).unwrap()).unwrap();
                assert!(v.abs() < 1e-12);
            }
            assert!(delta_max(g, &p, &p).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn query_validation() {
        let p = dist(1, 1);
        let q = dist(2, 2);
        assert!(DeltaQuery::new(0.5, 0.5, p.clone(), q).is_err());
        assert!(DeltaQuery::new(0.0, 0.5, p.clone(), p.clone()).is_err());
        assert!(DeltaQuery::new(0.5, 1.0, p.clone(), p.clone()).is_err());
    }

    #[test]
    fn maximum_is_at_gamma_and_branches_meet() {
        for seed in 0..20 {
            let (p, q) = (dist(2, seed), dist(2, seed + 100));
            for &g in &[0.2, 0.5, 0.73] {
                let m = delta_max(g, &p, &q).unwrap();
                assert!(m >= -1e-12);
                for i in 1..100 {
                    let t = i as f64 / 100.0;
                    let v = delta(&DeltaQuery::new(g, t, p.clone(), q.clone()).unwrap()).unwrap();
                    assert!(v <= m + 1e-12);
                    assert!(v >= -1e-12);
                }
                // θ = γ on the upper branch
                let at = delta(&DeltaQuery::new(g, g, p.clone(), q.clone()).unwrap()).unwrap();
                assert!((at - m).abs() < 1e-12);
                // lower branch approaching γ
                let lower = {
                    let h = |d: &PairDistribution<f64>| entropy_h_unchecked(d);
                    let w = (g - g) / (1.0 - g);
                    h(&mix(&p, &q, g).unwrap()) - g * h(&p) - (1.0 - g) * h(&mix(&p, &q, w).unwrap())
                };
                assert!((lower - m).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_over_equal_inputs_is_zero() {
        let p = dist(1, 5);
        let thetas: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        for (_, v) in delta_grid(0.5, &thetas, &p, &p).unwrap() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn white_noise_matches_enumeration() {
        let spec = ProcessSpec::ar(vec![0.0], vec![], 10).unwrap();
        let l_mc = 2_000_000;
        let p: PairDistribution<f64> = mc_pair_distribution(&spec, 1, l_mc, 3).unwrap();
        let exact = project_pairs(&[1.0 / 6.0; 6]).unwrap();
        for (a, b) in p.cells().iter().zip(exact.cells()) {
            let se = (b * (1.0 - b) / l_mc as f64).sqrt();
            assert!((a - b).abs() < 5.0 * se, "{a} vs {b}");
        }
    }

    #[test]
    fn projection_route_agrees_with_direct_route() {
        let spec = ProcessSpec::ar(vec![0.5], vec![], 10).unwrap();
        let l_mc = 1_000_000;
        let direct: PairDistribution<f64> = mc_pair_distribution(&spec, 2, l_mc, 8).unwrap();
        let high: Vec<f64> = mc_pattern_distribution(&spec, 3, l_mc, 8).unwrap();
        let projected = project_pairs(&high).unwrap();
        // same realization: the two estimates differ only by the last window
        for (a, b) in direct.cells().iter().zip(projected.cells()) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
        assert!(mc_pair_distribution::<f64>(&ProcessSpec::ar(vec![0.1, 0.2], vec![5], 10).unwrap(), 2, 100, 1).is_err());
    }
}
