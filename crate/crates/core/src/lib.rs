// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change-point detection from the ordinal structure of real-valued time series.
//!
//! The central quantity is the CEofOP statistic: the conditional entropy of
//! ordinal patterns of a whole sequence, minus the length-weighted conditional
//! entropies of the parts before and after a candidate split. It peaks where the
//! transition structure of the pattern sequence changes.
//!
//! Module map:
//!
//! - [`ordinal`]: pattern encoding, sequence extraction, range counts
//! - [`entropy`]: empirical conditional entropy, `H(P)` on pair distributions
//! - [`statistics`]: CEofOP (naive and incremental), likelihood ratio, Brodsky–Darkhovsky baselines
//! - [`detection`]: bootstrap-calibrated single and multiple change-point detection
//! - [`processes`]: piecewise-stationary AR(1) and noisy logistic generators
//! - [`asymptotics`]: the limiting Δ-functional and Monte-Carlo pair distributions
//! - [`bench`]: experiment harness and accuracy metrics
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*F64` aliases
//! below name the usual double-precision instantiations.

#![forbid(unsafe_code)]

pub mod asymptotics;
pub mod bench;
pub mod detection;
pub mod entropy;
mod error;
pub mod ordinal;
pub mod processes;
mod scalar;
pub mod seed;
pub mod statistics;

pub use error::{Error, Result};
pub use scalar::Real;

pub use asymptotics::{delta, delta_max, mc_pair_distribution, DeltaQuery};
pub use bench::{run_benchmark, BenchmarkPlan, BenchmarkSummary, Statistic};
pub use detection::{
    detect_multiple, detect_single, map_to_series_time, DetectionConfig, DetectionReport,
    SingleOutcome,
};
pub use entropy::{ece, entropy_h, estimate_pair_distribution, mix, project_pairs, PairDistribution};
pub use ordinal::{count_range, encode_pattern, extract_sequence, OrdinalPattern, PairCounts, PatternSequence};
pub use processes::{gen_ar, gen_nl, random_change_points, ProcessKind, ProcessSpec};
pub use statistics::{bd_corr, bd_exp, ceofop_at, ceofop_profile, lr_statistic, StatProfile};

pub type PairDistributionF64 = PairDistribution<f64>;
pub type PairDistributionF32 = PairDistribution<f32>;
pub type StatProfileF64 = StatProfile<f64>;
pub type StatProfileF32 = StatProfile<f32>;
pub type DetectionReportF64 = DetectionReport<f64>;
pub type DeltaQueryF64 = DeltaQuery<f64>;
