// SPDX-License-Identifier: MIT OR Apache-2.0

//! Piecewise-stationary test processes.
//!
//! Segment `k` covers times `t*_{k-1} + 1 ..= t*_k` with `t*_0 = 0` and
//! `t*_N = L`; time `0` belongs to the first segment. Realizations hold
//! `L + 1` values `x(0), ..., x(L)`.
//!
//! - AR: `x(0) = ε(0)`, `x(t) = φ_k x(t−1) + ε(t)`.
//! - NL: latent `y(0) ~ U[0, 1]`, `y(t) = r_k y(t−1)(1 − y(t−1))`, observed
//!   `x(t) = y(t) + σ_k ε(t)`. The latent state runs on across change-points;
//!   only `(r_k, σ_k)` switch.
//!
//! `ε` is i.i.d. standard normal, drawn with the ziggurat sampler of
//! `rand_distr` from a ChaCha8 stream (see [`NORMAL_METHOD`]).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed::rng_from;

/// Name of the normal-deviate method, recorded in generated metadata.
pub const NORMAL_METHOD: &str = "rand_distr::StandardNormal (ziggurat) over ChaCha8";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProcessKind {
    /// AR(1) coefficients, one per segment, each in `[0, 1)`.
    Ar { phi: Vec<f64> },
    /// Logistic-map parameters in `[3.57, 4]` and noise levels `> 0`, one per segment.
    Nl { r: Vec<f64>, sigma: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(flatten)]
    pub kind: ProcessKind,
    #[serde(default)]
    pub change_points: Vec<usize>,
    /// Last time index `L`; realizations hold `L + 1` values.
    pub length: usize,
}

impl ProcessSpec {
    pub fn ar(phi: Vec<f64>, change_points: Vec<usize>, length: usize) -> Result<Self> {
        let s = Self { kind: ProcessKind::Ar { phi }, change_points, length };
        s.validate()?;
        Ok(s)
    }

    pub fn nl(r: Vec<f64>, sigma: Vec<f64>, change_points: Vec<usize>, length: usize) -> Result<Self> {
        let s = Self { kind: ProcessKind::Nl { r, sigma }, change_points, length };
        s.validate()?;
        Ok(s)
    }

    pub fn segments(&self) -> usize {
        match &self.kind {
            ProcessKind::Ar { phi } => phi.len(),
            ProcessKind::Nl { r, .. } => r.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.segments();
        if n == 0 {
            return Err(Error::config("process needs at least one segment"));
        }
        if self.change_points.len() + 1 != n {
            return Err(Error::config(format!(
                "{n} segments need {} change_points, got {}",
                n - 1,
                self.change_points.len()
            )));
        }
        if self.length < 1 {
            return Err(Error::config("length must be at least 1"));
        }
        if self.change_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("change_points must be strictly increasing"));
        }
        if let (Some(&first), Some(&last)) = (self.change_points.first(), self.change_points.last()) {
            if first == 0 || last >= self.length {
                return Err(Error::config(format!(
                    "change_points must lie in (0, {}), got {:?}",
                    self.length, self.change_points
                )));
            }
        }
        match &self.kind {
            ProcessKind::Ar { phi } => {
                if let Some(p) = phi.iter().find(|p| !(**p >= 0.0 && **p < 1.0)) {
                    return Err(Error::config(format!("phi = {p} outside [0, 1)")));
                }
            }
            ProcessKind::Nl { r, sigma } => {
                if sigma.len() != r.len() {
                    return Err(Error::config(format!(
                        "sigma has {} entries, r has {}",
                        sigma.len(),
                        r.len()
                    )));
                }
                if let Some(v) = r.iter().find(|v| !(**v >= 3.57 && **v <= 4.0)) {
                    return Err(Error::config(format!("r = {v} outside [3.57, 4]")));
                }
                if let Some(s) = sigma.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
                    return Err(Error::config(format!("sigma = {s} must be positive")));
                }
            }
        }
        Ok(())
    }

    /// Segment index of each time `0..=L`.
    fn segment_index(&self) -> impl Iterator<Item = usize> + '_ {
        let mut k = 0;
        (0..=self.length).map(move |t| {
            while k < self.change_points.len() && t > self.change_points[k] {
                k += 1;
            }
            k
        })
    }
}

/// Generator knobs. The defaults reproduce the plain process definitions.
#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Steps run with the first segment's parameters before `t = 0`.
    pub burn_in: usize,
    /// Replace every `ε(t)` by zero.
    pub silence_noise: bool,
    /// Fixed latent start for NL instead of a uniform draw.
    pub nl_initial: Option<f64>,
}

/// Piecewise AR(1) realization `x(0), ..., x(L)`.
pub fn gen_ar<F: Real>(spec: &ProcessSpec, seed: u64) -> Result<Vec<F>> {
    gen_ar_with(spec, seed, &SimOptions::default())
}

pub fn gen_ar_with<F: Real>(spec: &ProcessSpec, seed: u64, opts: &SimOptions) -> Result<Vec<F>> {
    spec.validate()?;
    let ProcessKind::Ar { phi } = &spec.kind else {
        return Err(Error::config("gen_ar needs an AR spec"));
    };
    let mut rng = rng_from(seed);
    let mut noise = || -> f64 {
        let e: f64 = StandardNormal.sample(&mut rng);
        if opts.silence_noise { 0.0 } else { e }
    };

    let mut prev = noise();
    for _ in 0..opts.burn_in {
        prev = phi[0] * prev + noise();
    }
    let mut out = Vec::with_capacity(spec.length + 1);
    for (t, k) in spec.segment_index().enumerate() {
        let v = if t == 0 && opts.burn_in == 0 { prev } else { phi[k] * prev + noise() };
        out.push(F::of(v));
        prev = v;
    }
    Ok(out)
}

/// Piecewise noisy-logistic realization `x(0), ..., x(L)`.
pub fn gen_nl<F: Real>(spec: &ProcessSpec, seed: u64) -> Result<Vec<F>> {
    Ok(gen_nl_with(spec, seed, &SimOptions::default())?.0)
}

/// Observed and latent NL paths.
pub fn gen_nl_with<F: Real>(spec: &ProcessSpec, seed: u64, opts: &SimOptions) -> Result<(Vec<F>, Vec<F>)> {
    spec.validate()?;
    let ProcessKind::Nl { r, sigma } = &spec.kind else {
        return Err(Error::config("gen_nl needs an NL spec"));
    };
    if let Some(y0) = opts.nl_initial {
        if !(0.0..=1.0).contains(&y0) {
            return Err(Error::config(format!("initial latent value {y0} outside [0, 1]")));
        }
    }
    let mut rng = rng_from(seed);
    let drawn: f64 = rng.random();
    let mut y = opts.nl_initial.unwrap_or(drawn);
    for _ in 0..opts.burn_in {
        y = r[0] * y * (1.0 - y);
    }
    let mut observed = Vec::with_capacity(spec.length + 1);
    let mut latent = Vec::with_capacity(spec.length + 1);
    for (t, k) in spec.segment_index().enumerate() {
        if t > 0 || opts.burn_in > 0 {
            y = r[k] * y * (1.0 - y);
        }
        let e: f64 = StandardNormal.sample(&mut rng);
        let e = if opts.silence_noise { 0.0 } else { e };
        latent.push(F::of(y));
        observed.push(F::of(y + sigma[k] * e));
    }
    Ok((observed, latent))
}

/// Dispatch on the process kind.
pub fn generate<F: Real>(spec: &ProcessSpec, seed: u64) -> Result<Vec<F>> {
    match spec.kind {
        ProcessKind::Ar { .. } => gen_ar(spec, seed),
        ProcessKind::Nl { .. } => gen_nl(spec, seed),
    }
}

/// Draw each change-point uniformly from `{c − W, ..., c + W}` around its center.
pub fn random_change_points<R: Rng + ?Sized>(
    centers: &[usize],
    half_width: usize,
    length: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    for (k, &c) in centers.iter().enumerate() {
        if c < half_width + 1 || c + half_width >= length {
            return Err(Error::config(format!(
                "window {c} ± {half_width} does not fit inside (0, {length})"
            )));
        }
        if k > 0 && centers[k - 1] + half_width >= c - half_width {
            return Err(Error::config(format!(
                "windows around {} and {c} overlap (half-width {half_width})",
                centers[k - 1]
            )));
        }
    }
    Ok(centers
        .iter()
        .map(|&c| rng.random_range(c - half_width..=c + half_width))
        .collect())
}
