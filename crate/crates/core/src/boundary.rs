//! Boundary classification from posterior output, the boundary-likelihood
//! baseline, and the per-metric effect verdict.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{alpha_min, AreaGraph, DissimilarityData};
use crate::mcmc::PosteriorSamples;
use crate::scalar::{quantile_sorted, sorted, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct BorderClass<T> {
    /// Posterior median of `w` (0 or 1).
    pub w_median: u8,
    /// Share of draws with `w = 1`.
    pub w_mean: T,
    pub is_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySet<T> {
    pub borders: Vec<BorderClass<T>>,
    pub boundary_count: usize,
    pub boundary_fraction: f64,
}

/// A border is a boundary when the posterior median of its `w` is zero.
/// An exact 50/50 split counts as `w = 1`.
pub fn classify_boundaries<T: Real>(samples: &PosteriorSamples<T>) -> Result<BoundarySet<T>> {
    let nd = samples.n_draws();
    if nd == 0 {
        return Err(Error::EmptySamples("w trace"));
    }
    let counts = samples.w_kept_counts();
    Ok(boundary_set_from_counts(&counts, nd))
}

pub(crate) fn boundary_set_from_counts<T: Real>(kept: &[usize], n_draws: usize) -> BoundarySet<T> {
    let borders: Vec<BorderClass<T>> = kept
        .iter()
        .map(|&c| {
            let is_boundary = 2 * c < n_draws;
            BorderClass {
                w_median: (!is_boundary) as u8,
                w_mean: T::of_usize(c) / T::of_usize(n_draws),
                is_boundary,
            }
        })
        .collect();
    let boundary_count = borders.iter().filter(|b| b.is_boundary).count();
    let boundary_fraction = if borders.is_empty() { 0.0 } else { boundary_count as f64 / borders.len() as f64 };
    BoundarySet { borders, boundary_count, boundary_fraction }
}

/// Boundary likelihood values `|R_k - R_j|` for every border.
#[derive(Debug, Clone, PartialEq)]
pub struct BlvResult<T> {
    pub values: Vec<T>,
}

pub fn blv<T: Real>(risk: &[T], graph: &AreaGraph) -> Result<BlvResult<T>> {
    if risk.len() != graph.n() {
        return Err(Error::LengthMismatch { what: "risk estimates", got: risk.len(), expected: graph.n() });
    }
    if let Some(k) = risk.iter().position(|&r| !(r > T::zero()) || !r.is_finite()) {
        return Err(Error::InvalidParameter(format!("risk estimate for area {k} must be positive")));
    }
    Ok(BlvResult { values: graph.borders().iter().map(|&(k, j)| (risk[k] - risk[j]).abs()).collect() })
}

impl<T: Real> BlvResult<T> {
    /// Rule (a): flag borders with `BLV > c1`.
    pub fn rule_a(&self, c1: T) -> Vec<bool> {
        self.values.iter().map(|&v| v > c1).collect()
    }

    /// Rule (b): flag the `ceil(c2 / 100 * B)` largest values; ties keep
    /// border order.
    pub fn rule_b(&self, c2: f64) -> Result<Vec<bool>> {
        if !(c2 > 0.0 && c2 <= 100.0) {
            return Err(Error::InvalidParameter(format!("c2 must lie in (0, 100], got {c2}")));
        }
        let nb = self.values.len();
        let count = (((c2 * nb as f64) / 100.0) - 1e-9).ceil().max(0.0) as usize;
        let mut order: Vec<usize> = (0..nb).collect();
        order.sort_by(|&a, &b| self.values[b].partial_cmp(&self.values[a]).expect("NaN in BLV"));
        let mut flags = vec![false; nb];
        for &b in order.iter().take(count) {
            flags[b] = true;
        }
        Ok(flags)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    Substantial,
    NoEffect,
    Inconclusive,
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Effect::Substantial => "substantial",
            Effect::NoEffect => "no-effect",
            Effect::Inconclusive => "inconclusive",
        })
    }
}

impl std::str::FromStr for Effect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "substantial" => Ok(Effect::Substantial),
            "no-effect" => Ok(Effect::NoEffect),
            "inconclusive" => Ok(Effect::Inconclusive),
            other => Err(Error::InvalidParameter(format!("unknown effect `{other}`"))),
        }
    }
}

/// Equal-tailed 95% interval from empirical percentiles.
pub fn credible_interval<T: Real>(draws: &[T]) -> Result<(T, T)> {
    if draws.len() < 2 {
        return Err(Error::EmptySamples("need at least two draws for an interval"));
    }
    let s = sorted(draws);
    Ok((quantile_sorted(&s, 0.025), quantile_sorted(&s, 0.975)))
}

/// Verdict from an interval: wholly below `alpha_min` means no effect, wholly
/// above means a substantial effect.
pub fn effect_from_interval<T: Real>(lower: T, upper: T, alpha_min: T) -> Effect {
    if upper < alpha_min {
        Effect::NoEffect
    } else if lower > alpha_min {
        Effect::Substantial
    } else {
        Effect::Inconclusive
    }
}

pub fn classify_effect<T: Real>(alpha_samples: &[T], alpha_min: T) -> Result<Effect> {
    let (lo, hi) = credible_interval(alpha_samples)?;
    Ok(effect_from_interval(lo, hi, alpha_min))
}

/// One row of the covariate-effect table.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectRow {
    pub metric: String,
    pub estimate: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub alpha_min: f64,
    pub effect: Effect,
}

/// Posterior median, 95% interval, threshold and verdict for every metric.
pub fn effect_table<T: Real>(samples: &PosteriorSamples<T>, dis: &DissimilarityData<T>) -> Result<Vec<EffectRow>> {
    (0..dis.q())
        .map(|i| {
            let draws = samples.alpha_draws(i);
            let (lo, hi) = credible_interval(&draws)?;
            let threshold = alpha_min(dis, i)?;
            Ok(EffectRow {
                metric: dis.metric_names()[i].clone(),
                estimate: quantile_sorted(&sorted(&draws), 0.5).to_f64_lossy(),
                ci_lower: lo.to_f64_lossy(),
                ci_upper: hi.to_f64_lossy(),
                alpha_min: threshold.to_f64_lossy(),
                effect: effect_from_interval(lo, hi, threshold),
            })
        })
        .collect()
}
