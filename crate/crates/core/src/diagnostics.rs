//! Residual spatial autocorrelation: Moran's I with a permutation test.

use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::AreaGraph;
use crate::mcmc::ObservedData;
use crate::scalar::Real;
use crate::seed::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualType {
    Pearson,
    Raw,
}

impl fmt::Display for ResidualType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResidualType::Pearson => "pearson",
            ResidualType::Raw => "raw",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoranResult<T> {
    pub statistic: T,
    pub p_value: f64,
    pub n_permutations: usize,
    pub residual_type: ResidualType,
}

/// Pearson residuals `(y - E R) / sqrt(E R)`.
pub fn pearson_residuals<T: Real>(data: &ObservedData<T>, risk: &[T]) -> Result<Vec<T>> {
    if risk.len() != data.n() {
        return Err(Error::LengthMismatch { what: "risk estimates", got: risk.len(), expected: data.n() });
    }
    Ok(data
        .y
        .iter()
        .zip(&data.e)
        .zip(risk)
        .map(|((&y, &e), &r)| {
            let fitted = e * r;
            (T::of(y as f64) - fitted) / fitted.sqrt()
        })
        .collect())
}

fn check_weights(graph: &AreaGraph, weights: &[bool]) -> Result<usize> {
    if weights.len() != graph.n_borders() {
        return Err(Error::LengthMismatch { what: "border weights", got: weights.len(), expected: graph.n_borders() });
    }
    let kept = weights.iter().filter(|&&w| w).count();
    if kept == 0 {
        return Err(Error::NoBorders);
    }
    Ok(kept)
}

fn centred<T: Real>(values: &[T]) -> Result<(Vec<T>, T)> {
    let mean = crate::scalar::mean(values);
    let c: Vec<T> = values.iter().map(|&v| v - mean).collect();
    let ss: T = c.iter().map(|&v| v * v).sum();
    let scale = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if !(ss > T::epsilon() * T::epsilon() * scale * scale * T::of_usize(values.len())) {
        return Err(Error::ZeroVariance);
    }
    Ok((c, ss))
}

fn cross_sum<T: Real>(graph: &AreaGraph, weights: &[bool], c: &[T]) -> T {
    graph
        .borders()
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w)
        .map(|(&(k, j), _)| c[k] * c[j])
        .sum()
}

/// Moran's I with binary symmetric weights on the kept borders (`S0` counts
/// both orientations of each border).
pub fn morans_i<T: Real>(values: &[T], graph: &AreaGraph, weights: &[bool]) -> Result<T> {
    if values.len() != graph.n() {
        return Err(Error::LengthMismatch { what: "values", got: values.len(), expected: graph.n() });
    }
    let kept = check_weights(graph, weights)?;
    let (c, ss) = centred(values)?;
    let n = T::of_usize(values.len());
    let s0 = T::of_usize(2 * kept);
    Ok(n / s0 * T::of(2.0) * cross_sum(graph, weights, &c) / ss)
}

/// One-sided (upper tail) permutation test. Each permutation draws from its
/// own stream derived from `seed`, so the result does not depend on
/// scheduling.
pub fn moran_permutation_test<T: Real>(
    residuals: &[T],
    graph: &AreaGraph,
    weights: &[bool],
    n_permutations: usize,
    seed: u64,
    residual_type: ResidualType,
) -> Result<MoranResult<T>> {
    let observed = morans_i(residuals, graph, weights)?;
    let (c, _) = centred(residuals)?;
    let observed_cross = cross_sum(graph, weights, &c);
    // The scale factor is permutation-invariant, so compare cross sums.
    let exceed: usize = (0..n_permutations)
        .into_par_iter()
        .map(|p| {
            let mut rng = stream_rng(seed, Stream::Permutation, p as u64);
            let mut perm = c.clone();
            perm.shuffle(&mut rng);
            (cross_sum(graph, weights, &perm) >= observed_cross) as usize
        })
        .sum();
    Ok(MoranResult {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (1 + n_permutations) as f64,
        n_permutations,
        residual_type,
    })
}
