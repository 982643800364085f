#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use womble::AreaGraph;

/// Random graph on 1..=max_n areas, each pair bordering with probability 1/2.
pub fn random_graph<R: Rng>(rng: &mut R, max_n: usize) -> AreaGraph {
    let n = rng.random_range(1..=max_n);
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.5) {
                pairs.push((a, b));
            }
        }
    }
    AreaGraph::from_pairs(n, &pairs).unwrap()
}

/// Dense `rho (D_w - W) + (1 - rho) I` assembled entry by entry.
pub fn dense_precision(graph: &AreaGraph, w: &[bool], rho: f64) -> DMatrix<f64> {
    let n = graph.n();
    let mut q = DMatrix::<f64>::identity(n, n) * (1.0 - rho);
    for (&(k, j), &keep) in graph.borders().iter().zip(w) {
        if keep {
            q[(k, k)] += rho;
            q[(j, j)] += rho;
            q[(k, j)] -= rho;
            q[(j, k)] -= rho;
        }
    }
    q
}

pub fn path(n: usize) -> AreaGraph {
    let pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
    AreaGraph::from_pairs(n, &pairs).unwrap()
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Standard error of a correlated trace's mean from non-overlapping batch
/// means.
pub fn batch_means_se(x: &[f64], batches: usize) -> f64 {
    let size = x.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| mean(&x[b * size..(b + 1) * size])).collect();
    let m = mean(&means);
    let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
    (var / batches as f64).sqrt()
}
