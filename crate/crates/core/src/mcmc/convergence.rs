use crate::scalar::Real;

fn autocovariance(x: &[f64], mean: f64, lag: usize) -> f64 {
    let n = x.len();
    (0..n - lag).map(|t| (x[t] - mean) * (x[t + lag] - mean)).sum::<f64>() / n as f64
}

/// Effective sample size of one chain using Geyer's initial monotone
/// positive sequence.
pub fn effective_sample_size<T: Real>(draws: &[T]) -> f64 {
    let x: Vec<f64> = draws.iter().map(|v| v.to_f64_lossy()).collect();
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c0 = autocovariance(&x, mean, 0);
    if c0 <= 0.0 {
        return n as f64;
    }
    let mut sum = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocovariance(&x, mean, lag) + autocovariance(&x, mean, lag + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        sum += pair;
        prev_pair = pair;
        lag += 2;
    }
    // sum = 1 + 2 * sum_{t>=1} rho_t, since the first pair includes rho_0 = 1.
    let tau = 2.0 * sum - 1.0;
    (n as f64 / tau.max(1.0 / n as f64)).min(n as f64 * (n as f64).log10().max(1.0))
}

/// Potential scale reduction factor across chains of equal length.
///
/// Returns `None` with fewer than two chains or fewer than two draws each.
pub fn gelman_rubin<T: Real>(chains: &[Vec<T>]) -> Option<f64> {
    let m = chains.len();
    if m < 2 {
        return None;
    }
    let n = chains.iter().map(Vec::len).min()?;
    if n < 2 {
        return None;
    }
    let means: Vec<f64> = chains
        .iter()
        .map(|c| c[..n].iter().map(|v| v.to_f64_lossy()).sum::<f64>() / n as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / m as f64;
    let between = n as f64 * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>() / (m - 1) as f64;
    let within = chains
        .iter()
        .zip(&means)
        .map(|(c, &mu)| c[..n].iter().map(|v| (v.to_f64_lossy() - mu).powi(2)).sum::<f64>() / (n - 1) as f64)
        .sum::<f64>()
        / m as f64;
    if within <= 0.0 {
        return if between <= 0.0 { Some(1.0) } else { Some(f64::INFINITY) };
    }
    let var_plus = (n - 1) as f64 / n as f64 * within + between / n as f64;
    Some((var_plus / within).sqrt())
}
