use super::{effective_sample_size, PosteriorSamples};
use crate::scalar::{mean, quantile_sorted, sorted, Real};

/// One row of the posterior summary table. `chain == None` means pooled.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub param: String,
    pub chain: Option<usize>,
    pub median: f64,
    pub mean: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskSummary {
    pub median: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

fn summarise<T: Real>(param: &str, chain: Option<usize>, draws: &[T], ess: f64) -> ParamSummary {
    let s = sorted(draws);
    ParamSummary {
        param: param.to_string(),
        chain,
        median: quantile_sorted(&s, 0.5).to_f64_lossy(),
        mean: mean(draws).to_f64_lossy(),
        ci_lower: quantile_sorted(&s, 0.025).to_f64_lossy(),
        ci_upper: quantile_sorted(&s, 0.975).to_f64_lossy(),
        ess,
    }
}

/// Per-chain and pooled summaries of `mu`, `tau2`, each `alpha_<metric>` and
/// the deviance.
pub fn summarize_params<T: Real>(samples: &PosteriorSamples<T>, metric_names: &[String]) -> Vec<ParamSummary> {
    let mut per_param: Vec<(String, Vec<Vec<T>>)> = vec![
        ("mu".into(), samples.chains.iter().map(|c| c.mu.clone()).collect()),
        ("tau2".into(), samples.chains.iter().map(|c| c.tau2.clone()).collect()),
    ];
    for (i, name) in metric_names.iter().enumerate().take(samples.q) {
        per_param.push((
            format!("alpha_{name}"),
            samples
                .chains
                .iter()
                .map(|c| c.alpha.chunks(samples.q).map(|a| a[i]).collect())
                .collect(),
        ));
    }
    per_param.push(("deviance".into(), samples.chains.iter().map(|c| c.deviance.clone()).collect()));

    let mut rows = Vec::new();
    for (name, chains) in per_param {
        let mut total_ess = 0.0;
        for (c, draws) in chains.iter().enumerate() {
            let ess = effective_sample_size(draws);
            total_ess += ess;
            rows.push(summarise(&name, Some(c), draws, ess));
        }
        let pooled: Vec<T> = chains.concat();
        rows.push(summarise(&name, None, &pooled, total_ess));
    }
    rows
}

/// Posterior median and equal-tailed 95% interval of every `R_k`.
pub fn risk_summary<T: Real>(samples: &PosteriorSamples<T>) -> Vec<RiskSummary> {
    (0..samples.n)
        .map(|k| {
            let s = sorted(&samples.risk_draws(k));
            RiskSummary {
                median: quantile_sorted(&s, 0.5).to_f64_lossy(),
                ci_lower: quantile_sorted(&s, 0.025).to_f64_lossy(),
                ci_upper: quantile_sorted(&s, 0.975).to_f64_lossy(),
            }
        })
        .collect()
}
