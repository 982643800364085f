//! Metropolis-within-Gibbs sampler for the boundary model.
//!
//! One sweep updates, in order: every `phi_k` by random-walk Metropolis, `mu`
//! by an exact Gibbs draw, `tau2` by random-walk Metropolis on `ln tau2`, and
//! each coefficient `alpha_i` by random-walk Metropolis truncated to
//! `[0, M_i]`. Step sizes adapt towards 0.44 acceptance during burn-in only.

mod convergence;
mod summary;

pub use convergence::{effective_sample_size, gelman_rubin};
pub use summary::{risk_summary, summarize_params, ParamSummary, RiskSummary};

use rand::Rng;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::car::{full_conditional_phi, log_density_centred, CarParams, PrecisionBuilder, PrecisionStructure};
use crate::error::{Error, Result};
use crate::graph::{alpha_prior_upper, evaluate_w, evaluate_w_unchecked, AdjacencyState, AreaGraph, DissimilarityData};
use crate::scalar::Real;
use crate::seed::{stream_rng, Stream, StreamRng};

/// `phi` proposals beyond this magnitude are rejected outright.
pub const PHI_LIMIT: f64 = 50.0;

const MAX_INIT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ObservedData<T> {
    pub y: Vec<u64>,
    pub e: Vec<T>,
}

impl<T: Real> ObservedData<T> {
    pub fn new(y: Vec<u64>, e: Vec<T>) -> Result<Self> {
        if y.len() != e.len() {
            return Err(Error::LengthMismatch { what: "expected counts", got: e.len(), expected: y.len() });
        }
        if let Some(k) = e.iter().position(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("expected count for area {k} must be positive")));
        }
        Ok(ObservedData { y, e })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Poisson deviance `-2 sum [y ln(E R) - E R - ln y!]` at log-risks `phi`.
    pub fn deviance(&self, phi: &[T]) -> T {
        let two = T::of(2.0);
        let ll: T = self
            .y
            .iter()
            .zip(&self.e)
            .zip(phi)
            .map(|((&y, &e), &p)| {
                let yf = T::of(y as f64);
                let mean = e * p.exp();
                let term = if y == 0 { T::zero() } else { yf * (e.ln() + p) };
                term - mean - T::of(ln_gamma(y as f64 + 1.0))
            })
            .sum();
        -two * ll
    }

    /// Deviance at explicit risks `R` rather than log-risks.
    pub fn deviance_at_risk(&self, risk: &[T]) -> T {
        let phi: Vec<T> = risk.iter().map(|r| r.ln()).collect();
        self.deviance(&phi)
    }
}

/// Blocks held at a fixed value instead of being sampled.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FixedBlocks<T> {
    pub mu: Option<T>,
    pub tau2: Option<T>,
    pub alpha: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig<T> {
    pub n_chains: usize,
    pub burn_in: usize,
    /// Post-burn-in iterations per chain; `keep / thin` draws are retained.
    pub keep: usize,
    pub thin: usize,
    pub seed: u64,
    pub phi_step: T,
    /// Random-walk scale on `ln tau2`.
    pub tau2_step: T,
    pub alpha_step: T,
    pub adapt: bool,
    pub target_acceptance: f64,
    pub max_boundary_fraction: f64,
    pub rho: T,
    pub mu_prior_var: T,
    /// Upper limit of the uniform prior on `tau`.
    pub tau_upper: T,
    pub fixed: FixedBlocks<T>,
    /// When false the Poisson likelihood is dropped and the sampler targets
    /// the prior. Only useful for validating the sampler.
    pub use_likelihood: bool,
}

impl<T: Real> Default for ChainConfig<T> {
    fn default() -> Self {
        ChainConfig {
            n_chains: 5,
            burn_in: 40_000,
            keep: 10_000,
            thin: 1,
            seed: 1,
            phi_step: T::of(0.1),
            tau2_step: T::of(0.3),
            alpha_step: T::of(0.05),
            adapt: true,
            target_acceptance: 0.44,
            max_boundary_fraction: 0.5,
            rho: T::of(0.99),
            mu_prior_var: T::of(10.0),
            tau_upper: T::of(10.0),
            fixed: FixedBlocks::default(),
            use_likelihood: true,
        }
    }
}

impl<T: Real> ChainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::Config("at least one chain is required".into()));
        }
        if self.keep == 0 {
            return Err(Error::Config("keep must be positive".into()));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.keep / self.thin == 0 {
            return Err(Error::Config("keep / thin retains no draws".into()));
        }
        for (name, v) in [("phi step", self.phi_step), ("tau2 step", self.tau2_step), ("alpha step", self.alpha_step)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be non-negative")));
            }
        }
        if !(self.rho >= T::zero() && self.rho < T::one()) {
            return Err(Error::Config("rho must lie in [0, 1)".into()));
        }
        if !(self.mu_prior_var > T::zero()) || !(self.tau_upper > T::zero()) {
            return Err(Error::Config("prior scales must be positive".into()));
        }
        if !(self.max_boundary_fraction > 0.0 && self.max_boundary_fraction <= 1.0) {
            return Err(Error::Config("max boundary fraction must lie in (0, 1]".into()));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::Config("target acceptance must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn retained_per_chain(&self) -> usize {
        self.keep / self.thin
    }
}

/// Current state of one chain.
#[derive(Debug, Clone)]
pub struct ModelState<T> {
    pub phi: Vec<T>,
    pub params: CarParams<T>,
    pub adj: AdjacencyState,
    pub log_post: T,
}

/// Post-burn-in acceptance rates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AcceptanceReport {
    /// Mean over areas.
    pub phi: f64,
    pub tau2: f64,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSamples<T> {
    pub chain: usize,
    /// Draw-major: draw `d` occupies `[d*n, (d+1)*n)`.
    pub phi: Vec<T>,
    pub mu: Vec<T>,
    pub tau2: Vec<T>,
    /// Draw-major, `q` per draw.
    pub alpha: Vec<T>,
    /// Draw-major, one flag per border.
    pub w: Vec<bool>,
    pub deviance: Vec<T>,
    pub acceptance: AcceptanceReport,
}

impl<T: Real> ChainSamples<T> {
    pub fn n_draws(&self) -> usize {
        self.mu.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples<T> {
    pub n: usize,
    pub q: usize,
    pub n_borders: usize,
    pub chains: Vec<ChainSamples<T>>,
}

impl<T: Real> PosteriorSamples<T> {
    pub fn n_draws(&self) -> usize {
        self.chains.iter().map(|c| c.n_draws()).sum()
    }

    pub fn phi_draw(&self, chain: usize, d: usize) -> &[T] {
        &self.chains[chain].phi[d * self.n..(d + 1) * self.n]
    }

    pub fn alpha_draw(&self, chain: usize, d: usize) -> &[T] {
        &self.chains[chain].alpha[d * self.q..(d + 1) * self.q]
    }

    pub fn w_draw(&self, chain: usize, d: usize) -> &[bool] {
        &self.chains[chain].w[d * self.n_borders..(d + 1) * self.n_borders]
    }

    /// Pooled draws of `R_k = exp(phi_k)`.
    pub fn risk_draws(&self, k: usize) -> Vec<T> {
        self.chains
            .iter()
            .flat_map(|c| c.phi.chunks(self.n).map(move |p| p[k].exp()))
            .collect()
    }

    pub fn alpha_draws(&self, i: usize) -> Vec<T> {
        self.chains
            .iter()
            .flat_map(|c| c.alpha.chunks(self.q).map(move |a| a[i]))
            .collect()
    }

    pub fn mu_draws(&self) -> Vec<T> {
        self.chains.iter().flat_map(|c| c.mu.iter().copied()).collect()
    }

    pub fn tau2_draws(&self) -> Vec<T> {
        self.chains.iter().flat_map(|c| c.tau2.iter().copied()).collect()
    }

    /// Number of pooled draws with `w = 1` on each border.
    pub fn w_kept_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_borders];
        for c in &self.chains {
            for draw in c.w.chunks(self.n_borders) {
                for (cnt, &w) in counts.iter_mut().zip(draw) {
                    *cnt += w as usize;
                }
            }
        }
        counts
    }

    /// Posterior mean of `R_k` for every area.
    pub fn risk_means(&self) -> Vec<T> {
        let nd = T::of_usize(self.n_draws());
        let mut sums = vec![T::zero(); self.n];
        for c in &self.chains {
            for p in c.phi.chunks(self.n) {
                for (s, &v) in sums.iter_mut().zip(p) {
                    *s = *s + v.exp();
                }
            }
        }
        sums.into_iter().map(|s| s / nd).collect()
    }
}

/// DIC summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dic<T> {
    pub dic: T,
    pub p_d: T,
    pub mean_deviance: T,
}

/// `DIC = mean(D) + p_D`, `p_D = mean(D) - D(R_bar)` with `R_bar` the
/// posterior mean risk.
pub fn dic<T: Real>(samples: &PosteriorSamples<T>, data: &ObservedData<T>) -> Result<Dic<T>> {
    let nd = samples.n_draws();
    if nd == 0 {
        return Err(Error::EmptySamples("deviance trace"));
    }
    if data.n() != samples.n {
        return Err(Error::LengthMismatch { what: "observed data", got: data.n(), expected: samples.n });
    }
    let mean_deviance = samples
        .chains
        .iter()
        .flat_map(|c| c.deviance.iter().copied())
        .sum::<T>()
        / T::of_usize(nd);
    let at_mean = data.deviance_at_risk(&samples.risk_means());
    let p_d = mean_deviance - at_mean;
    Ok(Dic { dic: mean_deviance + p_d, p_d, mean_deviance })
}

#[derive(Debug, Clone, Copy, Default)]
struct Counter {
    tried: u64,
    accepted: u64,
}

impl Counter {
    fn record(&mut self, accepted: bool) {
        self.tried += 1;
        self.accepted += accepted as u64;
    }

    fn rate(&self) -> f64 {
        if self.tried == 0 {
            0.0
        } else {
            self.accepted as f64 / self.tried as f64
        }
    }
}

/// One Markov chain: the model state plus everything needed to update it.
pub struct Chain<'a, T: Real> {
    graph: &'a AreaGraph,
    dis: &'a DissimilarityData<T>,
    data: &'a ObservedData<T>,
    builder: &'a PrecisionBuilder,
    config: &'a ChainConfig<T>,
    upper: Vec<T>,
    state: ModelState<T>,
    prec: PrecisionStructure<T>,
    phi_steps: Vec<T>,
    tau2_step: T,
    alpha_steps: Vec<T>,
    phi_count: Vec<Counter>,
    tau2_count: Counter,
    alpha_count: Vec<Counter>,
    adapt_iter: usize,
    rng: StreamRng,
}

#[inline]
fn poisson_loglik<T: Real>(y: u64, e: T, phi: T) -> T {
    T::of(y as f64) * phi - e * phi.exp()
}

fn accept<T: Real>(log_ratio: T, rng: &mut StreamRng) -> bool {
    if log_ratio >= T::zero() {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio.to_f64_lossy()
}

/// Prior upper limits `M_i` for every metric.
pub fn alpha_upper_limits<T: Real>(dis: &DissimilarityData<T>, max_boundary_fraction: f64) -> Result<Vec<T>> {
    (0..dis.q()).map(|i| alpha_prior_upper(dis, i, max_boundary_fraction).map(|u| u.m)).collect()
}

impl<'a, T: Real> Chain<'a, T> {
    /// Builds a chain from an explicit starting state.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        graph: &'a AreaGraph,
        dis: &'a DissimilarityData<T>,
        data: &'a ObservedData<T>,
        builder: &'a PrecisionBuilder,
        config: &'a ChainConfig<T>,
        upper: Vec<T>,
        phi: Vec<T>,
        params: CarParams<T>,
        rng: StreamRng,
    ) -> Result<Self> {
        params.validate()?;
        if phi.len() != graph.n() || data.n() != graph.n() {
            return Err(Error::LengthMismatch { what: "phi", got: phi.len(), expected: graph.n() });
        }
        let adj = evaluate_w(graph, dis, &params.alpha)?;
        let prec = builder.build(&adj, params.rho)?;
        let n = graph.n();
        let q = dis.q();
        let mut chain = Chain {
            graph,
            dis,
            data,
            builder,
            config,
            upper,
            state: ModelState { phi, params, adj, log_post: T::zero() },
            prec,
            phi_steps: vec![config.phi_step; n],
            tau2_step: config.tau2_step,
            alpha_steps: vec![config.alpha_step; q],
            phi_count: vec![Counter::default(); n],
            tau2_count: Counter::default(),
            alpha_count: vec![Counter::default(); q],
            adapt_iter: 0,
            rng,
        };
        chain.state.log_post = chain.log_posterior();
        Ok(chain)
    }

    pub fn state(&self) -> &ModelState<T> {
        &self.state
    }

    pub fn precision(&self) -> &PrecisionStructure<T> {
        &self.prec
    }

    fn centred_quad(&self) -> T {
        let mu = self.state.params.mu;
        let centred: Vec<T> = self.state.phi.iter().map(|&p| p - mu).collect();
        self.prec.quad_form(&centred)
    }

    fn car_log_density(&self) -> T {
        log_density_centred(self.centred_quad(), self.state.params.tau2, &self.prec)
    }

    /// Joint log-density of data, random effects and hyperparameters (up to
    /// the constant from the uniform priors).
    pub fn log_posterior(&self) -> T {
        let p = &self.state.params;
        let mut lp = self.car_log_density();
        if self.config.use_likelihood {
            lp = lp - self.data.deviance(&self.state.phi) * T::of(0.5);
        }
        lp = lp - p.mu * p.mu / (T::of(2.0) * self.config.mu_prior_var);
        lp = lp - T::of(0.5) * p.tau2.ln();
        lp
    }

    fn adapt(step: &mut T, accepted: bool, gain: f64, target: f64, cap: T) {
        let delta = gain * ((accepted as u8 as f64) - target);
        let next = *step * T::of(delta.exp());
        *step = next.min(cap).max(T::of(1e-8));
    }

    /// One sweep of single-site random-walk Metropolis over all areas.
    pub fn update_phi(&mut self, adapting: bool) {
        let gain = self.gain();
        let target = self.config.target_acceptance;
        let limit = T::of(PHI_LIMIT);
        let two = T::of(2.0);
        for k in 0..self.graph.n() {
            let step = self.phi_steps[k];
            let current = self.state.phi[k];
            let proposal = current + step * T::std_normal(&mut self.rng);
            let ok = if proposal.abs() > limit {
                false
            } else if step == T::zero() {
                true
            } else {
                let (m, v) = full_conditional_phi(k, &self.state.phi, &self.state.params, self.graph, &self.state.adj);
                let mut log_ratio = ((current - m) * (current - m) - (proposal - m) * (proposal - m)) / (two * v);
                if self.config.use_likelihood {
                    let (y, e) = (self.data.y[k], self.data.e[k]);
                    log_ratio = log_ratio + poisson_loglik(y, e, proposal) - poisson_loglik(y, e, current);
                }
                accept(log_ratio, &mut self.rng)
            };
            if ok {
                self.state.phi[k] = proposal;
            }
            if adapting {
                Self::adapt(&mut self.phi_steps[k], ok, gain, target, T::of(5.0));
            } else {
                self.phi_count[k].record(ok);
            }
        }
    }

    /// Exact Gibbs draw of `mu`.
    pub fn update_mu(&mut self) {
        if let Some(mu) = self.config.fixed.mu {
            self.state.params.mu = mu;
            return;
        }
        let (mean, var) = mu_full_conditional(&self.state.phi, self.state.params.tau2, &self.prec, self.config.mu_prior_var);
        self.state.params.mu = mean + var.sqrt() * T::std_normal(&mut self.rng);
    }

    /// Random-walk Metropolis on `ln tau2`.
    pub fn update_tau2(&mut self, adapting: bool) {
        if let Some(t) = self.config.fixed.tau2 {
            self.state.params.tau2 = t;
            return;
        }
        let current = self.state.params.tau2;
        let log_prop = current.ln() + self.tau2_step * T::std_normal(&mut self.rng);
        let proposal = log_prop.exp();
        let limit = self.config.tau_upper * self.config.tau_upper;
        let ok = if !(proposal > T::zero()) || proposal > limit || !proposal.is_finite() {
            false
        } else {
            let quad = self.centred_quad();
            accept(tau2_log_target(quad, proposal, self.graph.n()) - tau2_log_target(quad, current, self.graph.n()), &mut self.rng)
        };
        if ok {
            self.state.params.tau2 = proposal;
        }
        if adapting {
            let gain = self.gain();
            Self::adapt(&mut self.tau2_step, ok, gain, self.config.target_acceptance, T::of(3.0));
        } else {
            self.tau2_count.record(ok);
        }
    }

    /// Component-wise truncated random-walk Metropolis on `alpha`.
    pub fn update_alpha(&mut self, adapting: bool) -> Result<()> {
        if let Some(fixed) = &self.config.fixed.alpha {
            self.state.params.alpha.clone_from(fixed);
            return Ok(());
        }
        let gain = self.gain();
        let tau2 = self.state.params.tau2;
        for i in 0..self.dis.q() {
            let current = self.state.params.alpha[i];
            let proposal = current + self.alpha_steps[i] * T::std_normal(&mut self.rng);
            let ok = if !(proposal >= T::zero()) || proposal > self.upper[i] {
                false
            } else {
                let mut alpha = self.state.params.alpha.clone();
                alpha[i] = proposal;
                let unchanged = (0..self.graph.n_borders())
                    .all(|b| self.dis.keeps_border(b, &alpha) == self.state.adj.w[b]);
                if unchanged {
                    self.state.params.alpha[i] = proposal;
                    true
                } else {
                    let adj = evaluate_w_unchecked(self.graph, self.dis, &alpha);
                    let prec = self.builder.build(&adj, self.state.params.rho)?;
                    let mu = self.state.params.mu;
                    let centred: Vec<T> = self.state.phi.iter().map(|&p| p - mu).collect();
                    let new_lp = log_density_centred(prec.quad_form(&centred), tau2, &prec);
                    let old_lp = log_density_centred(self.prec.quad_form(&centred), tau2, &self.prec);
                    if accept(new_lp - old_lp, &mut self.rng) {
                        self.state.params.alpha[i] = proposal;
                        self.state.adj = adj;
                        self.prec = prec;
                        true
                    } else {
                        false
                    }
                }
            };
            if adapting {
                let cap = self.upper[i].max(T::of(1e-6));
                Self::adapt(&mut self.alpha_steps[i], ok, gain, self.config.target_acceptance, cap);
            } else {
                self.alpha_count[i].record(ok);
            }
        }
        Ok(())
    }

    fn gain(&self) -> f64 {
        (self.adapt_iter as f64 + 10.0).powf(-0.6)
    }

    /// One full sweep over every block.
    pub fn sweep(&mut self, adapting: bool) -> Result<()> {
        let adapting = adapting && self.config.adapt;
        self.update_phi(adapting);
        self.update_mu();
        self.update_tau2(adapting);
        self.update_alpha(adapting)?;
        if adapting {
            self.adapt_iter += 1;
        }
        self.state.log_post = self.log_posterior();
        Ok(())
    }

    fn acceptance(&self) -> AcceptanceReport {
        let n = self.phi_count.len().max(1) as f64;
        AcceptanceReport {
            phi: self.phi_count.iter().map(Counter::rate).sum::<f64>() / n,
            tau2: self.tau2_count.rate(),
            alpha: self.alpha_count.iter().map(Counter::rate).collect(),
        }
    }
}

/// Mean and variance of the Gaussian full conditional of `mu`.
pub fn mu_full_conditional<T: Real>(phi: &[T], tau2: T, prec: &PrecisionStructure<T>, prior_var: T) -> (T, T) {
    let q_one = prec.mul_vec(&vec![T::one(); phi.len()]);
    let one_q_one: T = q_one.iter().copied().sum();
    let one_q_phi: T = q_one.iter().zip(phi).map(|(&a, &b)| a * b).sum();
    let precision = one_q_one / tau2 + T::one() / prior_var;
    ((one_q_phi / tau2) / precision, T::one() / precision)
}

/// Log target of `ln tau2` (CAR kernel, `tau^-1` prior density on the `tau2`
/// scale, and the log-scale Jacobian).
fn tau2_log_target<T: Real>(quad: T, tau2: T, n: usize) -> T {
    let half = T::of(0.5);
    -half * T::of_usize(n) * tau2.ln() - half * quad / tau2 - half * tau2.ln() + tau2.ln()
}

fn initial_state<T: Real>(
    data: &ObservedData<T>,
    config: &ChainConfig<T>,
    upper: &[T],
    q: usize,
    rng: &mut StreamRng,
) -> (Vec<T>, CarParams<T>) {
    let half = T::of(0.5);
    let phi: Vec<T> = data
        .y
        .iter()
        .zip(&data.e)
        .map(|(&y, &e)| {
            let centre = (T::of(y as f64) + half).ln() - e.ln();
            (centre + T::std_normal(rng)).max(T::of(-PHI_LIMIT + 1.0)).min(T::of(PHI_LIMIT - 1.0))
        })
        .collect();
    let mu = config.fixed.mu.unwrap_or_else(|| config.mu_prior_var.sqrt() * T::std_normal(rng));
    let tau2 = config.fixed.tau2.unwrap_or_else(|| {
        let tau = config.tau_upper * T::unit_uniform(rng);
        (tau * tau).max(T::of(1e-6))
    });
    let alpha = match &config.fixed.alpha {
        Some(a) => a.clone(),
        None => (0..q).map(|i| upper[i] * T::unit_uniform(rng)).collect(),
    };
    (phi, CarParams { mu, tau2, rho: config.rho, alpha })
}

/// Runs one chain from a dispersed start: burn-in with adaptation, then
/// `keep` iterations with every `thin`-th draw retained.
pub fn run_chain<T: Real>(
    chain_index: usize,
    data: &ObservedData<T>,
    graph: &AreaGraph,
    dis: &DissimilarityData<T>,
    builder: &PrecisionBuilder,
    upper: &[T],
    config: &ChainConfig<T>,
) -> Result<ChainSamples<T>> {
    let mut rng = stream_rng(config.seed, Stream::Chain, chain_index as u64);
    let mut chain = None;
    for _ in 0..MAX_INIT_ATTEMPTS {
        let (phi, params) = initial_state(data, config, upper, dis.q(), &mut rng);
        let chain_rng = rng.clone();
        let candidate = Chain::new(graph, dis, data, builder, config, upper.to_vec(), phi, params, chain_rng)?;
        if candidate.state.log_post.is_finite() {
            chain = Some(candidate);
            break;
        }
    }
    let mut chain = chain.ok_or(Error::NonFiniteInit(MAX_INIT_ATTEMPTS))?;

    for _ in 0..config.burn_in {
        chain.sweep(true)?;
    }

    let n = graph.n();
    let q = dis.q();
    let nb = graph.n_borders();
    let retained = config.retained_per_chain();
    let mut out = ChainSamples {
        chain: chain_index,
        phi: Vec::with_capacity(retained * n),
        mu: Vec::with_capacity(retained),
        tau2: Vec::with_capacity(retained),
        alpha: Vec::with_capacity(retained * q),
        w: Vec::with_capacity(retained * nb),
        deviance: Vec::with_capacity(retained),
        acceptance: AcceptanceReport::default(),
    };
    for it in 0..config.keep {
        chain.sweep(false)?;
        if (it + 1) % config.thin == 0 && out.mu.len() < retained {
            let s = &chain.state;
            out.phi.extend_from_slice(&s.phi);
            out.mu.push(s.params.mu);
            out.tau2.push(s.params.tau2);
            out.alpha.extend_from_slice(&s.params.alpha);
            out.w.extend_from_slice(&s.adj.w);
            out.deviance.push(data.deviance(&s.phi));
        }
    }
    out.acceptance = chain.acceptance();
    Ok(out)
}

/// Runs `config.n_chains` independent chains concurrently and collects their
/// retained draws in chain order.
pub fn run_chains<T: Real>(
    data: &ObservedData<T>,
    graph: &AreaGraph,
    dis: &DissimilarityData<T>,
    config: &ChainConfig<T>,
) -> Result<PosteriorSamples<T>> {
    config.validate()?;
    if data.n() != graph.n() {
        return Err(Error::LengthMismatch { what: "observed data", got: data.n(), expected: graph.n() });
    }
    if dis.n_borders() != graph.n_borders() {
        return Err(Error::LengthMismatch { what: "dissimilarity borders", got: dis.n_borders(), expected: graph.n_borders() });
    }
    let upper = match &config.fixed.alpha {
        Some(a) => {
            dis.check_alpha(a)?;
            a.clone()
        }
        None => alpha_upper_limits(dis, config.max_boundary_fraction)?,
    };
    let builder = PrecisionBuilder::new(graph);
    let chains = (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_chain(c, data, graph, dis, &builder, &upper, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorSamples { n: graph.n(), q: dis.q(), n_borders: graph.n_borders(), chains })
}

#[cfg(test)]
mod tests;
