mod common;

use common::{batch_means_se, dense_precision, ks_distance, mean, path, random_graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use womble::boundary::classify_boundaries;
use womble::car::{CarParams, PrecisionBuilder};
use womble::graph::{alpha_min, DissimilarityData};
use womble::mcmc::{
    dic, gelman_rubin, run_chains, Chain, ChainConfig, FixedBlocks, ObservedData, PosteriorSamples,
};
use womble::seed::StreamRng;
use womble::simulate::{simulate_replicate, SimConfig, SurfaceGenerator};
use womble::{AdjacencyState, AreaGraph};

fn prior_only(mu: f64, tau2: f64, rho: f64, seed: u64) -> ChainConfig<f64> {
    ChainConfig {
        n_chains: 1,
        burn_in: 2_000,
        keep: 200_000,
        thin: 2,
        seed,
        rho,
        use_likelihood: false,
        fixed: FixedBlocks { mu: Some(mu), tau2: Some(tau2), alpha: Some(vec![]) },
        ..Default::default()
    }
}

fn check_prior_moments(g: &AreaGraph, seed: u64) {
    let (mu, tau2, rho) = (0.3, 0.5, 0.9);
    let n = g.n();
    let data = ObservedData::new(vec![0; n], vec![1.0; n]).unwrap();
    let dis = DissimilarityData::empty(g);
    let samples = run_chains(&data, g, &dis, &prior_only(mu, tau2, rho, seed)).unwrap();
    let cov = dense_precision(g, &vec![true; g.n_borders()], rho).try_inverse().unwrap() * tau2;
    let draws = samples.n_draws();
    let comp = |k: usize| (0..draws).map(|d| samples.phi_draw(0, d)[k]).collect::<Vec<f64>>();
    let series: Vec<Vec<f64>> = (0..n).map(comp).collect();
    for k in 0..n {
        let se = batch_means_se(&series[k], 50);
        assert!((mean(&series[k]) - mu).abs() < 3.0 * se, "mean of phi_{k}: {} vs {mu} (se {se})", mean(&series[k]));
        for j in k..n {
            let prod: Vec<f64> = series[k].iter().zip(&series[j]).map(|(a, b)| (a - mu) * (b - mu)).collect();
            let se = batch_means_se(&prod, 50);
            let want = cov[(k, j)];
            assert!((mean(&prod) - want).abs() < 3.0 * se, "cov({k},{j}): {} vs {want} (se {se})", mean(&prod));
        }
    }
}

#[test]
fn prior_sampling_matches_car_moments_on_a_path() {
    check_prior_moments(&path(4), 21);
}

#[test]
fn prior_sampling_matches_car_moments_on_a_random_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = loop {
        let g = random_graph(&mut rng, 6);
        if g.n() == 6 {
            break g;
        }
    };
    check_prior_moments(&g, 22);
}

/// CDF of an unnormalised 1-D log density on a fine grid.
fn grid_cdf(lo: f64, hi: f64, log_f: impl Fn(f64) -> f64) -> impl Fn(f64) -> f64 {
    let m = 20_000;
    let h = (hi - lo) / m as f64;
    let xs: Vec<f64> = (0..=m).map(|i| lo + i as f64 * h).collect();
    let lf: Vec<f64> = xs.iter().map(|&x| log_f(x)).collect();
    let top = lf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f: Vec<f64> = lf.iter().map(|v| (v - top).exp()).collect();
    let mut c = vec![0.0; m + 1];
    for i in 1..=m {
        c[i] = c[i - 1] + 0.5 * h * (f[i] + f[i - 1]);
    }
    let total = c[m];
    move |x: f64| {
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let t = (x - lo) / h;
        let i = (t.floor() as usize).min(m - 1);
        let frac = t - i as f64;
        (c[i] + frac * (c[i + 1] - c[i])) / total
    }
}

#[test]
fn single_area_posterior_matches_grid() {
    let g = AreaGraph::from_pairs(1, &[]).unwrap();
    let dis = DissimilarityData::empty(&g);
    let data = ObservedData::new(vec![7], vec![2.0]).unwrap();
    let config = ChainConfig {
        n_chains: 1,
        burn_in: 2_000,
        keep: 50_000,
        thin: 10,
        seed: 4,
        fixed: FixedBlocks { mu: Some(0.0), tau2: Some(1.0), alpha: Some(vec![]) },
        ..Default::default()
    };
    let s = run_chains(&data, &g, &dis, &config).unwrap();
    let draws: Vec<f64> = (0..s.n_draws()).map(|d| s.phi_draw(0, d)[0]).collect();
    // Prior variance tau2 / (1 - rho) = 100 for an isolated area.
    let cdf = grid_cdf(-5.0, 5.0, |p| 7.0 * p - 2.0 * p.exp() - p * p / 200.0);
    let ks = ks_distance(&draws, cdf);
    assert!(ks < 0.1, "KS {ks}");
}

#[test]
fn tau2_update_matches_grid_in_the_independent_case() {
    let n = 20;
    let g = AreaGraph::from_pairs(n, &[]).unwrap();
    let dis = DissimilarityData::empty(&g);
    let data = ObservedData::new(vec![0; n], vec![1.0; n]).unwrap();
    let config = ChainConfig::<f64> { rho: 0.0, ..Default::default() };
    let builder = PrecisionBuilder::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let phi: Vec<f64> = (0..n).map(|_| rng.random_range(-0.8..0.8)).collect();
    let quad: f64 = phi.iter().map(|p| p * p).sum();
    let params = CarParams::new(0.0, 1.0, 0.0, vec![]).unwrap();
    let mut chain = Chain::new(&g, &dis, &data, &builder, &config, vec![], phi, params, StreamRng::seed_from_u64(3)).unwrap();
    for _ in 0..2_000 {
        chain.update_tau2(true);
    }
    let mut draws = Vec::new();
    for i in 0..50_000 {
        chain.update_tau2(false);
        if i % 10 == 0 {
            draws.push(chain.state().params.tau2);
        }
    }
    // (tau2)^(-n/2) exp(-quad / (2 tau2)) times the tau^-1 prior density.
    let cdf = grid_cdf(1e-6, 100.0, |t| -0.5 * (n as f64 + 1.0) * t.ln() - quad / (2.0 * t));
    let ks = ks_distance(&draws, cdf);
    assert!(ks < 0.1, "KS {ks}");
}

fn default_scenario_fit(chains: usize, seed: u64) -> (SimConfig, PosteriorSamples<f64>, DissimilarityData<f64>) {
    let cfg = SimConfig::lattice_default(16, 16, 0.4, 3.0, 100.0).unwrap();
    let surface = SurfaceGenerator::new(&cfg).unwrap();
    let sim = simulate_replicate(&cfg, &surface, &mut StreamRng::seed_from_u64(seed));
    let dis = DissimilarityData::from_border_values(&cfg.graph, vec!["z".into()], vec![sim.metric]).unwrap();
    let data = ObservedData::new(sim.counts, cfg.expected.clone()).unwrap();
    let config = ChainConfig { n_chains: chains, burn_in: 5_000, keep: 2_000, seed, ..Default::default() };
    let samples = run_chains(&data, &cfg.graph, &dis, &config).unwrap();
    (cfg, samples, dis)
}

#[test]
fn default_scenario_converges_and_detects() {
    let (cfg, samples, dis) = default_scenario_fit(4, 7);
    let mu: Vec<Vec<f64>> = samples.chains.iter().map(|c| c.mu.clone()).collect();
    let tau2: Vec<Vec<f64>> = samples.chains.iter().map(|c| c.tau2.clone()).collect();
    let r_mu = gelman_rubin(&mu).unwrap();
    let r_tau2 = gelman_rubin(&tau2).unwrap();
    assert!(r_mu < 1.1, "PSRF mu {r_mu}");
    assert!(r_tau2 < 1.1, "PSRF tau2 {r_tau2}");

    for c in &samples.chains {
        let a = &c.acceptance;
        assert!((0.1..=0.6).contains(&a.phi), "phi acceptance {}", a.phi);
        assert!((0.1..=0.6).contains(&a.tau2), "tau2 acceptance {}", a.tau2);
    }

    let amin = alpha_min(&dis, 0).unwrap();
    let alpha = samples.alpha_draws(0);
    let above = alpha.iter().filter(|&&a| a > amin).count() as f64 / alpha.len() as f64;
    assert!(above >= 0.95, "share above alpha_min {above}");

    let set = classify_boundaries(&samples).unwrap();
    let truth = cfg.true_boundaries();
    let false_pos = truth.iter().zip(&set.borders).filter(|(&t, b)| !t && b.is_boundary).count();
    let negatives = truth.iter().filter(|&&t| !t).count();
    assert!((false_pos as f64) <= 0.05 * negatives as f64, "{false_pos} false positives");
}

#[test]
fn dic_prefers_the_true_adjacency() {
    let rows = 8;
    let g = womble::simulate::lattice(rows, rows).unwrap();
    let truth: Vec<bool> = g.borders().iter().map(|&(k, j)| (k % rows < rows / 2) != (j % rows < rows / 2)).collect();
    let true_adj = AdjacencyState::from_pattern(&g, truth.iter().map(|t| !t).collect()).unwrap();
    let prec = PrecisionBuilder::new(&g).build(&true_adj, 0.99).unwrap();
    let indicator = |on: &dyn Fn(usize) -> bool| {
        DissimilarityData::from_standardized(&g, vec!["z".into()], vec![(0..g.n_borders()).map(|b| if on(b) { 1.0 } else { 0.0 }).collect()])
            .unwrap()
    };
    let true_w = indicator(&|b| truth[b]);
    let all_boundaries = indicator(&|_| true);
    let n = g.n();
    let mut wins = 0;
    for r in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + r);
        let phi = prec.sample(0.0, 0.05, &mut rng);
        let e = vec![50.0; n];
        let risk: Vec<f64> = phi.iter().enumerate().map(|(k, p)| (p + if k % rows < rows / 2 { 0.5_f64 } else { 0.0 }).exp()).collect();
        let y = womble::simulate::gen_counts(&risk, &e, &mut rng);
        let data = ObservedData::new(y, e).unwrap();
        let fit = |dis: &DissimilarityData<f64>| {
            let config = ChainConfig {
                n_chains: 2,
                burn_in: 2_000,
                keep: 2_000,
                seed: 300 + r,
                fixed: FixedBlocks { alpha: Some(vec![1.0]), ..Default::default() },
                ..Default::default()
            };
            dic(&run_chains(&data, &g, dis, &config).unwrap(), &data).unwrap().dic
        };
        if fit(&true_w) < fit(&all_boundaries) {
            wins += 1;
        }
    }
    assert!(wins >= 16, "true adjacency preferred in {wins} of 20");
}

