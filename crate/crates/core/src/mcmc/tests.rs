use super::*;
use crate::car::build_precision;
use crate::graph::AreaGraph;
use rand::SeedableRng;

fn rng(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

fn fixed_config(mu: f64, tau2: f64) -> ChainConfig<f64> {
    ChainConfig {
        n_chains: 1,
        burn_in: 0,
        keep: 1,
        adapt: false,
        fixed: FixedBlocks { mu: Some(mu), tau2: Some(tau2), alpha: None },
        ..ChainConfig::default()
    }
}

#[test]
fn zero_step_leaves_phi_unchanged() {
    let g = AreaGraph::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
    let dis = DissimilarityData::empty(&g);
    let data = ObservedData::new(vec![3, 0, 9], vec![2.0, 2.0, 2.0]).unwrap();
    let builder = PrecisionBuilder::new(&g);
    let config = ChainConfig { phi_step: 0.0, ..fixed_config(0.0, 1.0) };
    let phi = vec![0.3, -0.2, 1.1];
    let params = CarParams::new(0.0, 1.0, 0.99, vec![]).unwrap();
    let mut chain = Chain::new(&g, &dis, &data, &builder, &config, vec![], phi.clone(), params, rng(1)).unwrap();
    for _ in 0..50 {
        chain.sweep(false).unwrap();
    }
    assert_eq!(chain.state().phi, phi);
    assert_eq!(chain.acceptance().phi, 1.0);
}

#[test]
fn zero_count_drives_phi_down() {
    let g = AreaGraph::from_pairs(1, &[]).unwrap();
    let dis = DissimilarityData::empty(&g);
    let data = ObservedData::new(vec![0], vec![1.0]).unwrap();
    let builder = PrecisionBuilder::new(&g);
    let config = ChainConfig { phi_step: 0.5, ..fixed_config(0.0, 1e4) };
    let params = CarParams::new(0.0, 1e4, 0.99, vec![]).unwrap();
    let mut chain = Chain::new(&g, &dis, &data, &builder, &config, vec![], vec![0.0], params, rng(2)).unwrap();
    for _ in 0..2000 {
        chain.sweep(false).unwrap();
    }
    assert!(chain.state().phi[0] < -2.0, "{}", chain.state().phi[0]);
}

#[test]
fn weak_prior_recovers_gamma_poisson_mean() {
    // Flat prior on ln R with y = 5, E = 1 gives R | y ~ Gamma(5, 1), mean 5.
    let g = AreaGraph::from_pairs(1, &[]).unwrap();
    let dis = DissimilarityData::empty(&g);
    let data = ObservedData::new(vec![5], vec![1.0]).unwrap();
    let config = ChainConfig { n_chains: 1, burn_in: 2000, keep: 20_000, phi_step: 0.6, ..fixed_config(0.0, 100.0) };
    let samples = run_chains(&data, &g, &dis, &config).unwrap();
    let mean_r = crate::scalar::mean(&samples.risk_draws(0));
    assert!((mean_r - 5.0).abs() < 0.5, "{mean_r}");
}

#[test]
fn mu_conditional_examples() {
    let g = AreaGraph::from_pairs(1, &[]).unwrap();
    let prec = build_precision(&g, &AdjacencyState::all_kept(&g), 0.99_f64).unwrap();
    let (m, v) = mu_full_conditional(&[2.0], 0.01, &prec, 10.0);
    assert!((1.0 / v - 1.1).abs() < 1e-12);
    assert!((m - 1.818_181_818_181_818).abs() < 1e-12);

    let g = AreaGraph::from_pairs(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
    let prec = build_precision(&g, &AdjacencyState::all_kept(&g), 0.99_f64).unwrap();
    let (m, _) = mu_full_conditional(&[0.0; 4], 0.3, &prec, 10.0);
    assert_eq!(m, 0.0);
    let (m, v) = mu_full_conditional(&[1.0, 2.0, -3.0, 0.5], 1e12, &prec, 10.0);
    assert!(m.abs() < 1e-9);
    assert!((v - 10.0).abs() < 1e-9);
}

#[test]
fn mu_conditional_matches_grid_posterior() {
    // Grid the product of the CAR density in mu and the N(0, 10) prior.
    let g = AreaGraph::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
    let prec = build_precision(&g, &AdjacencyState::all_kept(&g), 0.9_f64).unwrap();
    let phi = [0.4, 1.2, 0.9];
    let tau2 = 0.05;
    let (m, v) = mu_full_conditional(&phi, tau2, &prec, 10.0);
    let grid: Vec<f64> = (0..40_001).map(|i| -5.0 + i as f64 * 2.5e-4).collect();
    let logp: Vec<f64> = grid
        .iter()
        .map(|&mu| {
            let c: Vec<f64> = phi.iter().map(|p| p - mu).collect();
            -prec.quad_form(&c) / (2.0 * tau2) - mu * mu / 20.0
        })
        .collect();
    let max = logp.iter().cloned().fold(f64::MIN, f64::max);
    let wts: Vec<f64> = logp.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = wts.iter().sum();
    let gm: f64 = grid.iter().zip(&wts).map(|(x, w)| x * w).sum::<f64>() / z;
    let gv: f64 = grid.iter().zip(&wts).map(|(x, w)| (x - gm).powi(2) * w).sum::<f64>() / z;
    assert!((gm - m).abs() < 1e-6, "{gm} vs {m}");
    assert!((gv - v).abs() < 1e-6, "{gv} vs {v}");
}

#[test]
fn tau2_respects_prior_support() {
    let g = AreaGraph::from_pairs(2, &[(0, 1)]).unwrap();
    let dis = DissimilarityData::empty(&g);
    let data = ObservedData::new(vec![1, 1], vec![1.0, 1.0]).unwrap();
    let builder = PrecisionBuilder::new(&g);
    let config = ChainConfig {
        tau_upper: 0.1,
        tau2_step: 2.0,
        phi_step: 0.0,
        fixed: FixedBlocks { mu: Some(0.0), tau2: None, alpha: None },
        ..fixed_config(0.0, 1.0)
    };
    let params = CarParams::new(0.0, 0.005, 0.99, vec![]).unwrap();
    let mut chain = Chain::new(&g, &dis, &data, &builder, &config, vec![], vec![3.0, -3.0], params, rng(4)).unwrap();
    for _ in 0..2000 {
        chain.sweep(false).unwrap();
        assert!(chain.state().params.tau2 <= 0.01 + 1e-15);
    }
}

#[test]
fn tau2_drifts_down_when_phi_equals_mu() {
    let g = AreaGraph::from_pairs(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
    let dis = DissimilarityData::empty(&g);
    let data = ObservedData::new(vec![1; 5], vec![1.0; 5]).unwrap();
    let builder = PrecisionBuilder::new(&g);
    let config = ChainConfig {
        phi_step: 0.0,
        fixed: FixedBlocks { mu: Some(0.2), tau2: None, alpha: None },
        ..fixed_config(0.2, 1.0)
    };
    let params = CarParams::new(0.2, 1.0, 0.99, vec![]).unwrap();
    let mut chain = Chain::new(&g, &dis, &data, &builder, &config, vec![], vec![0.2; 5], params, rng(5)).unwrap();
    for _ in 0..3000 {
        chain.sweep(false).unwrap();
    }
    assert!(chain.state().params.tau2 < 1e-3, "{}", chain.state().params.tau2);
}

fn constant_metric_setup() -> (AreaGraph, DissimilarityData<f64>) {
    let g = AreaGraph::from_pairs(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let dis = DissimilarityData::from_standardized(&g, vec!["z".into()], vec![vec![0.1, 0.1, 0.1]]).unwrap();
    (g, dis)
}

#[test]
fn alpha_moves_freely_within_a_w_class() {
    let (g, dis) = constant_metric_setup();
    let data = ObservedData::new(vec![1; 4], vec![1.0; 4]).unwrap();
    let builder = PrecisionBuilder::new(&g);
    let config = ChainConfig {
        alpha_step: 0.002,
        fixed: FixedBlocks { mu: Some(0.0), tau2: Some(1.0), alpha: None },
        ..fixed_config(0.0, 1.0)
    };
    let params = CarParams::new(0.0, 1.0, 0.99, vec![0.25]).unwrap();
    let mut chain = Chain::new(&g, &dis, &data, &builder, &config, vec![0.5], vec![0.0; 4], params, rng(6)).unwrap();
    for _ in 0..300 {
        chain.sweep(false).unwrap();
    }
    assert_eq!(chain.acceptance().alpha, vec![1.0]);
}

#[test]
fn alpha_stays_inside_prior_range() {
    let (g, dis) = constant_metric_setup();
    let data = ObservedData::new(vec![1; 4], vec![1.0; 4]).unwrap();
    let builder = PrecisionBuilder::new(&g);
    let config = ChainConfig {
        alpha_step: 3.0,
        fixed: FixedBlocks { mu: Some(0.0), tau2: Some(1.0), alpha: None },
        ..fixed_config(0.0, 1.0)
    };
    let params = CarParams::new(0.0, 1.0, 0.99, vec![0.25]).unwrap();
    let mut chain = Chain::new(&g, &dis, &data, &builder, &config, vec![0.5], vec![0.0; 4], params, rng(7)).unwrap();
    let mut moved = 0;
    for _ in 0..1000 {
        let before = chain.state().params.alpha[0];
        chain.sweep(false).unwrap();
        let a = chain.state().params.alpha[0];
        assert!((0.0..=0.5).contains(&a));
        moved += (a != before) as usize;
    }
    assert!(moved > 0 && moved < 1000);
}

fn small_problem() -> (AreaGraph, DissimilarityData<f64>, ObservedData<f64>) {
    let pairs = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)];
    let g = AreaGraph::from_pairs(6, &pairs).unwrap();
    let dis = DissimilarityData::from_border_values(
        &g,
        vec!["z".into()],
        vec![vec![0.2, 2.5, 0.3, 0.1, 2.2, 0.4, 0.5, 2.9]],
    )
    .unwrap();
    let data = ObservedData::new(vec![12, 9, 30, 10, 11, 28], vec![10.0; 6]).unwrap();
    (g, dis, data)
}

fn short_config(seed: u64) -> ChainConfig<f64> {
    ChainConfig { n_chains: 3, burn_in: 300, keep: 400, thin: 2, seed, ..ChainConfig::default() }
}

#[test]
fn keep_zero_is_rejected() {
    let (g, dis, data) = small_problem();
    let config = ChainConfig { keep: 0, ..short_config(1) };
    assert!(matches!(run_chains(&data, &g, &dis, &config), Err(Error::Config(_))));
    let config = ChainConfig { thin: 0, ..short_config(1) };
    assert!(run_chains(&data, &g, &dis, &config).is_err());
}

#[test]
fn identical_seeds_give_identical_samples() {
    let (g, dis, data) = small_problem();
    let a = run_chains(&data, &g, &dis, &short_config(11)).unwrap();
    let b = run_chains(&data, &g, &dis, &short_config(11)).unwrap();
    assert_eq!(a, b);
    let c = run_chains(&data, &g, &dis, &short_config(12)).unwrap();
    assert_ne!(a.chains[0].mu, c.chains[0].mu);
}

#[test]
fn retained_counts_and_w_trace_consistency() {
    let (g, dis, data) = small_problem();
    let s = run_chains(&data, &g, &dis, &short_config(3)).unwrap();
    assert_eq!(s.chains.len(), 3);
    for (c, chain) in s.chains.iter().enumerate() {
        assert_eq!(chain.n_draws(), 200);
        assert_eq!(chain.phi.len(), 200 * 6);
        for d in 0..chain.n_draws() {
            let adj = evaluate_w(&g, &dis, s.alpha_draw(c, d)).unwrap();
            assert_eq!(adj.w.as_slice(), s.w_draw(c, d));
        }
    }
}

#[test]
fn initial_alpha_is_within_prior_bounds() {
    let (g, dis, data) = small_problem();
    let upper = alpha_upper_limits(&dis, 0.5).unwrap();
    let s = run_chains(&data, &g, &dis, &short_config(8)).unwrap();
    for a in s.alpha_draws(0) {
        assert!(a >= 0.0 && a <= upper[0]);
    }
}

#[test]
fn deviance_closed_form() {
    let data = ObservedData::new(vec![1; 7], vec![1.0_f64; 7]).unwrap();
    assert!((data.deviance(&[0.0; 7]) - 14.0).abs() < 1e-12);
}

#[test]
fn single_draw_dic_has_zero_effective_parameters() {
    let data = ObservedData::new(vec![2, 0, 5], vec![1.5_f64, 0.7, 3.0]).unwrap();
    let phi = vec![0.2, -0.4, 0.6];
    let d = data.deviance(&phi);
    let samples = PosteriorSamples {
        n: 3,
        q: 0,
        n_borders: 0,
        chains: vec![ChainSamples {
            chain: 0,
            phi,
            mu: vec![0.0],
            tau2: vec![1.0],
            alpha: vec![],
            w: vec![],
            deviance: vec![d],
            acceptance: AcceptanceReport::default(),
        }],
    };
    let out = dic(&samples, &data).unwrap();
    assert!(out.p_d.abs() < 1e-12);
    assert!((out.dic - d).abs() < 1e-12);
    let empty = PosteriorSamples { chains: vec![], ..samples };
    assert!(dic(&empty, &data).is_err());
}

#[test]
fn observed_data_validation() {
    assert!(ObservedData::new(vec![1, 2], vec![1.0]).is_err());
    assert!(ObservedData::new(vec![1], vec![0.0_f64]).is_err());
}

#[test]
fn sampler_runs_in_single_precision() {
    let g = AreaGraph::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
    let dis = DissimilarityData::<f32>::from_border_values(&g, vec!["z".into()], vec![vec![0.5, 2.0]]).unwrap();
    let data = ObservedData::new(vec![4, 5, 20], vec![5.0_f32; 3]).unwrap();
    let config = ChainConfig::<f32> { n_chains: 2, burn_in: 100, keep: 100, ..ChainConfig::default() };
    let s = run_chains(&data, &g, &dis, &config).unwrap();
    assert_eq!(s.n_draws(), 200);
    assert!(s.tau2_draws().iter().all(|t| t.is_finite() && *t > 0.0));
}
