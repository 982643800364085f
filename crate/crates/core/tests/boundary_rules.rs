mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use womble::boundary::{blv, classify_boundaries, classify_effect, Effect};
use womble::graph::{evaluate_w, DissimilarityData};
use womble::mcmc::{run_chains, ChainConfig, FixedBlocks, ObservedData};
use womble::simulate::lattice;

#[test]
fn constant_alpha_trace_reproduces_evaluate_w() {
    let g = lattice(5, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let raw: Vec<f64> = (0..g.n_borders()).map(|_| rng.random_range(0.0..3.0)).collect();
    let dis = DissimilarityData::from_border_values(&g, vec!["z".into()], vec![raw]).unwrap();
    let data = ObservedData::new((0..25).map(|k| 5 + k % 7).collect(), vec![6.0; 25]).unwrap();
    for alpha in [0.0, 0.2, 0.45, 0.9] {
        let config = ChainConfig {
            n_chains: 2,
            burn_in: 50,
            keep: 60,
            fixed: FixedBlocks { alpha: Some(vec![alpha]), ..Default::default() },
            ..Default::default()
        };
        let samples = run_chains(&data, &g, &dis, &config).unwrap();
        let set = classify_boundaries(&samples).unwrap();
        let w = evaluate_w(&g, &dis, &[alpha]).unwrap();
        let flags: Vec<bool> = set.borders.iter().map(|b| b.is_boundary).collect();
        let expected: Vec<bool> = w.w.iter().map(|k| !k).collect();
        assert_eq!(flags, expected);
        assert_eq!(set.boundary_count, w.boundary_count);
    }
}

proptest! {
    #[test]
    fn rule_b_flags_the_requested_count(
        risk in prop::collection::vec(0.05f64..5.0, 12),
        c2 in 0.1f64..=100.0,
    ) {
        let g = lattice(3, 4).unwrap();
        let r = blv(&risk, &g).unwrap();
        let flags = r.rule_b(c2).unwrap();
        let want = ((c2 / 100.0 * g.n_borders() as f64) - 1e-9).ceil() as usize;
        prop_assert_eq!(flags.iter().filter(|&&f| f).count(), want);
        // Every flagged value is at least as large as every unflagged one.
        let min_flag = r.values.iter().zip(&flags).filter(|(_, &f)| f).map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
        let max_rest = r.values.iter().zip(&flags).filter(|(_, &f)| !f).map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(min_flag >= max_rest);
    }

    #[test]
    fn effect_verdict_agrees_with_interval_position(
        draws in prop::collection::vec(0.0f64..1.0, 2..200),
        threshold in 0.0f64..1.0,
    ) {
        let mut s = draws.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let effect = classify_effect(&draws, threshold).unwrap();
        match effect {
            Effect::Substantial => prop_assert!(s[s.len() - 1] > threshold),
            Effect::NoEffect => prop_assert!(s[0] < threshold),
            Effect::Inconclusive => {}
        }
        if s[0] > threshold {
            prop_assert_eq!(effect, Effect::Substantial);
        }
        if s[s.len() - 1] < threshold {
            prop_assert_eq!(effect, Effect::NoEffect);
        }
    }
}
