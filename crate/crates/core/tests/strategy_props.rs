mod common;

use cgnn::linalg::DenseMatrix;
use cgnn::loss::SeedSource;
use cgnn::strategy::{
    co_contrast, entropy_scores, lc_contrast, lc_seed_select, ml_contrast, top_k_neighbors, CurriculumConfig,
    CurriculumState,
};
use cgnn::synthetic::random_graph;
use cgnn::Prng;
use proptest::prelude::*;

fn curricula() -> impl Strategy<Value = (CurriculumConfig, usize)> {
    (1usize..20, 1usize..6, 0usize..40, 1usize..300).prop_map(|(r, k, extra, n)| {
        (CurriculumConfig { rounds: r, k, total_epochs: r + extra }, n)
    })
}

proptest! {
    #[test]
    fn seed_count_monotone_and_clamped((cfg, n) in curricula()) {
        let mut prev = 0;
        for epoch in 1..=cfg.total_epochs {
            let m = cfg.seed_count(epoch, n);
            prop_assert!(m >= prev && m <= n && m >= 1);
            prev = m;
        }
        prop_assert_eq!(cfg.seed_count(cfg.total_epochs, n), n);
    }

    #[test]
    fn lc_seed_sets_grow_and_refresh_on_schedule(seed in any::<u64>(), r in 1usize..5) {
        let mut rng = Prng::new(seed);
        let z = DenseMatrix::from_fn(12, 3, |_, _| rng.uniform(-1.0, 1.0));
        let cfg = CurriculumConfig { rounds: r, k: 2, total_epochs: 4 * r };
        let mut state = CurriculumState::new();
        let mut prev: Vec<usize> = vec![];
        for epoch in 1..=cfg.total_epochs {
            let seeds = lc_seed_select(&z, epoch, &mut state, &cfg).unwrap();
            prop_assert_eq!(seeds.len(), cfg.seed_count(if cfg.is_refresh_epoch(epoch) { epoch } else { state.last_refresh().unwrap() }, 12));
            prop_assert!(seeds.windows(2).all(|w| w[0] < w[1]));
            // z is fixed, so a larger set always contains the smaller one
            prop_assert!(prev.iter().all(|s| seeds.contains(s)));
            if !cfg.is_refresh_epoch(epoch) {
                prop_assert_eq!(&seeds, &prev);
            }
            prev = seeds;
        }
    }

    #[test]
    fn lc_seeds_have_lowest_entropy(seed in any::<u64>()) {
        let mut rng = Prng::new(seed);
        let z = DenseMatrix::from_fn(10, 2, |_, _| rng.uniform(-2.0, 2.0));
        let cfg = CurriculumConfig { rounds: 1, k: 1, total_epochs: 5 };
        let seeds = lc_seed_select(&z, 1, &mut CurriculumState::new(), &cfg).unwrap();
        let h = entropy_scores(&z);
        let worst_in = seeds.iter().map(|&i| h[i]).fold(f64::NEG_INFINITY, f64::max);
        let best_out = (0..10).filter(|i| !seeds.contains(i)).map(|i| h[i]).fold(f64::INFINITY, f64::min);
        prop_assert!(worst_in <= best_out);
        // entropy of a softmax over 10 entries
        prop_assert!(h.iter().all(|&v| (0.0..=(10f64).ln() + 1e-12).contains(&v)));
    }

    #[test]
    fn co_positives_adjacent_negatives_not(seed in any::<u64>()) {
        let g = common::small_random_graph(seed);
        let t = co_contrast(&g, &mut Prng::new(seed), 50).unwrap();
        prop_assert_eq!(t.seed_source, SeedSource::FReps);
        for k in 0..t.len() {
            let (s, p, n) = (t.seed_idx[k], t.pos_idx[k], t.neg_idx[k]);
            prop_assert!(g.has_edge(s, p));
            prop_assert!(n != s && !g.has_edge(s, n));
        }
    }

    #[test]
    fn lc_positives_are_top_k_neighbours(seed in any::<u64>()) {
        let mut rng = Prng::new(seed);
        let g = random_graph(15, 0.25, 3, 2, &mut rng).unwrap();
        let z = DenseMatrix::from_fn(15, 3, |_, _| rng.uniform(-1.0, 1.0));
        let seeds: Vec<usize> = (0..15).collect();
        let t = lc_contrast(&z, &g, &seeds, 2, &mut rng).unwrap();
        for k in 0..t.len() {
            let s = t.seed_idx[k];
            let cands = top_k_neighbors(&z, &g, s, 2);
            if g.degree(s) == 0 {
                prop_assert_eq!(t.pos_idx[k], s);
            } else {
                prop_assert!(cands.contains(&t.pos_idx[k]));
                prop_assert!(g.has_edge(s, t.pos_idx[k]));
            }
            prop_assert!(t.neg_idx[k] < 15);
        }
    }

    #[test]
    fn ml_tuples_pair_each_node_with_itself(n in 1usize..30, seed in any::<u64>()) {
        let z = DenseMatrix::zeros(n, 2);
        let t = ml_contrast(&z, &z, &mut Prng::new(seed)).unwrap();
        prop_assert_eq!(t.seed_source, SeedSource::GReps);
        prop_assert_eq!(&t.seed_idx, &(0..n).collect::<Vec<_>>());
        prop_assert_eq!(&t.pos_idx, &t.seed_idx);
        prop_assert!(t.neg_idx.iter().all(|&j| j < n));
    }
}

#[test]
fn seed_count_formula() {
    // m = min(N, ceil((floor(epoch/R)+1) * R * N / e))
    let cfg = CurriculumConfig { rounds: 30, k: 5, total_epochs: 300 };
    assert_eq!(cfg.seed_count(1, 2708), 271);
    assert_eq!(cfg.seed_count(31, 2708), 542);
    assert_eq!(cfg.seed_count(300, 2708), 2708);
    assert!(cfg.is_refresh_epoch(1) && cfg.is_refresh_epoch(31) && !cfg.is_refresh_epoch(30));
}
