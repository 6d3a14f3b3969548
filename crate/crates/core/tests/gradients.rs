mod common;

use cgnn::diagnostics::{gradcheck, GRADCHECK_REL_FLOOR};
use cgnn::encoder::{backward, backward_stacked, encode, encode_stacked, init_params};
use cgnn::graph::normalized_adjacency;
use cgnn::linalg::DenseMatrix;
use cgnn::loss::{contrast_reg_loss, nce_loss, total_loss, ScoreMode};
use cgnn::strategy::StrategyKind;
use cgnn::train::{ScoreKind, TrainConfig};
use cgnn::Prng;
use proptest::prelude::*;

const EPS: f64 = 1e-5;
const TOL: f64 = 1e-5;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(GRADCHECK_REL_FLOOR)
}

/// Central difference of `f` at every entry of `m`.
fn numeric_grad(m: &DenseMatrix, mut f: impl FnMut(&DenseMatrix) -> f64) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.rows(), m.cols());
    for k in 0..m.data().len() {
        let mut plus = m.clone();
        plus.data_mut()[k] += EPS;
        let mut minus = m.clone();
        minus.data_mut()[k] -= EPS;
        out.data_mut()[k] = (f(&plus) - f(&minus)) / (2.0 * EPS);
    }
    out
}

fn max_rel(a: &DenseMatrix, n: &DenseMatrix) -> f64 {
    a.data().iter().zip(n.data()).map(|(&x, &y)| rel_err(x, y)).fold(0.0, f64::max)
}

fn random(rng: &mut Prng, r: usize, c: usize) -> DenseMatrix {
    DenseMatrix::from_fn(r, c, |_, _| rng.uniform(-1.0, 1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nce_rows_match_finite_differences(seed in any::<u64>(), cosine in any::<bool>()) {
        let mut rng = Prng::new(seed);
        let (s, p, n) = (random(&mut rng, 4, 3), random(&mut rng, 4, 3), random(&mut rng, 4, 3));
        let mode = if cosine { ScoreMode::Cosine { temperature: 0.5 } } else { ScoreMode::Dot };
        let out = nce_loss(&s, &p, &n, mode).unwrap();
        let ds = numeric_grad(&s, |m| nce_loss(m, &p, &n, mode).unwrap().value);
        let dp = numeric_grad(&p, |m| nce_loss(&s, m, &n, mode).unwrap().value);
        let dn = numeric_grad(&n, |m| nce_loss(&s, &p, m, mode).unwrap().value);
        prop_assert!(max_rel(&out.d_seeds, &ds) < TOL);
        prop_assert!(max_rel(&out.d_pos, &dp) < TOL);
        prop_assert!(max_rel(&out.d_neg, &dn) < TOL);
    }

    #[test]
    fn contrast_reg_matches_finite_differences(seed in any::<u64>()) {
        let mut rng = Prng::new(seed);
        let (z, zt, w) = (random(&mut rng, 5, 3), random(&mut rng, 5, 3), random(&mut rng, 3, 3));
        let r: Vec<f64> = (0..3).map(|_| rng.next_open_closed()).collect();
        let out = contrast_reg_loss(&z, &zt, &w, &r).unwrap();
        let dz = numeric_grad(&z, |m| contrast_reg_loss(m, &zt, &w, &r).unwrap().value);
        let dzt = numeric_grad(&zt, |m| contrast_reg_loss(&z, m, &w, &r).unwrap().value);
        let dw = numeric_grad(&w, |m| contrast_reg_loss(&z, &zt, m, &r).unwrap().value);
        prop_assert!(max_rel(out.d_z.as_ref().unwrap(), &dz) < TOL);
        prop_assert!(max_rel(out.d_z_tilde.as_ref().unwrap(), &dzt) < TOL);
        prop_assert!(max_rel(out.d_w_reg.as_ref().unwrap(), &dw) < TOL);
    }

    #[test]
    fn encoder_layers_match_finite_differences(seed in any::<u64>()) {
        let g = common::small_random_graph(seed);
        let a_hat = normalized_adjacency(&g);
        let mut rng = Prng::new(seed);
        let p = init_params(&mut rng, g.num_features(), 3, true).unwrap();
        let n = g.num_nodes();
        // linear read-out L = Σ c ⊙ g(f(x)) + Σ d ⊙ f(x)
        let c = random(&mut rng, n, 3);
        let d = random(&mut rng, n, 3);
        let loss = |p: &cgnn::encoder::ModelParams| -> f64 {
            let (z, _) = encode(&a_hat, g.features(), p).unwrap();
            let (gz, _) = encode_stacked(&a_hat, &z, p).unwrap();
            gz.data().iter().zip(c.data()).map(|(a, b)| a * b).sum::<f64>()
                + z.data().iter().zip(d.data()).map(|(a, b)| a * b).sum::<f64>()
        };
        let (z, cache) = encode(&a_hat, g.features(), &p).unwrap();
        let (_, scache) = encode_stacked(&a_hat, &z, &p).unwrap();
        let (sgrads, mut dz) = backward_stacked(&scache, &a_hat, &c, &p).unwrap();
        dz.add_scaled(&d, 1.0).unwrap();
        let grads = backward(&cache, &dz, &p).unwrap();

        // skip instances where a perturbation crosses the PReLU kink
        let near_kink = cache.pre.data().iter().chain(scache.pre.data()).any(|v| v.abs() < 1e-4);
        prop_assume!(!near_kink);

        let dw = numeric_grad(&p.w_enc, |m| loss(&cgnn::encoder::ModelParams { w_enc: m.clone(), ..p.clone() }));
        prop_assert!(max_rel(&grads.d_weight, &dw) < TOL);
        let ws = p.w_stack.clone().unwrap();
        let dws = numeric_grad(&ws, |m| loss(&cgnn::encoder::ModelParams { w_stack: Some(m.clone()), ..p.clone() }));
        prop_assert!(max_rel(&sgrads.d_weight, &dws) < TOL);
        let slope_fd = (loss(&cgnn::encoder::ModelParams { slope: p.slope + EPS, ..p.clone() })
            - loss(&cgnn::encoder::ModelParams { slope: p.slope - EPS, ..p.clone() })) / (2.0 * EPS);
        prop_assert!(rel_err(grads.d_slope, slope_fd) < TOL);
        let sslope_fd = (loss(&cgnn::encoder::ModelParams { slope_stack: p.slope_stack + EPS, ..p.clone() })
            - loss(&cgnn::encoder::ModelParams { slope_stack: p.slope_stack - EPS, ..p.clone() })) / (2.0 * EPS);
        prop_assert!(rel_err(sgrads.d_slope, sslope_fd) < TOL);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn full_objective_gradcheck(seed in any::<u64>(), s in 0usize..3, reg in any::<bool>(), cosine in any::<bool>()) {
        let g = common::small_random_graph(seed);
        let strategy = [StrategyKind::Lc, StrategyKind::Ml, StrategyKind::Co][s];
        let cfg = TrainConfig {
            strategy,
            reg_enabled: reg,
            score_mode: if cosine { ScoreKind::Cosine } else { ScoreKind::Dot },
            epochs: 1,
            hidden_dim: 3,
            lc_rounds: 1,
            seed,
            ..Default::default()
        };
        let r = gradcheck(&g, &cfg, 1e-5).unwrap();
        prop_assert!(r.max_rel_error < 1e-5, "{:?}", r);
        prop_assert!(r.checked > 0);
    }
}

#[test]
fn total_loss_combines_linearly() {
    let mut rng = Prng::new(3);
    let (z, zt, w) = (random(&mut rng, 4, 2), random(&mut rng, 4, 2), random(&mut rng, 2, 2));
    let reg = contrast_reg_loss(&z, &zt, &w, &[0.3, 0.9]).unwrap();
    let nce = cgnn::loss::LossOutput { value: 1.5, d_z: Some(DenseMatrix::from_fn(4, 2, |_, _| 1.0)), ..Default::default() };
    let t = total_loss(nce.clone(), reg.clone(), 0.5).unwrap();
    assert!((t.value - (1.5 + 0.5 * reg.value)).abs() < 1e-15);
    let dz = t.d_z.unwrap();
    for k in 0..8 {
        assert!((dz.data()[k] - (1.0 + 0.5 * reg.d_z.as_ref().unwrap().data()[k])).abs() < 1e-15);
    }
    assert_eq!(total_loss(nce.clone(), reg.clone(), 0.0).unwrap().value, 1.5);
    assert!(total_loss(nce, reg, -1.0).is_err());
}

