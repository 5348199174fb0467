use pnid_core::dataset::NormStats;
use pnid_core::nn::{
    grad_check, grad_check_against, gru_cell_forward, immm_forward, init_model, loss_and_grad, model_forward, softmax,
    train_step, AdamConfig, AdamState, Example, GruLayerParams, HeadKind, ModelConfig, ModelParams, ParamSubset,
    RegimeBank,
};
use pnid_core::rng::rng_from_seed;
use pnid_core::Error;
use proptest::prelude::*;
use rand::Rng;

fn unit_label_norm() -> NormStats {
    NormStats { feature_min: [0.0; 6], feature_max: [1.0; 6], label_min: [2.5, 0.1], label_max: [5.5, 0.4] }
}

fn random_window(len: usize, seed: u64) -> Vec<[f64; 6]> {
    let mut r = rng_from_seed(seed);
    (0..len).map(|_| std::array::from_fn(|_| r.random_range(-0.1..1.1))).collect()
}

/// A model whose every parameter, including the zero-initialized ones, is
/// random, so that all gradient paths are exercised.
fn scrambled_model(head: HeadKind, width: usize, layers: usize, steps: usize, seed: u64) -> ModelParams {
    let cfg =
        ModelConfig { input_width: width, hidden: vec![width; layers], head, regimes_per_group: 5, input_steps: steps };
    let mut m = init_model(&cfg, &unit_label_norm(), &mut rng_from_seed(seed)).unwrap();
    let mut r = rng_from_seed(seed ^ 0xfeed);
    for s in m.network.slices_mut() {
        for v in s.iter_mut() {
            *v += r.random_range(-0.5..0.5);
        }
    }
    m
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Straight transcription of the gate equations with explicit loops.
fn scalar_gru(x: &[f64], h: &[f64], p: &GruLayerParams) -> Vec<f64> {
    let (nh, nx) = (h.len(), x.len());
    let lin = |w: &pnid_core::nn::Matrix, v: &[f64], i: usize| (0..v.len()).map(|j| w.get(i, j) * v[j]).sum::<f64>();
    let r: Vec<f64> = (0..nh).map(|i| sigmoid(lin(&p.w_hr, h, i) + lin(&p.w_xr, x, i) + p.b_r[i])).collect();
    let z: Vec<f64> = (0..nh).map(|i| sigmoid(lin(&p.w_hz, h, i) + lin(&p.w_xz, x, i) + p.b_z[i])).collect();
    let rh: Vec<f64> = (0..nh).map(|i| r[i] * h[i]).collect();
    assert_eq!(p.w_xh.cols, nx);
    (0..nh)
        .map(|i| {
            let cand = (lin(&p.w_hh, &rh, i) + lin(&p.w_xh, x, i) + p.b_h[i]).tanh();
            (1.0 - z[i]) * h[i] + z[i] * cand
        })
        .collect()
}

#[test]
fn gru_cell_matches_scalar_reference() {
    let mut r = rng_from_seed(11);
    for (nx, nh) in [(1, 1), (6, 4), (7, 13), (32, 32)] {
        let mut p = GruLayerParams::glorot(nx, nh, &mut r);
        for b in [&mut p.b_r, &mut p.b_z, &mut p.b_h] {
            b.iter_mut().for_each(|v| *v = r.random_range(-1.0..1.0));
        }
        let x: Vec<f64> = (0..nx).map(|_| r.random_range(-2.0..2.0)).collect();
        let h: Vec<f64> = (0..nh).map(|_| r.random_range(-1.0..1.0)).collect();
        let got = gru_cell_forward(&x, &h, &p).unwrap();
        let want = scalar_gru(&x, &h, &p);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn gradients_match_central_differences_for_both_heads() {
    for head in [HeadKind::Immm, HeadKind::Linear] {
        for seed in [1, 2] {
            let m = scrambled_model(head, 8, 2, 5, seed);
            let window = random_window(5, seed + 10);
            let report = grad_check(&m, &window, &[0.3, 0.8], 1e-6, ParamSubset::All).unwrap();
            assert_eq!(report.checked, m.network.param_count());
            assert!(report.max_rel_error < 1e-5, "{head:?}: {report:?}");
        }
    }
}

#[test]
fn shorter_windows_and_subsets_also_check_out() {
    let m = scrambled_model(HeadKind::Immm, 8, 2, 5, 3);
    let window = random_window(2, 4);
    let report = grad_check(&m, &window, &[0.9, 0.1], 1e-6, ParamSubset::Random { count: 200, seed: 5 }).unwrap();
    assert_eq!(report.checked, 200);
    assert!(report.max_rel_error < 1e-5, "{report:?}");
}

#[test]
fn corrupted_gradient_is_caught() {
    let m = scrambled_model(HeadKind::Immm, 8, 2, 5, 6);
    let window = random_window(5, 7);
    let target = [0.2, 0.6];
    let mut g = m.network.zeros_like();
    loss_and_grad(&m, &window, &target, &mut g).unwrap();
    // Scale one GRU recurrent weight's gradient by 1.5.
    let idx = 6 * 8 + 8; // first entry of gru0.w_hr, after input.w and input.b
    let mut flat = 0;
    'outer: for s in g.slices_mut() {
        for v in s.iter_mut() {
            if flat == idx {
                *v = *v * 1.5 + 1e-3;
                break 'outer;
            }
            flat += 1;
        }
    }
    let report = grad_check_against(&m, &window, &target, 1e-6, ParamSubset::All, &g).unwrap();
    assert!(report.max_rel_error > 1e-2, "{report:?}");
    assert_eq!(report.worst.as_ref().unwrap().0, "gru0.w_hr");
}

#[test]
fn single_sample_overfits_monotonically() {
    let cfg =
        ModelConfig { input_width: 8, hidden: vec![8, 8], head: HeadKind::Immm, regimes_per_group: 5, input_steps: 20 };
    let mut m = init_model(&cfg, &unit_label_norm(), &mut rng_from_seed(2)).unwrap();
    let mut adam = AdamState::new(AdamConfig::default(), &m.network);
    let window = random_window(20, 3);
    let batch = [Example { window: &window, target: [0.9, 0.15] }];
    let mut prev = f64::INFINITY;
    for step in 0..50 {
        let loss = train_step(&mut m, &mut adam, &batch).unwrap();
        assert!(loss < prev, "step {step}: {loss} >= {prev}");
        prev = loss;
    }
}

#[test]
fn fresh_multiple_model_head_reports_regime_means() {
    let cfg = ModelConfig { input_width: 8, hidden: vec![8; 3], ..ModelConfig::default() };
    let m = init_model(&cfg, &unit_label_norm(), &mut rng_from_seed(9)).unwrap();
    for len in [1, 17, 100] {
        let e = model_forward(&m, &random_window(len, len as u64)).unwrap();
        assert!((e.physical[0] - 4.0).abs() < 1e-12);
        assert!((e.physical[1] - 0.25).abs() < 1e-12);
        for g in e.weights.unwrap() {
            assert!(g.iter().all(|&w| (w - 0.2).abs() < 1e-15));
        }
    }
}

#[test]
fn length_one_window_is_a_single_unroll_step() {
    let m = scrambled_model(HeadKind::Linear, 6, 2, 10, 4);
    let window = random_window(1, 5);
    let net = &m.network;
    let u: Vec<f64> = (0..6)
        .map(|i| (net.input.b[i] + (0..6).map(|j| net.input.w.get(i, j) * window[0][j]).sum::<f64>()).tanh())
        .collect();
    let h1 = gru_cell_forward(&u, &[0.0; 6], &net.layers[0]).unwrap();
    let h2 = gru_cell_forward(&h1, &[0.0; 6], &net.layers[1]).unwrap();
    let pnid_core::nn::Head::Linear(d) = &net.head else { unreachable!() };
    let e = model_forward(&m, &window).unwrap();
    for i in 0..2 {
        let y = d.b[i] + (0..6).map(|j| d.w.get(i, j) * h2[j]).sum::<f64>();
        assert!((e.normalized[i] - y).abs() < 1e-14);
    }
}

#[test]
fn forward_is_bit_stable() {
    let m = scrambled_model(HeadKind::Immm, 8, 3, 30, 8);
    let w = random_window(30, 9);
    assert_eq!(model_forward(&m, &w).unwrap(), model_forward(&m, &w).unwrap());
}

#[test]
fn empty_window_is_insufficient() {
    let m = scrambled_model(HeadKind::Immm, 4, 1, 5, 1);
    assert!(matches!(model_forward(&m, &[]), Err(Error::InsufficientData { .. })));
}

#[test]
fn grouped_head_is_no_larger_than_a_full_connection() {
    let banks = vec![RegimeBank::evenly_spaced(2.5, 5.5, 5), RegimeBank::evenly_spaced(0.1, 0.4, 5)];
    for h in [1, 8, 96] {
        let bank = RegimeBank::new(&banks, h).unwrap();
        assert_eq!(bank.param_count(), 2 * (h * 5 + 5));
        assert!(bank.param_count() <= h * 10 + 10);
    }
}

#[test]
fn immm_invariants_on_many_random_inputs() {
    let banks = vec![RegimeBank::evenly_spaced(2.5, 5.5, 5), RegimeBank::evenly_spaced(0.1, 0.4, 5)];
    let mut bank = RegimeBank::new(&banks, 16).unwrap();
    let mut r = rng_from_seed(21);
    for g in &mut bank.groups {
        g.w.data.iter_mut().for_each(|v| *v = r.random_range(-20.0..20.0));
        g.b.iter_mut().for_each(|v| *v = r.random_range(-20.0..20.0));
    }
    for _ in 0..10_000 {
        let h: Vec<f64> = (0..16).map(|_| r.random_range(-1.0..1.0)).collect();
        let out = immm_forward(&h, &bank).unwrap();
        for (i, w) in out.weights.iter().enumerate() {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let (lo, hi) = (banks[i][0], banks[i][4]);
            assert!(out.outputs[i] >= lo && out.outputs[i] <= hi);
        }
    }
}

proptest! {
    #[test]
    fn softmax_sums_to_one(logits in prop::collection::vec(-1e3f64..1e3, 1..12)) {
        let w = softmax(&logits);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn immm_estimates_stay_in_the_banks(seed in 0u64..1000, len in 1usize..12) {
        let m = scrambled_model(HeadKind::Immm, 4, 2, 12, seed);
        let e = model_forward(&m, &random_window(len, seed)).unwrap();
        prop_assert!((2.5..=5.5).contains(&e.physical[0]));
        prop_assert!((0.1..=0.4).contains(&e.physical[1]));
    }
}
