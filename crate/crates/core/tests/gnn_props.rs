mod common;

use common::{input_jacobian_error, random_connected, random_features, random_params};
use lrgk::gnn::{
    forward, load_checkpoint, sample_ego, save_checkpoint, softmax, softmax_jacobian, train, AdamW,
    Arch, ForwardOptions, TrainConfig,
};
use lrgk::graph::named::grid;
use lrgk::ingest::{city_dataset, gen_grid_city, WeightLaw};
use lrgk::labeling::label_dataset;
use lrgk::oracle::{exact_diameter, finite_diff_jacobian};
use lrgk::spectral::NormalizedOperator;
use lrgk::Exec;
use ndarray::Array2;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn input_gradients_match_finite_differences(seed in any::<u64>(), arch_i in 0usize..3, li in 0usize..3) {
        let arch = [Arch::Mlp, Arch::Sgc, Arch::Gcn][arch_i];
        let layers = [1, 2, 4][li];
        let err = input_jacobian_error(arch, layers, seed);
        prop_assert!(err < 1e-3, "{arch} L={layers}: {err}");
    }

    #[test]
    fn softmax_derivative_signs(z in prop::collection::vec(-5.0f64..5.0, 2..8)) {
        let p = softmax(&z);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let j = softmax_jacobian(&z);
        for a in 0..z.len() {
            prop_assert!(j[a][a] > 0.0);
            prop_assert!((j[a][a] - p[a] * (1.0 - p[a])).abs() < 1e-15);
            for b in 0..z.len() {
                if a != b {
                    prop_assert!(j[a][b] < 0.0);
                }
            }
        }
    }

    #[test]
    fn features_beyond_the_ball_are_invisible(seed in any::<u64>(), arch_i in 0usize..3, h in 1usize..4) {
        let arch = [Arch::Mlp, Arch::Sgc, Arch::Gcn][arch_i];
        let g = random_connected(40, 10, 1.0, 1.0, seed);
        let params = random_params(arch, h, 3, 6, 4, seed);
        let x = random_features(40, 3, seed);
        let v = (seed % 40) as usize;
        let run = |x: &Array2<f64>| {
            let batch = sample_ego(&g, &[v], h, None, 0, Exec::Sequential).unwrap();
            let input = batch.gather(x, params.input_rows(&batch));
            forward(&params, &batch, input, ForwardOptions::eval(), Exec::Sequential).unwrap().logits().clone()
        };
        let hop = lrgk::graph::bfs_hops(&g, v, h).unwrap();
        let mut y = x.clone();
        for u in 0..40 {
            if hop[u].is_none() {
                y.row_mut(u).mapv_inplace(|a| a * 7.0 + 3.0);
            }
        }
        prop_assert_eq!(run(&x), run(&y));
    }
}

#[test]
fn parameter_gradients_match_finite_differences() {
    for arch in [Arch::Mlp, Arch::Sgc, Arch::Gcn] {
        for layers in [1, 2, 4] {
            let g = random_connected(20, 8, 1.0, 1.0, layers as u64);
            let params = random_params(arch, layers, 3, 4, 3, 9);
            let x = random_features(20, 3, 2);
            let batch = sample_ego(&g, &[0, 5, 11], layers, None, 0, Exec::Sequential).unwrap();
            let input = batch.gather(&x, params.input_rows(&batch));
            let targets = [0usize, 2, 1];
            let loss_of = |p: &lrgk::gnn::ModelParams| {
                let mut f = forward(p, &batch, input.clone(), ForwardOptions::eval(), Exec::Sequential).unwrap();
                let l = f.tape.softmax_cross_entropy(f.logits, &targets).unwrap();
                f.tape.value(l)[[0, 0]]
            };
            let opts = ForwardOptions {
                dropout_rng: None,
                param_grads: true,
                input_grads: false,
            };
            let mut f = forward(&params, &batch, input.clone(), opts, Exec::Sequential).unwrap();
            let l = f.tape.softmax_cross_entropy(f.logits, &targets).unwrap();
            let vars = f.param_vars();
            let grads = f.tape.backward(l, Array2::ones((1, 1))).unwrap();
            for (t, var) in vars.iter().enumerate() {
                let ours = grads.get(*var).unwrap();
                let base: Vec<Vec<f64>> = params.tensors()[t].outer_iter().map(|r| r.to_vec()).collect();
                let fd = finite_diff_jacobian(
                    |w: &[Vec<f64>]| {
                        let mut p = params.clone();
                        let m = &mut p.tensors_mut()[t];
                        for (i, row) in w.iter().enumerate() {
                            for (j, v) in row.iter().enumerate() {
                                m[[i, j]] = *v;
                            }
                        }
                        vec![loss_of(&p)]
                    },
                    &base,
                    1e-6,
                )
                .unwrap();
                let (mut num, mut den) = (0.0f64, 0.0f64);
                for (i, row) in fd[0].iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        num += (ours[[i, j]] - v).powi(2);
                        den += v * v;
                    }
                }
                assert!(num.sqrt() <= 1e-3 * den.sqrt().max(1e-8), "{arch} L={layers} tensor {t}");
            }
        }
    }
}

#[test]
fn sgc_forward_equals_repeated_propagation() {
    let g = grid(5, 4);
    let diam = exact_diameter(&g).unwrap();
    let layers = 3;
    let mut params = random_params(Arch::Sgc, layers, 2, 1, 2, 4);
    params.weights[0] = Array2::eye(2);
    params.biases[0] = Array2::zeros((1, 2));
    let x = random_features(20, 2, 8);
    let op = NormalizedOperator::augmented(&g, 1.0, Exec::Sequential).unwrap();
    let mut cols: Vec<Vec<f64>> = (0..2).map(|j| x.column(j).to_vec()).collect();
    for _ in 0..layers {
        cols = cols.iter().map(|c| op.apply(c).unwrap()).collect();
    }
    let seeds: Vec<usize> = (0..20).collect();
    let batch = sample_ego(&g, &seeds, diam, None, 0, Exec::Sequential).unwrap();
    let input = batch.gather(&x, params.input_rows(&batch));
    let out = forward(&params, &batch, input, ForwardOptions::eval(), Exec::Sequential).unwrap();
    for v in 0..20 {
        for j in 0..2 {
            assert!((out.logits()[[v, j]] - cols[j][v]).abs() < 1e-12);
        }
    }
}

#[test]
fn adamw_first_step_moves_by_learning_rate() {
    let mut p = random_params(Arch::Mlp, 1, 2, 1, 2, 0);
    let before = p.clone();
    let grads: Vec<Array2<f64>> = p.tensors().iter().map(|t| t.mapv(|_| 0.3)).collect();
    let mut opt = AdamW::new(&p, 0.01, 0.1);
    opt.step(&mut p, &grads).unwrap();
    for (a, b) in p.tensors().iter().zip(before.tensors()) {
        for (x, y) in a.iter().zip(b.iter()) {
            let expected = y * (1.0 - 0.01 * 0.1) - 0.01 * 0.3 / (0.3 + 1e-8);
            assert!((x - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = random_params(Arch::Gcn, 3, 4, 5, 6, 1);
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&p, &path).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap(), p);
    std::fs::write(&path, b"garbage").unwrap();
    assert!(load_checkpoint(&path).is_err());
}

#[test]
fn training_is_deterministic_across_modes() {
    let (g, raw) = gen_grid_city(12, 12, &WeightLaw::default(), 0.0, 3).unwrap();
    let (mut data, _) = city_dataset(g, &raw, 3).unwrap();
    label_dataset(&mut data, 4, 4, Exec::Sequential).unwrap();
    let cfg = TrainConfig {
        arch: Arch::Gcn,
        layers: 2,
        hops: 2,
        hidden: 8,
        epochs: 8,
        record_window: 2,
        batch_size: 4,
        lr: 1e-2,
        ..TrainConfig::default()
    };
    let init = lrgk::gnn::ModelParams::init(cfg.model_config(data.features.width(), 4), 0).unwrap();
    let a = train(init.clone(), &data, &cfg, Exec::Sequential).unwrap();
    let b = train(init, &data, &cfg, Exec::Parallel).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.history, b.history);
    assert!(a.history.first().unwrap().train_loss > a.history.last().unwrap().train_loss);
}
