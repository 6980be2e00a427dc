#![allow(dead_code)]

use std::collections::HashSet;

use lrgk::graph::named::grid;
use lrgk::ingest::{gen_grid_city, gen_small_world, WeightLaw};
use lrgk::Graph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random spanning tree plus `extra` chords, weights uniform in `[lo, hi)`.
pub fn random_connected(n: usize, extra: usize, lo: f64, hi: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let w = |rng: &mut ChaCha8Rng| if hi > lo { rng.gen_range(lo..hi) } else { lo };
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        seen.insert((order[i].min(parent), order[i].max(parent)));
        edges.push((order[i], parent, w(&mut rng)));
    }
    for _ in 0..extra {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v && seen.insert((u.min(v), u.max(v))) {
            edges.push((u, v, w(&mut rng)));
        }
    }
    Graph::from_edges(n, &edges, None).expect("valid random graph")
}

/// Connected test graphs with diameter at least 4 and at most 400 nodes:
/// lattices, perturbed weighted lattices and small-world rings.
pub fn spectral_population() -> Vec<(String, Graph)> {
    let mut out = Vec::new();
    for (w, h) in [(4, 4), (5, 3), (6, 6), (8, 8), (10, 4), (12, 12), (20, 20), (16, 9)] {
        out.push((format!("grid {w}x{h}"), grid(w, h)));
    }
    for seed in 0..22u64 {
        let w = 4 + (seed as usize * 5) % 14;
        let h = 3 + (seed as usize * 7) % 15;
        let (g, _) = gen_grid_city(w, h, &WeightLaw::Unit, 0.15 + 0.01 * seed as f64, seed)
            .expect("valid perturbed grid");
        out.push((format!("perturbed grid {w}x{h} seed {seed}"), g));
    }
    for seed in 0..22u64 {
        let n = 40 + 16 * seed as usize;
        let k = [2, 4, 6][seed as usize % 3];
        let p = [0.02, 0.05, 0.1, 0.2][seed as usize % 4];
        let g = gen_small_world(n, k, p, seed).expect("valid small world");
        out.push((format!("small world n={n} k={k} p={p} seed {seed}"), g));
    }
    out
}

use lrgk::gnn::{forward, sample_ego, Arch, ForwardOptions, ModelConfig, ModelParams};
use lrgk::oracle::finite_diff_jacobian;
use ndarray::Array2;

/// Glorot weights and small random biases.
pub fn random_params(arch: Arch, layers: usize, in_dim: usize, hidden: usize, classes: usize, seed: u64) -> ModelParams {
    let cfg = ModelConfig {
        arch,
        layers,
        hidden,
        in_dim,
        n_classes: classes,
        dropout: 0.0,
    };
    let mut p = ModelParams::init(cfg, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xB1A5);
    for b in p.biases.iter_mut() {
        b.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
    }
    p
}

pub fn random_features(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0))
}

/// Relative Frobenius error between the reverse-mode Jacobian of the seed
/// logits with respect to the input rows and a central-difference estimate.
pub fn input_jacobian_error(arch: Arch, layers: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(8..30);
    let g = random_connected(n, rng.gen_range(0..n), 1.0, 1.0, seed);
    let (d, classes) = (3, 4);
    let params = random_params(arch, layers, d, 5, classes, seed);
    let x = random_features(n, d, seed + 1);
    let seeds: Vec<usize> = (0..n).filter(|v| v % 4 == seed as usize % 4).take(3).collect();
    let batch = sample_ego(&g, &seeds, layers, None, 0, lrgk::Exec::Sequential).unwrap();
    let rows = params.input_rows(&batch);
    let input = batch.gather(&x, rows);

    let opts = ForwardOptions {
        dropout_rng: None,
        param_grads: false,
        input_grads: true,
    };
    let fwd = forward(&params, &batch, input.clone(), opts, lrgk::Exec::Sequential).unwrap();
    let (s, c) = fwd.logits().dim();
    let mut ours = Vec::new();
    for i in 0..s {
        for k in 0..c {
            let mut seed_m = Array2::zeros((s, c));
            seed_m[[i, k]] = 1.0;
            let grads = fwd.tape.backward_retain(fwd.logits, seed_m).unwrap();
            ours.push(grads.get(fwd.input).cloned().unwrap_or_else(|| Array2::zeros(input.dim())));
        }
    }

    let rows_vec: Vec<Vec<f64>> = input.outer_iter().map(|r| r.to_vec()).collect();
    let f = |xs: &[Vec<f64>]| {
        let m = Array2::from_shape_fn((xs.len(), d), |(i, j)| xs[i][j]);
        let out = forward(&params, &batch, m, ForwardOptions::eval(), lrgk::Exec::Sequential).unwrap();
        out.logits().iter().copied().collect::<Vec<f64>>()
    };
    let fd = finite_diff_jacobian(f, &rows_vec, 1e-6).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for (o, jac) in ours.iter().zip(&fd) {
        for (u, row) in jac.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                num += (o[[u, j]] - v).powi(2);
                den += v * v;
            }
        }
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}
