mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{input_jacobian_error, random_connected, random_features, random_params, spectral_population};
use lrgk::gnn::{forward, run_setting, sample_ego, Arch, ForwardOptions, Setting, TrainConfig};
use lrgk::graph::bfs_hops;
use lrgk::graph::named::grid;
use lrgk::influence::{dilution_experiment, receptive_field};
use lrgk::ingest::{city_dataset, gen_grid_city, gen_small_world, synthetic_record, Dataset, WeightLaw};
use lrgk::labeling::{eccentricities, label_dataset};
use lrgk::oracle::{dense_eigs, dense_normalized_adjacency, exact_diameter, exact_eccentricity};
use lrgk::spectral::{bound_lambda, oversmoothing_decay, verify_complementarity, verify_selfloop_shift};
use lrgk::{Exec, Graph};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    let detail = detail.trim_end().to_string();
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(id: usize, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let result = match (result, budget) {
        (Ok(d), Some(b)) if elapsed > b => Err(format!("{d}; exceeded {b:?}")),
        (r, _) => r,
    };
    let (verdict, detail) = match &result {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("criterion {id:>2} {verdict} {name}: {detail} [{elapsed:.2?}]");
    result.is_ok()
}

fn table_bounds() -> Outcome {
    let rows = [
        ("Paris", 15, 121, 0.4741),
        ("Shanghai", 8, 123, 0.6344),
        ("L.A.", 9, 171, 0.6095),
        ("London", 10, 404, 0.5921),
        ("PascalVOC", 10, 28, 0.4857),
        ("COCO", 10, 27, 0.4815),
        ("Cora", 168, 19, 0.0324),
        ("CiteSeer", 99, 28, 0.1143),
        ("ogbn-arxiv", 13000, 25, -0.0640),
    ];
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (name, d, diam, want) in rows {
        let got = bound_lambda(d, diam).map_err(|e| e.to_string())?;
        let err = (got - want).abs();
        worst = worst.max(err);
        if err > 5e-4 {
            bad.push(format!("{name} {got:.5} vs {want}"));
        }
    }
    ensure(bad.is_empty(), format!("9 datasets, max |error| {worst:.2e} {}", bad.join(", ")))
}

fn population() -> Vec<(String, Graph)> {
    spectral_population()
        .into_iter()
        .filter(|(_, g)| g.n_nodes() <= 400 && exact_diameter(g).unwrap() >= 4)
        .collect()
}

fn eigenvalue_bound(pop: &[(String, Graph)]) -> Outcome {
    let mut min_margin = f64::INFINITY;
    let mut bad = Vec::new();
    for (name, g) in pop {
        let n = g.n_nodes();
        let lambda = dense_eigs(&dense_normalized_adjacency(g, 1.0).unwrap(), 1e-13).unwrap().values[n - 2];
        let bound = bound_lambda(g.max_degree(), exact_diameter(g).unwrap()).unwrap();
        min_margin = min_margin.min(lambda - bound);
        if lambda <= bound {
            bad.push(name.clone());
        }
    }
    ensure(
        pop.len() >= 50 && bad.is_empty(),
        format!("{} graphs, min margin {min_margin:.4} {}", pop.len(), bad.join(", ")),
    )
}

fn complementarity(pop: &[(String, Graph)]) -> Outcome {
    let mut worst = 0.0f64;
    let mut min_gap = f64::INFINITY;
    let mut bad = Vec::new();
    for (name, g) in pop {
        let c = verify_complementarity(g, 1e-10).unwrap();
        let s = verify_selfloop_shift(g, 1.0, 0.0).unwrap();
        worst = worst.max(c.max_deviation);
        min_gap = min_gap.min(s.lambda_augmented - s.lambda_plain);
        if !c.passed || !s.passed {
            bad.push(name.clone());
        }
    }
    ensure(
        pop.len() >= 50 && bad.is_empty(),
        format!(
            "{} graphs, max deviation {worst:.2e}, min self-loop gap {min_gap:.2e} {}",
            pop.len(),
            bad.join(", ")
        ),
    )
}

fn decay_rate() -> Outcome {
    let g = grid(8, 8);
    let layers = 50;
    let curve = oversmoothing_decay(&g, layers, Exec::Sequential).map_err(|e| e.to_string())?;
    let lambda = dense_eigs(&dense_normalized_adjacency(&g, 1.0).unwrap(), 1e-14).unwrap().values[62];
    let worst = curve
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let want = lambda.powi(i as i32 + 1);
            (d - want).abs() / want
        })
        .fold(0.0, f64::max);
    ensure(
        curve.len() == layers && worst < 1e-6,
        format!("lambda {lambda:.6}, {} layers, max relative error {worst:.2e}", curve.len()),
    )
}

fn eccentricity_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut graphs, mut bitwise, mut nodes) = (0, 0, 0);
    let mut worst = 0.0f64;
    while graphs < 100 {
        let n = rng.gen_range(2..=200);
        let g = random_connected(n, rng.gen_range(n / 4..=2 * n), 0.5, 50.0, rng.gen());
        if exact_diameter(&g).unwrap() > 16 {
            continue;
        }
        graphs += 1;
        let ours = eccentricities(&g, 16, Exec::Parallel).unwrap();
        let exact = exact_eccentricity(&g, true).unwrap();
        for (a, b) in ours.iter().zip(&exact) {
            nodes += 1;
            if a.to_bits() == b.to_bits() {
                bitwise += 1;
            } else {
                worst = worst.max((a - b).abs() / b.abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    ensure(
        worst <= 1e-9,
        format!("{graphs} graphs, {bitwise}/{nodes} bitwise equal, max relative error {worst:.2e}"),
    )
}

fn jacobians() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for arch in [Arch::Mlp, Arch::Sgc, Arch::Gcn] {
        for layers in [1, 2, 4] {
            for seed in 0..20 {
                worst = worst.max(input_jacobian_error(arch, layers, 1000 + seed));
                cases += 1;
            }
        }
    }
    ensure(worst < 1e-3, format!("{cases} instances, max relative error {worst:.2e}"))
}

fn dilution() -> Outcome {
    let hs: Vec<usize> = (1..=20).collect();
    let rows = dilution_experiment(2, 51, &hs).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    for r in &rows {
        let h = r.h as f64;
        if r.shell_size != 4 * r.h || r.i_mean_times_h != 0.25 {
            bad.push(format!("shell h={}", r.h));
        }
        if r.ball_mean != 1.0 / (2.0 * h * h + 2.0 * h + 1.0) {
            bad.push(format!("ball h={}", r.h));
        }
        if r.i_sum < 1.0 || r.t_bar < 1.0 {
            bad.push(format!("total h={}", r.h));
        }
    }
    let tail = rows.last().unwrap();
    let h2_ball = tail.ball_mean * (tail.h * tail.h) as f64;
    ensure(
        bad.is_empty() && (h2_ball - 0.5).abs() < 0.05,
        format!("h = 1..=20 on a 51x51 lattice, h^2 ball mean at h=20 {h2_ball:.4} {}", bad.join(", ")),
    )
}

fn locality() -> Outcome {
    let mut worst = [0.0f64; 2];
    for (k, arch) in [Arch::Sgc, Arch::Gcn].into_iter().enumerate() {
        for trial in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(trial);
            let n = rng.gen_range(30..120);
            let g = random_connected(n, rng.gen_range(0..n), 1.0, 1.0, trial);
            let h = rng.gen_range(1..=4);
            let params = random_params(arch, h, 4, 8, 5, trial);
            let x = random_features(n, 4, trial);
            let seeds: Vec<usize> = (0..n).filter(|v| v % 17 == trial as usize % 17).take(3).collect();
            let logits = |x: &Array2<f64>| {
                let batch = sample_ego(&g, &seeds, h, None, 0, Exec::Sequential).unwrap();
                let input = batch.gather(x, params.input_rows(&batch));
                forward(&params, &batch, input, ForwardOptions::eval(), Exec::Sequential)
                    .unwrap()
                    .logits()
                    .clone()
            };
            let mut near = vec![false; n];
            for &s in &seeds {
                for (u, hop) in bfs_hops(&g, s, h).unwrap().iter().enumerate() {
                    near[u] |= hop.is_some();
                }
            }
            let mut y = x.clone();
            for u in (0..n).filter(|&u| !near[u]) {
                y.row_mut(u).mapv_inplace(|a| rng.gen_range(-100.0..100.0) * a + 5.0);
            }
            let diff = (&logits(&x) - &logits(&y)).iter().fold(0.0f64, |m, d| m.max(d.abs()));
            worst[k] = worst[k].max(diff);
        }
    }
    ensure(
        worst[0] == 0.0 && worst[1] < 1e-12,
        format!("50 trials each, max logit change SGC {:e}, GCN {:e}", worst[0], worst[1]),
    )
}

fn acceptance_law() -> WeightLaw {
    WeightLaw::Layered {
        block: 32,
        fine: 4,
        lo: 40.0,
        hi: 200.0,
        contrast: 3.0,
        jitter: 0.2,
    }
}

fn grid_city() -> Dataset {
    let (g, raw) = gen_grid_city(64, 64, &acceptance_law(), 0.0, 7).unwrap();
    let (mut data, _) = city_dataset(g, &raw, 7).unwrap();
    label_dataset(&mut data, 16, 10, Exec::Parallel).unwrap();
    data
}

fn train_config() -> TrainConfig {
    TrainConfig {
        epochs: 200,
        record_window: 20,
        batch_size: 32,
        lr: 5e-3,
        ..TrainConfig::default()
    }
}

fn long_range_trend(data: &Dataset) -> Outcome {
    let base = train_config();
    let acc = |arch, layers, hops| {
        run_setting(data, &base, Setting { arch, layers, hops }, 0, Exec::Parallel)
            .unwrap()
            .0
            .test_acc
    };
    let mlp = acc(Arch::Mlp, 2, 2);
    let shallow = acc(Arch::Gcn, 2, 2);
    let deep_short = acc(Arch::Gcn, 16, 2);
    let deep = acc(Arch::Gcn, 16, 16);
    ensure(
        deep - shallow >= 0.05 && deep >= deep_short && mlp < shallow.min(deep_short).min(deep),
        format!(
            "test accuracy MLP {mlp:.3}, GCN L=H=2 {shallow:.3}, GCN L=16 H=2 {deep_short:.3}, GCN L=H=16 {deep:.3}"
        ),
    )
}

fn receptive_field_order(grid_data: &Dataset) -> Outcome {
    let sw = gen_small_world(4096, 4, 0.1, 7).unwrap();
    let record = synthetic_record(&sw, 7);
    let (mut sw_data, _) = city_dataset(sw, &record, 7).unwrap();
    let mut labels = grid_data.features.labels.clone().unwrap();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(7));
    sw_data.features.labels = Some(labels);

    let base = TrainConfig {
        epochs: 50,
        record_window: 10,
        cap_per_hop: Some(64),
        ..train_config()
    };
    let setting = Setting {
        arch: Arch::Gcn,
        layers: 8,
        hops: 8,
    };
    let r = |data: &Dataset, seed: u64| {
        let (_, out) = run_setting(data, &base, setting, seed, Exec::Parallel).unwrap();
        receptive_field(&out.params, &data.graph, &data.features.x, 8, 100, seed, Exec::Parallel)
            .unwrap()
            .r
    };
    let mut ordered = true;
    let mut detail = Vec::new();
    for seed in 0..3 {
        let (rg, rs) = (r(grid_data, seed), r(&sw_data, seed));
        ordered &= rg > rs;
        detail.push(format!("seed {seed}: grid {rg:.3} small world {rs:.3}"));
    }
    ensure(ordered, detail.join(", "))
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= run(1, "eigenvalue bound table", Some(Duration::from_secs(1)), table_bounds);
    let pop = population();
    ok &= run(2, "eigenvalue bound on generated graphs", Some(Duration::from_secs(60)), || {
        eigenvalue_bound(&pop)
    });
    ok &= run(3, "complementarity and self-loop shift", None, || complementarity(&pop));
    ok &= run(4, "over-smoothing rate", None, decay_rate);
    ok &= run(5, "hop-bounded eccentricity vs exact", None, eccentricity_oracle);
    ok &= run(6, "backward Jacobian vs finite differences", None, jacobians);
    ok &= run(7, "dilution laws", None, dilution);
    ok &= run(10, "locality beyond the ego ball", None, locality);
    let data = grid_city();
    ok &= run(8, "long-range accuracy trend", Some(Duration::from_secs(30 * 60)), || {
        long_range_trend(&data)
    });
    ok &= run(9, "receptive field ordering", None, || receptive_field_order(&data));
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
