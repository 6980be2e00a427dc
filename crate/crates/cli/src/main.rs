//! `lrgk` command-line front-end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lrgk::gnn::{
    evaluate, load_checkpoint, run_setting, save_checkpoint, sweep_settings, train, write_history,
    Arch, ModelParams, TrainConfig,
};
use lrgk::influence::receptive_field;
use lrgk::ingest::{
    city_dataset, gen_grid_city, gen_small_world, load_city, read_bundle, synthetic_record,
    write_bundle, write_city_csv, Bundle, Split, WeightLaw,
};
use lrgk::labeling::{label_dataset, DEFAULT_HOPS, DEFAULT_QUANTILES};
use lrgk::{netstats, spectral, Exec};

#[derive(Debug, Parser)]
#[command(name = "lrgk", version, about = "Long-range graph toolkit")]
struct Cli {
    /// Worker threads; 0 uses every available core, 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
enum Command {
    /// Generate a synthetic city (grid or small-world) and write its bundle.
    Generate(GenerateArgs),
    /// Build a bundle from `nodes.csv` / `edges.csv` road files.
    Ingest(IngestArgs),
    /// Attach eccentricity quantile labels to a bundle.
    Label(LabelArgs),
    /// Degree, clustering, diameter and homophily statistics.
    Stats(StatsArgs),
    /// Eigenvalue estimates, the lower bound and the over-smoothing curve.
    Spectral(SpectralArgs),
    /// Train one model and save its checkpoint.
    Train(TrainArgs),
    /// Accuracy sweep over architectures and hop bounds.
    Experiment(ExperimentArgs),
    /// Influence profile and receptive field of a trained model.
    Influence(InfluenceArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum LawKind {
    Unit,
    Uniform,
    Districts,
}

#[derive(Debug, Args, Serialize)]
struct GenerateArgs {
    /// Grid size as WIDTHxHEIGHT.
    #[arg(long, default_value = "64x64", conflicts_with = "small_world")]
    grid: String,
    /// Generate a Watts-Strogatz graph with this many nodes instead of a grid.
    #[arg(long)]
    small_world: Option<usize>,
    /// Ring neighbors for the small-world graph.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Rewiring probability for the small-world graph.
    #[arg(long, default_value_t = 0.1)]
    rewire: f64,
    #[arg(long, value_enum, default_value_t = LawKind::Districts)]
    law: LawKind,
    /// District side length in cells.
    #[arg(long, default_value_t = 8)]
    block: usize,
    /// Smallest road length.
    #[arg(long, default_value_t = 40.0)]
    lo: f64,
    /// Largest road length.
    #[arg(long, default_value_t = 200.0)]
    hi: f64,
    /// Relative per-edge jitter around the district length.
    #[arg(long, default_value_t = 0.3)]
    jitter: f64,
    /// Probability of deleting each grid edge (connectivity is preserved).
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
    #[arg(long, env = "LRGK_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    #[arg(long)]
    nodes: PathBuf,
    #[arg(long)]
    edges: PathBuf,
    /// Seed of the train/val/test split.
    #[arg(long, env = "LRGK_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct LabelArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, default_value_t = DEFAULT_HOPS)]
    hops: usize,
    #[arg(long, default_value_t = DEFAULT_QUANTILES)]
    quantiles: usize,
    /// Output bundle directory; defaults to rewriting the input bundle.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct StatsArgs {
    #[arg(long, required_unless_present = "nodes")]
    bundle: Option<PathBuf>,
    #[arg(long, requires = "edges", conflicts_with = "bundle")]
    nodes: Option<PathBuf>,
    #[arg(long, requires = "nodes")]
    edges: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SpectralArgs {
    /// Only evaluate the eigenvalue lower bound for `--dmax` and `--diam`.
    #[arg(long, requires_all = ["dmax", "diam"])]
    bound_only: bool,
    #[arg(long)]
    dmax: Option<usize>,
    #[arg(long)]
    diam: Option<usize>,
    #[arg(long, required_unless_present = "bound_only")]
    bundle: Option<PathBuf>,
    /// Length of the decay curve.
    #[arg(long, default_value_t = 50)]
    layers: usize,
    /// Self-loop weight of the propagation operator.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, required_unless_present = "bound_only")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct TrainOverrides {
    /// JSON training configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    record_window: Option<usize>,
    /// Keep at most this many new nodes per hop when sampling ego-networks.
    #[arg(long)]
    cap_per_hop: Option<usize>,
}

impl TrainOverrides {
    fn resolve(&self) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| input(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", p.display())))?
            }
            None => TrainConfig::default(),
        };
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.lr {
            cfg.lr = v;
        }
        if let Some(v) = self.weight_decay {
            cfg.weight_decay = v;
        }
        if let Some(v) = self.dropout {
            cfg.dropout = v;
        }
        if let Some(v) = self.hidden {
            cfg.hidden = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.record_window {
            cfg.record_window = v;
        }
        if self.cap_per_hop.is_some() {
            cfg.cap_per_hop = self.cap_per_hop;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    arch: Option<Arch>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hops: Option<usize>,
    #[arg(long, env = "LRGK_SEED")]
    seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    train: TrainOverrides,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ExperimentArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "mlp,gcn")]
    archs: Vec<Arch>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
    hops: Vec<usize>,
    /// Also run every hop bound with this fixed number of layers.
    #[arg(long)]
    fixed_layers: Option<usize>,
    #[arg(long, env = "LRGK_SEED", value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    train: TrainOverrides,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct InfluenceArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value_t = DEFAULT_HOPS)]
    hops: usize,
    /// Number of sampled nodes.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, env = "LRGK_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Manifest<'a> {
    toolkit: &'static str,
    version: &'static str,
    threads: usize,
    #[serde(flatten)]
    command: &'a Command,
}

fn input(msg: impl Into<String>) -> anyhow::Error {
    lrgk::Error::Input(msg.into()).into()
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_manifest(dir: &Path, threads: usize, command: &Command) -> Result<()> {
    create_out(dir)?;
    let m = Manifest {
        toolkit: "lrgk",
        version: env!("CARGO_PKG_VERSION"),
        threads,
        command,
    };
    write_json(&dir.join("manifest.json"), &m)
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| input(format!("grid must look like WIDTHxHEIGHT, got '{s}'")))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| input(format!("bad grid dimension '{t}'")))
    };
    Ok((parse(w)?, parse(h)?))
}

fn print_stats_row(r: &netstats::NetStatsReport) {
    println!("n_nodes,n_edges,avg_degree,std_degree,max_degree,avg_clustering,transitivity,diameter_estimate");
    println!(
        "{},{},{:.4},{:.4},{},{:.4},{:.4},{}",
        r.n_nodes,
        r.n_edges,
        r.avg_degree,
        r.std_degree,
        r.max_degree,
        r.avg_clustering,
        r.transitivity,
        r.diameter_estimate
    );
}

fn cmd_generate(a: &GenerateArgs, exec: Exec) -> Result<()> {
    let (graph, raw) = match a.small_world {
        Some(n) => {
            let g = gen_small_world(n, a.k, a.rewire, a.seed)?;
            let raw = synthetic_record(&g, a.seed);
            (g, raw)
        }
        None => {
            let (w, h) = parse_grid(&a.grid)?;
            let law = match a.law {
                LawKind::Unit => WeightLaw::Unit,
                LawKind::Uniform => WeightLaw::Uniform { lo: a.lo, hi: a.hi },
                LawKind::Districts => WeightLaw::Districts {
                    block: a.block,
                    lo: a.lo,
                    hi: a.hi,
                    jitter: a.jitter,
                },
            };
            gen_grid_city(w, h, &law, a.perturb, a.seed)?
        }
    };
    write_city_csv(&graph, &raw, &a.out)?;
    let (dataset, schema) = city_dataset(graph, &raw, a.seed)?;
    let report = netstats::report(&dataset.graph, None, exec)?;
    write_bundle(
        &a.out,
        &Bundle {
            dataset,
            schema,
            epsilon_hat: None,
        },
    )?;
    print_stats_row(&report);
    Ok(())
}

fn cmd_ingest(a: &IngestArgs, exec: Exec) -> Result<()> {
    let (graph, raw) = load_city(&a.nodes, &a.edges)?;
    let (dataset, schema) = city_dataset(graph, &raw, a.seed)?;
    let report = netstats::report(&dataset.graph, None, exec)?;
    write_bundle(
        &a.out,
        &Bundle {
            dataset,
            schema,
            epsilon_hat: None,
        },
    )?;
    print_stats_row(&report);
    Ok(())
}

fn cmd_label(a: &LabelArgs, exec: Exec) -> Result<PathBuf> {
    let mut bundle = read_bundle(&a.bundle)?;
    let res = label_dataset(&mut bundle.dataset, a.hops, a.quantiles, exec)?;
    bundle.epsilon_hat = Some(res.epsilon_hat);
    let out = a.out.clone().unwrap_or_else(|| a.bundle.clone());
    write_bundle(&out, &bundle)?;
    let mut counts = vec![0usize; a.quantiles];
    for &y in &res.labels {
        counts[y] += 1;
    }
    println!("class,count");
    for (c, n) in counts.iter().enumerate() {
        println!("{c},{n}");
    }
    Ok(out)
}

fn cmd_stats(a: &StatsArgs, exec: Exec) -> Result<()> {
    let report = match (&a.bundle, &a.nodes, &a.edges) {
        (Some(dir), _, _) => {
            let b = read_bundle(dir)?;
            netstats::report(&b.dataset.graph, b.dataset.features.labels.as_deref(), exec)?
        }
        (None, Some(n), Some(e)) => {
            let (g, _) = load_city(n, e)?;
            netstats::report(&g, None, exec)?
        }
        _ => return Err(input("stats needs --bundle or both --nodes and --edges")),
    };
    create_out(&a.out)?;
    write_json(&a.out.join("stats.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_spectral(a: &SpectralArgs, exec: Exec) -> Result<()> {
    if a.bound_only {
        let (Some(d), Some(diam)) = (a.dmax, a.diam) else {
            return Err(input("--bound-only needs --dmax and --diam"));
        };
        println!("{:.4}", spectral::bound_lambda(d, diam)?);
        return Ok(());
    }
    let (Some(dir), Some(out)) = (&a.bundle, &a.out) else {
        return Err(input("spectral needs --bundle and --out"));
    };
    let b = read_bundle(dir)?;
    let report = spectral::report(&b.dataset.graph, a.gamma, a.layers, exec)?;
    create_out(out)?;
    write_json(&out.join("spectral.json"), &report)?;
    let mut text = String::from("l,deviation\n");
    for (l, v) in report.decay_curve.iter().enumerate() {
        text.push_str(&format!("{},{v:e}\n", l + 1));
    }
    fs::write(out.join("decay.csv"), text).context("writing decay.csv")?;
    println!(
        "lambda_n_minus_1={:.6} bound={}",
        report.eigs.lambda_n_minus_1.value,
        report
            .bound_value
            .map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"))
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    config: TrainConfig,
    best_epoch: usize,
    best_val_acc: f64,
    test_acc: f64,
    n_params: usize,
}

fn cmd_train(a: &TrainArgs, exec: Exec) -> Result<()> {
    let mut cfg = a.train.resolve()?;
    if let Some(v) = a.arch {
        cfg.arch = v;
    }
    if let Some(v) = a.layers {
        cfg.layers = v;
    }
    if let Some(v) = a.hops {
        cfg.hops = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    let b = read_bundle(&a.bundle)?;
    let data = &b.dataset;
    let labels = data
        .features
        .labels
        .as_deref()
        .ok_or_else(|| input(format!("{}: bundle has no labels", a.bundle.display())))?;
    let init = ModelParams::init(
        cfg.model_config(data.features.width(), data.features.n_classes()),
        cfg.seed,
    )?;
    let outcome = train(init, data, &cfg, exec)?;
    let test_acc = evaluate(
        &outcome.params,
        &data.graph,
        &data.features.x,
        labels,
        &data.features.mask(Split::Test),
        &cfg,
        exec,
    )?;
    create_out(&a.out)?;
    save_checkpoint(&outcome.params, &a.out.join("model.ckpt"))?;
    write_history(&outcome.history, &a.out.join("history.csv"))?;
    let summary = TrainSummary {
        n_params: outcome.params.n_params(),
        config: cfg,
        best_epoch: outcome.best_epoch,
        best_val_acc: outcome.best_val_acc,
        test_acc,
    };
    write_json(&a.out.join("train.json"), &summary)?;
    println!(
        "best_epoch={} val_acc={:.4} test_acc={:.4}",
        summary.best_epoch, summary.best_val_acc, summary.test_acc
    );
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs, exec: Exec) -> Result<()> {
    let base = a.train.resolve()?;
    let b = read_bundle(&a.bundle)?;
    create_out(&a.out)?;
    let path = a.out.join("experiment.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["arch", "layers", "hops", "seed", "best_epoch", "val_acc", "test_acc"])?;
    println!("arch,layers,hops,seed,best_epoch,val_acc,test_acc");
    for setting in sweep_settings(&a.archs, &a.hops, a.fixed_layers) {
        for &seed in &a.seeds {
            let (row, _) = run_setting(&b.dataset, &base, setting, seed, exec)?;
            let rec = [
                row.arch.to_string(),
                row.layers.to_string(),
                row.hops.to_string(),
                row.seed.to_string(),
                row.best_epoch.to_string(),
                format!("{:.6}", row.val_acc),
                format!("{:.6}", row.test_acc),
            ];
            println!("{}", rec.join(","));
            w.write_record(&rec)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

fn cmd_influence(a: &InfluenceArgs, exec: Exec) -> Result<()> {
    let b = read_bundle(&a.bundle)?;
    let params = load_checkpoint(&a.checkpoint)?;
    let profile = receptive_field(
        &params,
        &b.dataset.graph,
        &b.dataset.features.x,
        a.hops,
        a.samples,
        a.seed,
        exec,
    )?;
    create_out(&a.out)?;
    profile.write_csv(&a.out.join("influence.csv"))?;
    write_json(&a.out.join("influence.json"), &profile)?;
    println!(
        "R={:.6} sampled={} excluded={}",
        profile.r, profile.n_sampled, profile.n_excluded
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let threads = if cli.threads == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        cli.threads
    };
    lrgk::exec::configure_threads(threads);
    let exec = Exec::from_threads(threads);
    let manifest_dir = match &cli.command {
        Command::Generate(a) => {
            cmd_generate(a, exec)?;
            Some(a.out.clone())
        }
        Command::Ingest(a) => {
            cmd_ingest(a, exec)?;
            Some(a.out.clone())
        }
        Command::Label(a) => Some(cmd_label(a, exec)?),
        Command::Stats(a) => {
            cmd_stats(a, exec)?;
            Some(a.out.clone())
        }
        Command::Spectral(a) => {
            cmd_spectral(a, exec)?;
            a.out.clone()
        }
        Command::Train(a) => {
            cmd_train(a, exec)?;
            Some(a.out.clone())
        }
        Command::Experiment(a) => {
            cmd_experiment(a, exec)?;
            Some(a.out.clone())
        }
        Command::Influence(a) => {
            cmd_influence(a, exec)?;
            Some(a.out.clone())
        }
    };
    if let Some(dir) = manifest_dir {
        write_manifest(&dir, threads, &cli.command)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.ends_with(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            let is_input = e
                .chain()
                .find_map(|c| c.downcast_ref::<lrgk::Error>())
                .is_some_and(lrgk::Error::is_input);
            ExitCode::from(if is_input { 2 } else { 1 })
        }
    }
}
