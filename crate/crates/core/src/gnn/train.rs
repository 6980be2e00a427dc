//! Mini-batch training on ego-networks with best-validation model selection.

use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{argmax_rows, forward, Arch, ForwardOptions, ModelConfig, ModelParams};
use super::optim::AdamW;
use super::sample::{sample_blocks, EgoBatch, EgoBlock};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{Graph, NodeId};
use crate::ingest::{Dataset, Split};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub arch: Arch,
    pub layers: usize,
    pub hops: usize,
    pub hidden: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub record_window: usize,
    pub seed: u64,
    /// Seed nodes per mini-batch.
    pub batch_size: usize,
    /// Newly discovered nodes kept per hop; `None` keeps whole balls.
    pub cap_per_hop: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            arch: Arch::Gcn,
            layers: 16,
            hops: 16,
            hidden: 32,
            lr: 1e-3,
            weight_decay: 1e-5,
            dropout: 0.2,
            epochs: 20_000,
            record_window: 100,
            seed: 0,
            batch_size: 20_000,
            cap_per_hop: None,
        }
    }
}

impl TrainConfig {
    pub fn model_config(&self, in_dim: usize, n_classes: usize) -> ModelConfig {
        ModelConfig {
            arch: self.arch,
            layers: self.layers,
            hidden: self.hidden,
            in_dim,
            n_classes,
            dropout: self.dropout,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hops == 0 || self.layers == 0 {
            return Err(Error::input("layers and hops must be at least 1"));
        }
        if self.epochs == 0 || self.record_window == 0 || self.batch_size == 0 {
            return Err(Error::input(
                "epochs, record_window and batch_size must be positive",
            ));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) || !(self.weight_decay >= 0.0) {
            return Err(Error::input("lr and weight_decay must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the best validation epoch (earliest on ties).
    pub params: ModelParams,
    pub history: Vec<HistoryRow>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
}

fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn labels_of(data: &Dataset) -> Result<&[usize]> {
    data.features
        .labels
        .as_deref()
        .ok_or_else(|| Error::input("dataset has no labels"))
}

fn check_data(params: &ModelParams, data: &Dataset) -> Result<()> {
    let f = &data.features;
    if f.n_nodes() != data.graph.n_nodes() {
        return Err(Error::Dimension {
            expected: data.graph.n_nodes(),
            got: f.n_nodes(),
        });
    }
    if f.width() != params.config.in_dim {
        return Err(Error::Dimension {
            expected: params.config.in_dim,
            got: f.width(),
        });
    }
    let labels = labels_of(data)?;
    if let Some(&c) = labels.iter().find(|&&c| c >= params.config.n_classes) {
        return Err(Error::input(format!(
            "label {c} out of range for {} classes",
            params.config.n_classes
        )));
    }
    Ok(())
}

/// Parameter gradients for one mini-batch, and its mean loss.
fn batch_gradients(
    params: &ModelParams,
    batch: &EgoBatch,
    x: &Array2<f64>,
    labels: &[usize],
    rng: &mut ChaCha8Rng,
    exec: Exec,
) -> Result<(f64, Vec<Array2<f64>>)> {
    let input = batch.gather(x, params.input_rows(batch));
    let opts = ForwardOptions {
        dropout_rng: Some(rng),
        param_grads: true,
        input_grads: false,
    };
    let mut fwd = forward(params, batch, input, opts, exec)?;
    let targets: Vec<usize> = batch.seeds.iter().map(|&s| labels[s]).collect();
    let loss = fwd.tape.softmax_cross_entropy(fwd.logits, &targets)?;
    let value = fwd.tape.value(loss)[[0, 0]];
    let vars = fwd.param_vars();
    let mut grads = fwd.tape.backward(loss, Array2::ones((1, 1)))?;
    let out = vars
        .iter()
        .zip(params.tensors())
        .map(|(&v, t)| grads.take(v).unwrap_or_else(|| Array2::zeros(t.dim())))
        .collect();
    Ok((value, out))
}

/// Runs the configured number of epochs and returns the best-validation parameters.
pub fn train(
    init: ModelParams,
    data: &Dataset,
    cfg: &TrainConfig,
    exec: Exec,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_data(&init, data)?;
    let labels = labels_of(data)?;
    let train_nodes = data.features.mask(Split::Train);
    let val_nodes = data.features.mask(Split::Val);
    if train_nodes.is_empty() || val_nodes.is_empty() {
        return Err(Error::input("train and validation splits must be non-empty"));
    }
    let g = &data.graph;
    let x = &data.features.x;
    let cached = match cfg.cap_per_hop {
        None => Some(sample_blocks(g, &train_nodes, cfg.hops, None, cfg.seed, exec)?),
        Some(_) => None,
    };
    let mut params = init;
    let mut opt = AdamW::new(&params, cfg.lr, cfg.weight_decay);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, ModelParams)> = None;
    let mut order: Vec<usize> = (0..train_nodes.len()).collect();
    for epoch in 1..=cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, epoch as u64));
        order.shuffle(&mut rng);
        let resampled;
        let blocks: &[EgoBlock] = match &cached {
            Some(b) => b,
            None => {
                let seeds: Vec<NodeId> = train_nodes.clone();
                resampled = sample_blocks(
                    g,
                    &seeds,
                    cfg.hops,
                    cfg.cap_per_hop,
                    mix(cfg.seed, epoch as u64),
                    exec,
                )?;
                &resampled
            }
        };
        let mut loss_sum = 0.0;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let refs: Vec<&EgoBlock> = chunk.iter().map(|&i| &blocks[i]).collect();
            let batch = EgoBatch::from_blocks(&refs, cfg.hops)?;
            let (loss, grads) = batch_gradients(&params, &batch, x, labels, &mut rng, exec)?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "loss {loss} at epoch {epoch}, batch {bi}"
                )));
            }
            loss_sum += loss * chunk.len() as f64;
            opt.step(&mut params, &grads)?;
        }
        let train_loss = loss_sum / train_nodes.len() as f64;
        let val_acc = if epoch % cfg.record_window == 0 || epoch == cfg.epochs {
            let acc = evaluate(&params, g, x, labels, &val_nodes, cfg, exec)?;
            if best.as_ref().is_none_or(|b| acc > b.1) {
                best = Some((epoch, acc, params.clone()));
            }
            Some(acc)
        } else {
            None
        };
        history.push(HistoryRow {
            epoch,
            train_loss,
            val_acc,
        });
    }
    let (best_epoch, best_val_acc, params) = best.expect("final epoch is always recorded");
    Ok(TrainOutcome {
        params,
        history,
        best_epoch,
        best_val_acc,
    })
}

/// Argmax predictions for `nodes`, computed on ego-networks with the
/// sampler settings of `cfg`.
pub fn predict(
    params: &ModelParams,
    g: &Graph,
    x: &Array2<f64>,
    nodes: &[NodeId],
    cfg: &TrainConfig,
    exec: Exec,
) -> Result<Vec<usize>> {
    if x.ncols() != params.config.in_dim {
        return Err(Error::Dimension {
            expected: params.config.in_dim,
            got: x.ncols(),
        });
    }
    let mut out = Vec::with_capacity(nodes.len());
    for chunk in nodes.chunks(cfg.batch_size.max(1)) {
        let blocks = sample_blocks(g, chunk, cfg.hops, cfg.cap_per_hop, cfg.seed, exec)?;
        let refs: Vec<&EgoBlock> = blocks.iter().collect();
        let batch = EgoBatch::from_blocks(&refs, cfg.hops)?;
        let input = batch.gather(x, params.input_rows(&batch));
        let fwd = forward(params, &batch, input, ForwardOptions::eval(), exec)?;
        out.extend(argmax_rows(fwd.logits()));
    }
    Ok(out)
}

/// Fraction of `nodes` whose predicted class equals the label.
pub fn evaluate(
    params: &ModelParams,
    g: &Graph,
    x: &Array2<f64>,
    labels: &[usize],
    nodes: &[NodeId],
    cfg: &TrainConfig,
    exec: Exec,
) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::input("cannot evaluate on an empty node set"));
    }
    let pred = predict(params, g, x, nodes, cfg, exec)?;
    Ok(accuracy(&pred, nodes.iter().map(|&v| labels[v])))
}

pub fn accuracy(pred: &[usize], truth: impl IntoIterator<Item = usize>) -> f64 {
    let mut hit = 0;
    let mut n = 0;
    for (p, t) in pred.iter().zip(truth) {
        n += 1;
        if *p == t {
            hit += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        hit as f64 / n as f64
    }
}

pub fn write_history(history: &[HistoryRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::input(e.to_string()))?;
    let fail = |e: csv::Error| Error::input(format!("{}: {e}", path.display()));
    w.write_record(["epoch", "train_loss", "val_acc"]).map_err(fail)?;
    for r in history {
        w.write_record([
            r.epoch.to_string(),
            format!("{:.10}", r.train_loss),
            r.val_acc.map(|a| format!("{a:.6}")).unwrap_or_default(),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named::*;
    use crate::ingest::FeatureTable;

    fn separable() -> Dataset {
        let g = path(40);
        let x = Array2::from_shape_fn((40, 2), |(v, j)| {
            let s = if v < 20 { -1.0 } else { 1.0 };
            if j == 0 {
                s * (1.0 + (v % 7) as f64 * 0.1)
            } else {
                (v % 5) as f64 * 0.2
            }
        });
        let labels = (0..40).map(|v| usize::from(v >= 20)).collect();
        let split = (0..40)
            .map(|v| if v % 4 == 1 { Split::Val } else { Split::Train })
            .collect();
        Dataset {
            graph: g,
            features: FeatureTable {
                x,
                feature_names: vec!["a".into(), "b".into()],
                labels: Some(labels),
                split: Some(split),
            },
        }
    }

    fn mlp_cfg() -> TrainConfig {
        TrainConfig {
            arch: Arch::Mlp,
            layers: 2,
            hops: 1,
            hidden: 8,
            lr: 1e-2,
            epochs: 500,
            record_window: 50,
            batch_size: 16,
            dropout: 0.0,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn separable_toy_is_learned() {
        let data = separable();
        let cfg = mlp_cfg();
        let init = ModelParams::init(cfg.model_config(2, 2), 0).unwrap();
        let out = train(init, &data, &cfg, Exec::Sequential).unwrap();
        let train_nodes = data.features.mask(Split::Train);
        let labels = data.features.labels.as_ref().unwrap();
        let acc = evaluate(&out.params, &data.graph, &data.features.x, labels, &train_nodes, &cfg, Exec::Sequential).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(out.history.len(), 500);
        assert_eq!(out.history.iter().filter(|r| r.val_acc.is_some()).count(), 10);
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable();
        let cfg = TrainConfig {
            arch: Arch::Gcn,
            epochs: 20,
            record_window: 5,
            dropout: 0.2,
            ..mlp_cfg()
        };
        let run = || {
            let init = ModelParams::init(cfg.model_config(2, 2), 4).unwrap();
            train(init, &data, &cfg, Exec::Parallel).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn zero_lr_keeps_parameters() {
        let data = separable();
        let cfg = TrainConfig {
            lr: 0.0,
            weight_decay: 0.0,
            epochs: 5,
            dropout: 0.2,
            ..mlp_cfg()
        };
        let init = ModelParams::init(cfg.model_config(2, 2), 0).unwrap();
        let out = train(init.clone(), &data, &cfg, Exec::Sequential).unwrap();
        assert_eq!(out.params, init);
    }

    #[test]
    fn accuracy_edges() {
        assert_eq!(accuracy(&[1, 2, 3], [1, 2, 3]), 1.0);
        let labels: Vec<usize> = (0..100).map(|v| v % 10).collect();
        assert_eq!(accuracy(&[0; 100], labels), 0.1);
    }
}
