//! Accuracy sweeps over (architecture, layers, hops) settings.

use serde::{Deserialize, Serialize};

use super::model::{Arch, ModelParams};
use super::train::{evaluate, train, TrainConfig, TrainOutcome};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ingest::{Dataset, Split};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Setting {
    pub arch: Arch,
    pub layers: usize,
    pub hops: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub arch: Arch,
    pub layers: usize,
    pub hops: usize,
    pub seed: u64,
    pub best_epoch: usize,
    pub val_acc: f64,
    pub test_acc: f64,
}

/// `L = H` for every `h`, then `L = fixed_layers` for every `h`, for each architecture.
pub fn sweep_settings(archs: &[Arch], hops: &[usize], fixed_layers: Option<usize>) -> Vec<Setting> {
    let mut out = Vec::new();
    for &arch in archs {
        for &h in hops {
            out.push(Setting {
                arch,
                layers: h,
                hops: h,
            });
        }
        if let Some(l) = fixed_layers {
            for &h in hops {
                if h != l {
                    out.push(Setting {
                        arch,
                        layers: l,
                        hops: h,
                    });
                }
            }
        }
    }
    out
}

/// Trains one setting from a fresh initialization and scores the selected
/// parameters on the test split.
pub fn run_setting(
    data: &Dataset,
    base: &TrainConfig,
    setting: Setting,
    seed: u64,
    exec: Exec,
) -> Result<(ExperimentRow, TrainOutcome)> {
    let cfg = TrainConfig {
        arch: setting.arch,
        layers: setting.layers,
        hops: setting.hops,
        seed,
        ..base.clone()
    };
    let labels = data
        .features
        .labels
        .as_deref()
        .ok_or_else(|| Error::input("dataset has no labels"))?;
    let n_classes = data.features.n_classes();
    let init = ModelParams::init(cfg.model_config(data.features.width(), n_classes), seed)?;
    let outcome = train(init, data, &cfg, exec)?;
    let test_nodes = data.features.mask(Split::Test);
    let test_acc = evaluate(
        &outcome.params,
        &data.graph,
        &data.features.x,
        labels,
        &test_nodes,
        &cfg,
        exec,
    )?;
    Ok((
        ExperimentRow {
            arch: setting.arch,
            layers: setting.layers,
            hops: setting.hops,
            seed,
            best_epoch: outcome.best_epoch,
            val_acc: outcome.best_val_acc,
            test_acc,
        },
        outcome,
    ))
}
