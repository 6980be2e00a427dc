//! MLP, SGC and GCN parameter sets and their forward passes.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sample::EgoBatch;
use super::tape::{Tape, Var};
use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Mlp,
    Sgc,
    Gcn,
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::Mlp => "mlp",
            Arch::Sgc => "sgc",
            Arch::Gcn => "gcn",
        })
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" => Ok(Arch::Mlp),
            "sgc" => Ok(Arch::Sgc),
            "gcn" => Ok(Arch::Gcn),
            other => Err(Error::input(format!("unknown architecture '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Arch,
    /// Message-passing depth (SGC: propagation steps; MLP: linear layers).
    pub layers: usize,
    pub hidden: usize,
    pub in_dim: usize,
    pub n_classes: usize,
    pub dropout: f64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::input("model needs at least one layer"));
        }
        if self.in_dim == 0 || self.n_classes == 0 || self.hidden == 0 {
            return Err(Error::input("input, hidden and class widths must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::input(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of each weight matrix.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        match self.arch {
            Arch::Sgc => vec![(self.in_dim, self.n_classes)],
            Arch::Mlp | Arch::Gcn => (0..self.layers)
                .map(|k| {
                    let fan_in = if k == 0 { self.in_dim } else { self.hidden };
                    let fan_out = if k + 1 == self.layers {
                        self.n_classes
                    } else {
                        self.hidden
                    };
                    (fan_in, fan_out)
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub weights: Vec<Array2<f64>>,
    /// `1 x fan_out` rows.
    pub biases: Vec<Array2<f64>>,
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (fan_in, fan_out) in config.layer_dims() {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(Array2::from_shape_fn((fan_in, fan_out), |_| {
                rng.gen_range(-a..a)
            }));
            biases.push(Array2::zeros((1, fan_out)));
        }
        Ok(ModelParams {
            config,
            weights,
            biases,
        })
    }

    pub fn from_parts(
        config: ModelConfig,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array2<f64>>,
    ) -> Result<Self> {
        config.validate()?;
        let dims = config.layer_dims();
        if weights.len() != dims.len() || biases.len() != dims.len() {
            return Err(Error::Dimension {
                expected: dims.len(),
                got: weights.len().min(biases.len()),
            });
        }
        for ((w, b), &(fi, fo)) in weights.iter().zip(&biases).zip(&dims) {
            if w.dim() != (fi, fo) {
                return Err(Error::Dimension {
                    expected: fi * fo,
                    got: w.len(),
                });
            }
            if b.dim() != (1, fo) {
                return Err(Error::Dimension {
                    expected: fo,
                    got: b.len(),
                });
            }
            if w.iter().chain(b.iter()).any(|v| !v.is_finite()) {
                return Err(Error::input("parameters must be finite"));
            }
        }
        Ok(ModelParams {
            config,
            weights,
            biases,
        })
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(|a| a.len()).sum()
    }

    /// Weights then biases, in layer order.
    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        self.weights.iter_mut().chain(self.biases.iter_mut()).collect()
    }

    pub fn tensors(&self) -> Vec<&Array2<f64>> {
        self.weights.iter().chain(self.biases.iter()).collect()
    }

    /// Batch rows whose features the forward pass reads.
    pub fn input_rows(&self, batch: &EgoBatch) -> usize {
        match self.config.arch {
            Arch::Mlp => batch.n_seeds(),
            Arch::Sgc | Arch::Gcn => batch.rows_within(self.config.layers),
        }
    }
}

/// A recorded forward pass.
#[derive(Debug)]
pub struct Forward {
    pub tape: Tape,
    /// `n_seeds x n_classes`.
    pub logits: Var,
    pub input: Var,
    pub weights: Vec<Var>,
    pub biases: Vec<Var>,
}

impl Forward {
    pub fn logits(&self) -> &Array2<f64> {
        self.tape.value(self.logits)
    }

    /// Parameter variables in the order of [`ModelParams::tensors_mut`].
    pub fn param_vars(&self) -> Vec<Var> {
        self.weights.iter().chain(&self.biases).copied().collect()
    }
}

#[derive(Debug, Default)]
pub struct ForwardOptions<'r> {
    /// Enables dropout on hidden activations.
    pub dropout_rng: Option<&'r mut ChaCha8Rng>,
    pub param_grads: bool,
    pub input_grads: bool,
}

impl ForwardOptions<'_> {
    pub fn eval() -> Self {
        ForwardOptions::default()
    }
}

fn dropout(
    tape: &mut Tape,
    h: Var,
    p: f64,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> Result<Var> {
    match rng {
        Some(rng) if p > 0.0 => {
            let keep = 1.0 / (1.0 - p);
            let dim = tape.value(h).dim();
            let mask = Array2::from_shape_fn(dim, |_| {
                if rng.gen::<f64>() < p {
                    0.0
                } else {
                    keep
                }
            });
            tape.mask(h, mask)
        }
        _ => Ok(h),
    }
}

/// Runs the model on `x`, the features of the first
/// [`ModelParams::input_rows`] rows of `batch`, producing seed logits.
pub fn forward(
    params: &ModelParams,
    batch: &EgoBatch,
    x: Array2<f64>,
    mut opts: ForwardOptions<'_>,
    exec: Exec,
) -> Result<Forward> {
    let cfg = &params.config;
    let rows = params.input_rows(batch);
    if x.nrows() != rows {
        return Err(Error::Dimension {
            expected: rows,
            got: x.nrows(),
        });
    }
    if x.ncols() != cfg.in_dim {
        return Err(Error::Dimension {
            expected: cfg.in_dim,
            got: x.ncols(),
        });
    }
    let mut tape = Tape::new(exec);
    let input = tape.leaf(x, opts.input_grads);
    let weights: Vec<Var> = params
        .weights
        .iter()
        .map(|w| tape.leaf(w.clone(), opts.param_grads))
        .collect();
    let biases: Vec<Var> = params
        .biases
        .iter()
        .map(|b| tape.leaf(b.clone(), opts.param_grads))
        .collect();
    let prop = batch.propagation();
    let l = cfg.layers;
    let logits = match cfg.arch {
        Arch::Gcn => {
            let mut h = input;
            for k in 1..=l {
                let hw = tape.matmul(h, weights[k - 1])?;
                let p = tape.propagate(hw, prop, batch.rows_within(l - k))?;
                h = tape.add_bias(p, biases[k - 1])?;
                if k < l {
                    h = tape.relu(h);
                    h = dropout(&mut tape, h, cfg.dropout, &mut opts.dropout_rng)?;
                }
            }
            h
        }
        Arch::Sgc => {
            let mut h = input;
            for k in 1..=l {
                h = tape.propagate(h, prop, batch.rows_within(l - k))?;
            }
            let hw = tape.matmul(h, weights[0])?;
            tape.add_bias(hw, biases[0])?
        }
        Arch::Mlp => {
            let mut h = input;
            for k in 1..=l {
                let hw = tape.matmul(h, weights[k - 1])?;
                h = tape.add_bias(hw, biases[k - 1])?;
                if k < l {
                    h = tape.relu(h);
                    h = dropout(&mut tape, h, cfg.dropout, &mut opts.dropout_rng)?;
                }
            }
            h
        }
    };
    Ok(Forward {
        tape,
        logits,
        input,
        weights,
        biases,
    })
}

/// Index of the largest entry of each row; ties go to the smallest index.
pub fn argmax_rows(z: &Array2<f64>) -> Vec<usize> {
    z.outer_iter()
        .map(|r| {
            let mut best = 0;
            for (i, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}
