//! Jacobian influence scores, per-hop totals, the influence-weighted
//! receptive field, and the dilution and cancellation experiments.

use std::path::Path;

use ndarray::Array2;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gnn::{forward, sample_ego, ForwardOptions, ModelParams, Tape};
use crate::graph::named::{grid, path};
use crate::graph::{hop_shell, Graph, NodeId};

/// `I(v, u)` for every `u` in the hop ball around `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeInfluence {
    pub node: NodeId,
    pub nodes: Vec<NodeId>,
    pub hops: Vec<usize>,
    pub scores: Vec<f64>,
}

impl NodeInfluence {
    pub fn score_of(&self, u: NodeId) -> f64 {
        self.nodes
            .iter()
            .position(|&w| w == u)
            .map_or(0.0, |i| self.scores[i])
    }

    /// `T_h(v)` for `h = 0..=hop_bound`.
    pub fn shell_totals(&self, hop_bound: usize) -> Vec<f64> {
        let mut t = vec![0.0; hop_bound + 1];
        for (&h, &s) in self.hops.iter().zip(&self.scores) {
            t[h] += s;
        }
        t
    }
}

/// Per-node Jacobian of the seed logits with respect to input features.
///
/// Returns, for each class `i`, a matrix `J_i[u][j] = ∂z_{v,i} / ∂x_{u,j}`
/// over the rows of the ego ball (rows the model never reads are zero).
pub fn seed_jacobian(
    params: &ModelParams,
    g: &Graph,
    x: &Array2<f64>,
    v: NodeId,
    hops: usize,
) -> Result<(Vec<NodeId>, Vec<usize>, Vec<Array2<f64>>)> {
    let batch = sample_ego(g, &[v], hops, None, 0, Exec::Sequential)?;
    let rows = params.input_rows(&batch);
    let input = batch.gather(x, rows);
    let opts = ForwardOptions {
        dropout_rng: None,
        param_grads: false,
        input_grads: true,
    };
    let fwd = forward(params, &batch, input, opts, Exec::Sequential)?;
    let c = fwd.logits().ncols();
    let tape: &Tape = &fwd.tape;
    let mut jac = Vec::with_capacity(c);
    for i in 0..c {
        let mut seed = Array2::zeros((1, c));
        seed[[0, i]] = 1.0;
        let grads = tape.backward_retain(fwd.logits, seed)?;
        let mut full = Array2::zeros((batch.len(), x.ncols()));
        if let Some(gx) = grads.get(fwd.input) {
            full.slice_mut(ndarray::s![..rows, ..]).assign(gx);
        }
        jac.push(full);
    }
    Ok((batch.nodes, batch.hops, jac))
}

/// `I(v, u) = Σ_i Σ_j |∂z_{v,i} / ∂x_{u,j}|` over the `hops`-ball of `v`.
pub fn influence_pair(
    params: &ModelParams,
    g: &Graph,
    x: &Array2<f64>,
    v: NodeId,
    hops: usize,
) -> Result<NodeInfluence> {
    let (nodes, hop, jac) = seed_jacobian(params, g, x, v, hops)?;
    let mut scores = vec![0.0; nodes.len()];
    for j in &jac {
        for (s, row) in scores.iter_mut().zip(j.outer_iter()) {
            *s += row.iter().map(|d| d.abs()).sum::<f64>();
        }
    }
    Ok(NodeInfluence {
        node: v,
        nodes,
        hops: hop,
        scores,
    })
}

/// `T_h(v)` for `h = 0..=hops`.
pub fn total_influence(
    params: &ModelParams,
    g: &Graph,
    x: &Array2<f64>,
    v: NodeId,
    hops: usize,
) -> Result<Vec<f64>> {
    Ok(influence_pair(params, g, x, v, hops)?.shell_totals(hops))
}

/// `Σ h·T_h / Σ T_h`, or `None` when all totals are zero.
pub fn receptive_field_of(totals: &[f64]) -> Option<f64> {
    let sum: f64 = totals.iter().sum();
    if sum > 0.0 {
        Some(
            totals
                .iter()
                .enumerate()
                .map(|(h, t)| h as f64 * t)
                .sum::<f64>()
                / sum,
        )
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceProfile {
    pub h_max: usize,
    /// Mean of `T_h(v)` over the sampled nodes.
    pub t_bar: Vec<f64>,
    /// `t_bar[h] / t_bar[0]` (all zero when `t_bar[0] = 0`).
    pub t_bar_normalized: Vec<f64>,
    /// Mean of the per-node receptive fields over non-excluded nodes.
    pub r: f64,
    pub n_sampled: usize,
    /// Sampled nodes with zero total influence, left out of `r`.
    pub n_excluded: usize,
    pub seed: u64,
}

impl InfluenceProfile {
    /// Aggregates per-node shell totals in the given order.
    pub fn from_totals(totals: &[Vec<f64>], h_max: usize, seed: u64) -> Result<Self> {
        if totals.is_empty() {
            return Err(Error::input("no sampled nodes"));
        }
        let n = totals.len() as f64;
        let mut t_bar = vec![0.0; h_max + 1];
        let mut r_sum = 0.0;
        let mut included = 0usize;
        for t in totals {
            if t.len() != h_max + 1 {
                return Err(Error::Dimension {
                    expected: h_max + 1,
                    got: t.len(),
                });
            }
            for (acc, v) in t_bar.iter_mut().zip(t) {
                *acc += v;
            }
            if let Some(r) = receptive_field_of(t) {
                r_sum += r;
                included += 1;
            }
        }
        t_bar.iter_mut().for_each(|v| *v /= n);
        let t_bar_normalized = if t_bar[0] > 0.0 {
            t_bar.iter().map(|v| v / t_bar[0]).collect()
        } else {
            vec![0.0; h_max + 1]
        };
        Ok(InfluenceProfile {
            h_max,
            t_bar,
            t_bar_normalized,
            r: if included > 0 {
                r_sum / included as f64
            } else {
                0.0
            },
            n_sampled: totals.len(),
            n_excluded: totals.len() - included,
            seed,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let fail = |e: csv::Error| Error::input(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(fail)?;
        w.write_record(["h", "T_bar", "T_bar_normalized"]).map_err(fail)?;
        for h in 0..=self.h_max {
            w.write_record([
                h.to_string(),
                format!("{:e}", self.t_bar[h]),
                format!("{:e}", self.t_bar_normalized[h]),
            ])
            .map_err(fail)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Nodes drawn uniformly without replacement, ascending.
pub fn sample_nodes(n: usize, n_samples: usize, seed: u64) -> Vec<NodeId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, n, n_samples.min(n)).into_vec();
    picked.sort_unstable();
    picked
}

/// Influence profile averaged over a uniform sample of nodes.
pub fn receptive_field(
    params: &ModelParams,
    g: &Graph,
    x: &Array2<f64>,
    hops: usize,
    n_samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<InfluenceProfile> {
    if n_samples == 0 {
        return Err(Error::input("need at least one sampled node"));
    }
    if hops == 0 {
        return Err(Error::input("hop bound must be at least 1"));
    }
    let nodes = sample_nodes(g.n_nodes(), n_samples, seed);
    let totals: Vec<Result<Vec<f64>>> =
        exec.map(&nodes, |&v| total_influence(params, g, x, v, hops));
    let totals: Vec<Vec<f64>> = totals.into_iter().collect::<Result<_>>()?;
    InfluenceProfile::from_totals(&totals, hops, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilutionRow {
    pub h: usize,
    pub shell_size: usize,
    /// Nodes within `h` hops, center included.
    pub ball_size: usize,
    pub i_sum: f64,
    pub i_mean: f64,
    pub i_mean_times_h: f64,
    pub ball_mean: f64,
    /// Average total influence over the probed centers.
    pub t_bar: f64,
}

/// Influence field with a single node of influence `I* = 1` in the shell at
/// distance `h` from the lattice center and zero elsewhere, aggregated by
/// sum, shell mean and ball mean.
pub fn dilution_experiment(dims: usize, width: usize, h_range: &[usize]) -> Result<Vec<DilutionRow>> {
    let (g, center, coord): (Graph, NodeId, Box<dyn Fn(NodeId) -> Vec<usize>>) = match dims {
        1 => (path(width), width / 2, Box::new(|v| vec![v])),
        2 => (
            grid(width, width),
            (width / 2) * width + width / 2,
            Box::new(move |v| vec![v % width, v / width]),
        ),
        d => return Err(Error::input(format!("lattice dimension {d} not supported (1 or 2)"))),
    };
    let c = coord(center);
    let mut rows = Vec::with_capacity(h_range.len());
    for &h in h_range {
        if h == 0 {
            return Err(Error::domain("shell distance must be at least 1"));
        }
        if c.iter().any(|&x| x < h || x + h >= width) {
            return Err(Error::domain(format!(
                "shell at distance {h} is cut by the lattice boundary (width {width})"
            )));
        }
        let shell = hop_shell(&g, center, h)?;
        let ball_size: usize = (0..=h)
            .map(|r| hop_shell(&g, center, r).map(|s| s.members.len()))
            .sum::<Result<usize>>()?;
        let distinguished = shell.members[0];
        let field = |u: NodeId| if u == distinguished { 1.0 } else { 0.0 };
        let i_sum: f64 = shell.members.iter().map(|&u| field(u)).sum();
        let i_mean = i_sum / shell.members.len() as f64;
        rows.push(DilutionRow {
            h,
            shell_size: shell.members.len(),
            ball_size,
            i_sum,
            i_mean,
            i_mean_times_h: i_mean * h as f64,
            ball_mean: i_sum / ball_size as f64,
            t_bar: i_sum,
        });
    }
    Ok(rows)
}

/// Differentiable scalar functions for the cancellation demonstration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScalarFn {
    Identity,
    Square,
    Cube,
    Constant(f64),
}

impl ScalarFn {
    fn build(self, tape: &mut Tape, x: crate::gnn::Var) -> Result<crate::gnn::Var> {
        match self {
            ScalarFn::Identity => Ok(tape.scale(x, 1.0)),
            ScalarFn::Square => tape.mul(x, x),
            ScalarFn::Cube => {
                let sq = tape.mul(x, x)?;
                tape.mul(sq, x)
            }
            ScalarFn::Constant(c) => {
                let zero = tape.scale(x, 0.0);
                let k = tape.leaf(Array2::from_elem((1, 1), c), false);
                tape.add(zero, k)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cancellation {
    /// `d/dx [f(x) + (−f(x))]`.
    pub net_derivative: f64,
    /// `|d/dx f(x)| + |d/dx (−f(x))|`.
    pub abs_sum: f64,
}

/// Two paths whose contributions cancel exactly: the net derivative is zero
/// while the sum of absolute path derivatives is `2|f'(x)|`.
pub fn cancellation_demo(f: ScalarFn, x0: f64) -> Result<Cancellation> {
    let mut tape = Tape::new(Exec::Sequential);
    let x = tape.leaf(Array2::from_elem((1, 1), x0), true);
    let a = f.build(&mut tape, x)?;
    let fb = f.build(&mut tape, x)?;
    let b = tape.scale(fb, -1.0);
    let k = tape.add(a, b)?;
    let one = || Array2::from_elem((1, 1), 1.0);
    let d = |gr: crate::gnn::Gradients| gr.get(x).map_or(0.0, |g| g[[0, 0]]);
    let da = d(tape.backward_retain(a, one())?);
    let db = d(tape.backward_retain(b, one())?);
    let net = d(tape.backward(k, one())?);
    Ok(Cancellation {
        net_derivative: net,
        abs_sum: da.abs() + db.abs(),
    })
}
