//! Hop-bounded eccentricity estimates and quantile class labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{local_eccentricity, BfsScratch, Graph, NodeId};

pub const DEFAULT_HOPS: usize = 16;
pub const DEFAULT_QUANTILES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EccentricityResult {
    /// Meters (or whatever unit the edge weights carry).
    pub epsilon_hat: Vec<f64>,
    pub hop_bound: usize,
    pub labels: Vec<usize>,
}

fn ego_eccentricity(scratch: &mut BfsScratch, g: &Graph, v: NodeId, hops: usize) -> f64 {
    let ball = scratch.ball(g, v, hops);
    let csr = scratch.local_csr(g, &ball);
    local_eccentricity(&csr.offsets, &csr.targets, &csr.weights)
}

/// Largest weighted distance from `v` to any node within `hops` hops, with
/// paths confined to the subgraph induced by that ball.
pub fn eccentricity_hat(g: &Graph, v: NodeId, hops: usize) -> Result<f64> {
    g.check_node(v)?;
    if hops == 0 {
        return Err(Error::input("hop bound must be at least 1"));
    }
    Ok(ego_eccentricity(&mut BfsScratch::new(g.n_nodes()), g, v, hops))
}

pub fn eccentricities(g: &Graph, hops: usize, exec: Exec) -> Result<Vec<f64>> {
    if hops == 0 {
        return Err(Error::input("hop bound must be at least 1"));
    }
    Ok(exec.map_range_init(
        g.n_nodes(),
        || BfsScratch::new(g.n_nodes()),
        |scratch, v| ego_eccentricity(scratch, g, v, hops),
    ))
}

/// Rank-based quantile labels: nodes sorted by `(value, id)`, rank `r`
/// gets class `floor(r * q / n)`.
pub fn quantile_labels(values: &[f64], q: usize) -> Result<Vec<usize>> {
    if q < 2 {
        return Err(Error::input(format!("need at least 2 quantiles, got {q}")));
    }
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut labels = vec![0; n];
    for (rank, &v) in order.iter().enumerate() {
        labels[v] = rank * q / n;
    }
    Ok(labels)
}

pub fn label_all(g: &Graph, hops: usize, q: usize, exec: Exec) -> Result<EccentricityResult> {
    let epsilon_hat = eccentricities(g, hops, exec)?;
    let labels = quantile_labels(&epsilon_hat, q)?;
    Ok(EccentricityResult {
        epsilon_hat,
        hop_bound: hops,
        labels,
    })
}

/// Computes labels for a dataset and stores them in its feature table.
pub fn label_dataset(
    data: &mut crate::ingest::Dataset,
    hops: usize,
    q: usize,
    exec: Exec,
) -> Result<EccentricityResult> {
    let res = label_all(&data.graph, hops, q, exec)?;
    data.features.labels = Some(res.labels.clone());
    Ok(res)
}
