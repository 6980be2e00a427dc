//! Degree, clustering, diameter and homophily statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{bfs_hops, Graph, NodeId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetStatsReport {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub avg_degree: f64,
    pub std_degree: f64,
    pub max_degree: usize,
    pub avg_clustering: f64,
    pub transitivity: f64,
    pub diameter_estimate: usize,
    pub node_homophily: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegreeStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub max: usize,
}

pub fn degree_stats(g: &Graph) -> DegreeStats {
    let n = g.n_nodes();
    if n == 0 {
        return DegreeStats {
            mean: 0.0,
            std: 0.0,
            max: 0,
        };
    }
    let mean = (0..n).map(|v| g.degree(v) as f64).sum::<f64>() / n as f64;
    let var = (0..n)
        .map(|v| (g.degree(v) as f64 - mean).powi(2))
        .sum::<f64>()
        / n as f64;
    DegreeStats {
        mean,
        std: var.sqrt(),
        max: g.max_degree(),
    }
}

/// Number of edges among the neighbors of each node.
pub fn triangles_per_node(g: &Graph, exec: Exec) -> Vec<usize> {
    exec.map_range_init(
        g.n_nodes(),
        || vec![false; g.n_nodes()],
        |mark, v| {
            let nbrs = g.neighbors(v);
            for &u in nbrs {
                mark[u] = true;
            }
            let mut t = 0;
            for &u in nbrs {
                t += g.neighbors(u).iter().filter(|&&w| w > u && mark[w]).count();
            }
            for &u in nbrs {
                mark[u] = false;
            }
            t
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Clustering {
    pub average: f64,
    pub transitivity: f64,
}

/// Average local clustering (degree < 2 counts as 0) and global transitivity.
pub fn clustering(g: &Graph, exec: Exec) -> Clustering {
    let n = g.n_nodes();
    let tri = triangles_per_node(g, exec);
    let mut local_sum = 0.0;
    let mut closed = 0usize;
    let mut triples = 0usize;
    for v in 0..n {
        let d = g.degree(v);
        let pairs = d * d.saturating_sub(1) / 2;
        triples += pairs;
        closed += tri[v];
        if pairs > 0 {
            local_sum += tri[v] as f64 / pairs as f64;
        }
    }
    Clustering {
        average: if n == 0 { 0.0 } else { local_sum / n as f64 },
        transitivity: if triples == 0 {
            0.0
        } else {
            closed as f64 / triples as f64
        },
    }
}

fn extremal(coords: &[(f64, f64)], key: impl Fn(&(f64, f64)) -> f64) -> (NodeId, NodeId) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, c) in coords.iter().enumerate() {
        if key(c) < key(&coords[lo]) {
            lo = i;
        }
        if key(c) > key(&coords[hi]) {
            hi = i;
        }
    }
    (lo, hi)
}

fn hop_distance(g: &Graph, a: NodeId, b: NodeId) -> Result<usize> {
    bfs_hops(g, a, usize::MAX)?[b]
        .ok_or_else(|| Error::input(format!("nodes {a} and {b} are not connected")))
}

fn farthest(g: &Graph, source: NodeId) -> Result<(NodeId, usize)> {
    let hops = bfs_hops(g, source, usize::MAX)?;
    let mut best = (source, 0);
    for (v, h) in hops.iter().enumerate() {
        if let Some(h) = *h {
            if h > best.1 {
                best = (v, h);
            }
        }
    }
    Ok(best)
}

/// Lower bound on the unweighted diameter.
///
/// With coordinates: the larger hop distance between the latitude-extremal
/// pair and the longitude-extremal pair (ties to the smallest id). Without:
/// a double BFS sweep starting from node 0.
pub fn diameter_estimate(g: &Graph) -> Result<usize> {
    if g.n_nodes() == 0 {
        return Err(Error::input("empty graph has no diameter"));
    }
    match g.coords() {
        Some(coords) => {
            let (v1, v2) = extremal(coords, |c| c.1);
            let (v3, v4) = extremal(coords, |c| c.0);
            Ok(hop_distance(g, v1, v2)?.max(hop_distance(g, v3, v4)?))
        }
        None => double_sweep(g),
    }
}

pub fn double_sweep(g: &Graph) -> Result<usize> {
    let (far, _) = farthest(g, 0)?;
    Ok(farthest(g, far)?.1)
}

/// Mean over nodes of the fraction of neighbors sharing the node's label.
/// Isolated nodes contribute 0.
pub fn node_homophily(g: &Graph, labels: &[usize]) -> Result<f64> {
    let n = g.n_nodes();
    if labels.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: labels.len(),
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = (0..n)
        .map(|v| {
            let nbrs = g.neighbors(v);
            if nbrs.is_empty() {
                0.0
            } else {
                let same = nbrs.iter().filter(|&&u| labels[u] == labels[v]).count();
                same as f64 / nbrs.len() as f64
            }
        })
        .sum();
    Ok(sum / n as f64)
}

pub fn report(g: &Graph, labels: Option<&[usize]>, exec: Exec) -> Result<NetStatsReport> {
    let deg = degree_stats(g);
    let cl = clustering(g, exec);
    Ok(NetStatsReport {
        n_nodes: g.n_nodes(),
        n_edges: g.n_edges(),
        avg_degree: deg.mean,
        std_degree: deg.std,
        max_degree: deg.max,
        avg_clustering: cl.average,
        transitivity: cl.transitivity,
        diameter_estimate: diameter_estimate(g)?,
        node_homophily: labels.map(|l| node_homophily(g, l)).transpose()?,
    })
}
