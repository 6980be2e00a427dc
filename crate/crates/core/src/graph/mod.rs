//! Immutable undirected weighted graph in compressed-sparse-row layout.

mod io;
mod traverse;

pub use io::{read_graph_bin, write_graph_bin, GRAPH_MAGIC};
pub use traverse::{ball, bfs_hops, dijkstra_within, hop_shell, Ball, HopShell};
pub(crate) use traverse::{local_eccentricity, BfsScratch};

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Undirected graph with sorted CSR adjacency.
///
/// Every undirected edge `{u, v}` is stored twice (`u -> v` and `v -> u`) with
/// the same weight. Self-loops are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    weights: Vec<f64>,
    coords: Option<Vec<(f64, f64)>>,
}

impl Graph {
    /// Builds a graph from undirected edges `(u, v, w)`.
    ///
    /// Rejects out-of-range endpoints, self-loops, duplicated pairs and
    /// negative or non-finite weights.
    pub fn from_edges(
        n_nodes: usize,
        edges: &[(NodeId, NodeId, f64)],
        coords: Option<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        if let Some(c) = &coords {
            if c.len() != n_nodes {
                return Err(Error::Dimension {
                    expected: n_nodes,
                    got: c.len(),
                });
            }
        }
        let mut degree = vec![0usize; n_nodes];
        for &(u, v, w) in edges {
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::input(format!(
                    "edge ({u}, {v}) references a node outside 0..{n_nodes}"
                )));
            }
            if u == v {
                return Err(Error::input(format!("self-loop at node {u}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::input(format!(
                    "edge ({u}, {v}) has invalid weight {w}"
                )));
            }
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let nnz = *offsets.last().unwrap();
        let mut fill = offsets[..n_nodes].to_vec();
        let mut slots = vec![(0usize, 0.0f64); nnz];
        for &(u, v, w) in edges {
            slots[fill[u]] = (v, w);
            fill[u] += 1;
            slots[fill[v]] = (u, w);
            fill[v] += 1;
        }
        for v in 0..n_nodes {
            let row = &mut slots[offsets[v]..offsets[v + 1]];
            row.sort_by_key(|&(u, _)| u);
            if let Some(pair) = row.windows(2).find(|p| p[0].0 == p[1].0) {
                return Err(Error::input(format!(
                    "duplicate edge ({v}, {})",
                    pair[0].0
                )));
            }
        }
        let (neighbors, weights) = slots.into_iter().unzip();
        Ok(Graph {
            offsets,
            neighbors,
            weights,
            coords,
        })
    }

    /// Reassembles a graph from raw CSR arrays and re-checks every invariant.
    pub fn from_csr(
        offsets: Vec<usize>,
        neighbors: Vec<NodeId>,
        weights: Vec<f64>,
        coords: Option<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        if offsets.first() != Some(&0)
            || offsets.windows(2).any(|w| w[0] > w[1])
            || *offsets.last().unwrap() != neighbors.len()
            || neighbors.len() != weights.len()
        {
            return Err(Error::input("inconsistent CSR arrays"));
        }
        let n = offsets.len() - 1;
        let mut edges = Vec::with_capacity(neighbors.len() / 2);
        for u in 0..n {
            for k in offsets[u]..offsets[u + 1] {
                let v = neighbors[k];
                if v >= n {
                    return Err(Error::input(format!("neighbor {v} out of range")));
                }
                if u < v {
                    edges.push((u, v, weights[k]));
                }
            }
        }
        let g = Graph::from_edges(n, &edges, coords)?;
        if g.neighbors != neighbors || g.weights != weights {
            return Err(Error::input("CSR adjacency is not symmetric and sorted"));
        }
        Ok(g)
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Undirected edges, each counted once.
    pub fn n_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n_nodes()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn neighbor_weights(&self, v: NodeId) -> &[f64] {
        &self.weights[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn edge_weight(&self, u: NodeId, v: NodeId) -> Option<f64> {
        let row = self.neighbors(u);
        row.binary_search(&v)
            .ok()
            .map(|k| self.neighbor_weights(u)[k])
    }

    /// Undirected edges `(u, v, w)` with `u < v`, in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        (0..self.n_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .zip(self.neighbor_weights(u))
                .filter(move |(&v, _)| u < v)
                .map(move |(&v, &w)| (u, v, w))
        })
    }

    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn raw_neighbors(&self) -> &[NodeId] {
        &self.neighbors
    }

    pub fn raw_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v < self.n_nodes() {
            Ok(())
        } else {
            Err(Error::input(format!(
                "node {v} out of range for graph with {} nodes",
                self.n_nodes()
            )))
        }
    }

    /// Component id per node, components numbered in order of their smallest node.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.n_nodes();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (count, comp)
    }

    pub fn is_connected(&self) -> bool {
        self.n_nodes() > 0 && self.components().0 == 1
    }

    /// Subgraph induced by `keep` (ascending order preserved), plus the
    /// new-to-old id map.
    pub fn induced_subgraph(&self, keep: &[NodeId]) -> Result<(Graph, Vec<NodeId>)> {
        let mut new_id = vec![usize::MAX; self.n_nodes()];
        let mut order = keep.to_vec();
        order.sort_unstable();
        order.dedup();
        for (i, &v) in order.iter().enumerate() {
            self.check_node(v)?;
            new_id[v] = i;
        }
        let edges: Vec<_> = self
            .edges()
            .filter(|&(u, v, _)| new_id[u] != usize::MAX && new_id[v] != usize::MAX)
            .map(|(u, v, w)| (new_id[u], new_id[v], w))
            .collect();
        let coords = self
            .coords
            .as_ref()
            .map(|c| order.iter().map(|&v| c[v]).collect());
        Ok((Graph::from_edges(order.len(), &edges, coords)?, order))
    }

    /// Largest connected component (ties go to the component holding the
    /// smallest node id) with dense ids, plus the new-to-old id map.
    pub fn largest_component(&self) -> Result<(Graph, Vec<NodeId>)> {
        let (count, comp) = self.components();
        let mut sizes = vec![0usize; count];
        for &c in &comp {
            sizes[c] += 1;
        }
        let best = (0..count)
            .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
            .ok_or_else(|| Error::input("graph has no nodes"))?;
        let keep: Vec<_> = (0..self.n_nodes()).filter(|&v| comp[v] == best).collect();
        self.induced_subgraph(&keep)
    }

    /// Copy with node ids permuted: node `v` becomes `perm[v]`.
    pub fn relabel(&self, perm: &[NodeId]) -> Result<Graph> {
        let n = self.n_nodes();
        if perm.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: perm.len(),
            });
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::input("relabeling is not a permutation"));
            }
        }
        let edges: Vec<_> = self.edges().map(|(u, v, w)| (perm[u], perm[v], w)).collect();
        let coords = self.coords.as_ref().map(|c| {
            let mut out = vec![(0.0, 0.0); n];
            for (v, &p) in perm.iter().enumerate() {
                out[p] = c[v];
            }
            out
        });
        Graph::from_edges(n, &edges, coords)
    }

    pub fn with_coords(mut self, coords: Option<Vec<(f64, f64)>>) -> Result<Self> {
        if let Some(c) = &coords {
            if c.len() != self.n_nodes() {
                return Err(Error::Dimension {
                    expected: self.n_nodes(),
                    got: c.len(),
                });
            }
        }
        self.coords = coords;
        Ok(self)
    }
}

/// Small named graphs used throughout the tests and examples.
pub mod named {
    use super::{Graph, NodeId};

    pub fn path(n: usize) -> Graph {
        weighted_path(&vec![1.0; n.saturating_sub(1)])
    }

    pub fn weighted_path(weights: &[f64]) -> Graph {
        let edges: Vec<_> = weights.iter().enumerate().map(|(i, &w)| (i, i + 1, w)).collect();
        Graph::from_edges(weights.len() + 1, &edges, None).expect("valid path")
    }

    /// Cycle `0-1-...-(n-1)-0`; `weights[i]` belongs to edge `(i, i+1 mod n)`.
    pub fn weighted_cycle(weights: &[f64]) -> Graph {
        let n = weights.len();
        let edges: Vec<_> = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (i, (i + 1) % n, w))
            .collect();
        Graph::from_edges(n, &edges, None).expect("valid cycle")
    }

    pub fn cycle(n: usize) -> Graph {
        weighted_cycle(&vec![1.0; n])
    }

    /// Star with `n` nodes: node 0 is the hub.
    pub fn star(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (0, i, 1.0)).collect();
        Graph::from_edges(n, &edges, None).expect("valid star")
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v, 1.0));
            }
        }
        Graph::from_edges(n, &edges, None).expect("valid clique")
    }

    /// `width x height` lattice, node `(x, y)` has id `y * width + x` and
    /// coordinates `(x, y)`.
    pub fn grid(width: usize, height: usize) -> Graph {
        let id = |x: usize, y: usize| -> NodeId { y * width + x };
        let mut edges = Vec::new();
        for y in 0..height {
            for x in 0..width {
                if x + 1 < width {
                    edges.push((id(x, y), id(x + 1, y), 1.0));
                }
                if y + 1 < height {
                    edges.push((id(x, y), id(x, y + 1), 1.0));
                }
            }
        }
        let coords = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x as f64, y as f64)))
            .collect();
        Graph::from_edges(width * height, &edges, Some(coords)).expect("valid grid")
    }

    pub fn grid_center(width: usize, height: usize) -> NodeId {
        (height / 2) * width + width / 2
    }
}
