use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use super::{Graph, NodeId};
use crate::error::{Error, Result};

/// Nodes at unweighted distance exactly `h` from `center`, ascending by id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HopShell {
    pub center: NodeId,
    pub h: usize,
    pub members: Vec<NodeId>,
}

/// Hop-bounded BFS ball around a source.
///
/// `nodes` is in BFS discovery order (neighbors visited in ascending id), so
/// the nodes with hop `<= r` are exactly the prefix `nodes[..prefix[r]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ball {
    pub source: NodeId,
    pub nodes: Vec<NodeId>,
    pub hops: Vec<usize>,
    /// `prefix[r]` = number of nodes with hop `<= r`, for `r` in `0..=max hop`.
    pub prefix: Vec<usize>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn radius(&self) -> usize {
        self.prefix.len() - 1
    }

    /// Number of nodes with hop `<= r` (saturating at the full ball).
    pub fn count_within(&self, r: usize) -> usize {
        self.prefix[r.min(self.radius())]
    }
}

/// Hop distance from `source` to every node; `None` beyond `max_h` or unreachable.
pub fn bfs_hops(g: &Graph, source: NodeId, max_h: usize) -> Result<Vec<Option<usize>>> {
    g.check_node(source)?;
    let mut hop = vec![None; g.n_nodes()];
    let b = ball(g, source, max_h)?;
    for (&v, &h) in b.nodes.iter().zip(&b.hops) {
        hop[v] = Some(h);
    }
    Ok(hop)
}

pub fn ball(g: &Graph, source: NodeId, max_h: usize) -> Result<Ball> {
    g.check_node(source)?;
    let mut scratch = BfsScratch::new(g.n_nodes());
    Ok(scratch.ball(g, source, max_h))
}

pub fn hop_shell(g: &Graph, center: NodeId, h: usize) -> Result<HopShell> {
    let b = ball(g, center, h)?;
    let mut members: Vec<_> = b
        .nodes
        .iter()
        .zip(&b.hops)
        .filter(|&(_, &hv)| hv == h)
        .map(|(&v, _)| v)
        .collect();
    members.sort_unstable();
    Ok(HopShell { center, h, members })
}

/// Reusable BFS buffers; a stamp array avoids clearing `visited` between calls.
pub(crate) struct BfsScratch {
    stamp: Vec<u32>,
    current: u32,
    queue: VecDeque<(NodeId, usize)>,
    local: Vec<usize>,
}

/// Induced subgraph of a ball in local ids (ball order), CSR arrays.
pub(crate) struct LocalCsr {
    pub offsets: Vec<usize>,
    pub targets: Vec<usize>,
    pub weights: Vec<f64>,
}

impl BfsScratch {
    pub(crate) fn new(n: usize) -> Self {
        BfsScratch {
            stamp: vec![0; n],
            current: 0,
            queue: VecDeque::new(),
            local: vec![0; n],
        }
    }

    fn next_stamp(&mut self) -> u32 {
        if self.current == u32::MAX {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.current = 0;
        }
        self.current += 1;
        self.current
    }

    pub(crate) fn ball(&mut self, g: &Graph, source: NodeId, max_h: usize) -> Ball {
        let s = self.next_stamp();
        let mut nodes = vec![source];
        let mut hops = vec![0];
        let mut prefix = Vec::new();
        self.stamp[source] = s;
        self.queue.clear();
        self.queue.push_back((source, 0));
        while let Some((u, h)) = self.queue.pop_front() {
            if h == max_h {
                continue;
            }
            for &v in g.neighbors(u) {
                if self.stamp[v] != s {
                    self.stamp[v] = s;
                    nodes.push(v);
                    hops.push(h + 1);
                    self.queue.push_back((v, h + 1));
                }
            }
        }
        let radius = *hops.last().unwrap();
        let mut k = 0;
        for r in 0..=radius {
            while k < hops.len() && hops[k] <= r {
                k += 1;
            }
            prefix.push(k);
        }
        Ball {
            source,
            nodes,
            hops,
            prefix,
        }
    }

    /// Induced subgraph on the ball returned by the most recent [`Self::ball`] call.
    pub(crate) fn local_csr(&mut self, g: &Graph, b: &Ball) -> LocalCsr {
        let s = self.current;
        for (i, &v) in b.nodes.iter().enumerate() {
            self.local[v] = i;
        }
        let mut offsets = Vec::with_capacity(b.len() + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for &u in &b.nodes {
            for (&v, &w) in g.neighbors(u).iter().zip(g.neighbor_weights(u)) {
                if self.stamp[v] == s {
                    targets.push(self.local[v]);
                    weights.push(w);
                }
            }
            offsets.push(targets.len());
        }
        LocalCsr {
            offsets,
            targets,
            weights,
        }
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed for a min-heap; equal distances pop the smaller id first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Weighted single-source distances over the subgraph induced by `allowed`.
///
/// Nodes outside `allowed`, or not reachable inside it, get `f64::INFINITY`.
pub fn dijkstra_within(g: &Graph, source: NodeId, allowed: &[bool]) -> Result<Vec<f64>> {
    g.check_node(source)?;
    if allowed.len() != g.n_nodes() {
        return Err(Error::Dimension {
            expected: g.n_nodes(),
            got: allowed.len(),
        });
    }
    if !allowed[source] {
        return Err(Error::input(format!("source {source} is not in the allowed set")));
    }
    if let Some(w) = g.raw_weights().iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::input(format!("negative edge weight {w}")));
    }
    let mut dist = vec![f64::INFINITY; g.n_nodes()];
    let mut done = vec![false; g.n_nodes()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        node: source,
    });
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for (&v, &w) in g.neighbors(u).iter().zip(g.neighbor_weights(u)) {
            if !allowed[v] || done[v] {
                continue;
            }
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry { dist: nd, node: v });
            }
        }
    }
    Ok(dist)
}

/// Dijkstra on a local CSR (ids `0..n`), used for ego-network distances.
/// Returns the largest finite distance from local node 0.
pub(crate) fn local_eccentricity(offsets: &[usize], targets: &[usize], weights: &[f64]) -> f64 {
    let n = offsets.len() - 1;
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[0] = 0.0;
    heap.push(Entry { dist: 0.0, node: 0 });
    let mut far = 0.0f64;
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        far = far.max(d);
        for k in offsets[u]..offsets[u + 1] {
            let v = targets[k];
            if done[v] {
                continue;
            }
            let nd = d + weights[k];
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry { dist: nd, node: v });
            }
        }
    }
    far
}

#[cfg(test)]
mod tests {
    use super::super::named::*;
    use super::*;

    #[test]
    fn bfs_on_path() {
        let hops = bfs_hops(&path(5), 0, 16).unwrap();
        assert_eq!(hops, vec![Some(0), Some(1), Some(2), Some(3), Some(4)]);
    }

    #[test]
    fn bfs_zero_radius() {
        let g = grid(4, 4);
        let hops = bfs_hops(&g, 5, 0).unwrap();
        assert_eq!(hops.iter().filter(|h| h.is_some()).count(), 1);
        assert_eq!(hops[5], Some(0));
    }

    #[test]
    fn bfs_grid_shell_of_two() {
        let g = grid(5, 5);
        let hops = bfs_hops(&g, grid_center(5, 5), 2).unwrap();
        assert_eq!(hops.iter().filter(|&&h| h == Some(2)).count(), 8);
    }

    #[test]
    fn bfs_rejects_bad_source() {
        assert!(bfs_hops(&path(3), 3, 1).is_err());
    }

    #[test]
    fn ball_prefix_matches_hops() {
        let g = grid(9, 9);
        let b = ball(&g, grid_center(9, 9), 3).unwrap();
        assert_eq!(b.prefix, vec![1, 5, 13, 25]);
        for r in 0..=3 {
            assert!(b.hops[..b.prefix[r]].iter().all(|&h| h <= r));
        }
    }

    #[test]
    fn dijkstra_examples() {
        let p3 = weighted_path(&[2.0, 3.0]);
        let all = vec![true; 3];
        assert_eq!(dijkstra_within(&p3, 0, &all).unwrap(), vec![0.0, 2.0, 5.0]);
        let d = dijkstra_within(&p3, 0, &[true, true, false]).unwrap();
        assert!(d[2].is_infinite());
        let c4 = weighted_cycle(&[1.0, 1.0, 1.0, 10.0]);
        assert_eq!(dijkstra_within(&c4, 0, &[true; 4]).unwrap()[2], 2.0);
        assert!(dijkstra_within(&p3, 2, &[true, true, false]).is_err());
    }

    #[test]
    fn shells() {
        let g = grid(41, 41);
        let c = grid_center(41, 41);
        assert_eq!(hop_shell(&g, c, 3).unwrap().members.len(), 12);
        assert_eq!(hop_shell(&g, c, 0).unwrap().members, vec![c]);
        assert_eq!(hop_shell(&star(4), 0, 1).unwrap().members, vec![1, 2, 3]);
    }
}
