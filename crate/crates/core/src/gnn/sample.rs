//! Hop-bounded ego-network sampling and mini-batch assembly.

use std::sync::Arc;

use ndarray::Array2;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tape::SparseOp;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{Graph, NodeId};

/// One seed's ego-network: BFS order (hops non-decreasing) with the
/// self-loop normalized adjacency of the induced subgraph in local ids.
#[derive(Clone, Debug, PartialEq)]
pub struct EgoBlock {
    pub seed: NodeId,
    pub nodes: Vec<NodeId>,
    pub hops: Vec<usize>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl EgoBlock {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub(crate) struct SampleScratch {
    seen: Vec<u32>,
    member: Vec<u32>,
    local: Vec<usize>,
    current: u32,
}

impl SampleScratch {
    pub(crate) fn new(n: usize) -> Self {
        SampleScratch {
            seen: vec![0; n],
            member: vec![0; n],
            local: vec![0; n],
            current: 0,
        }
    }

    fn next_stamp(&mut self) -> u32 {
        if self.current == u32::MAX {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.member.iter_mut().for_each(|s| *s = 0);
            self.current = 0;
        }
        self.current += 1;
        self.current
    }
}

fn block_rng(seed: u64, node: NodeId) -> ChaCha8Rng {
    let mut z = (node as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(seed ^ z ^ (z >> 31))
}

/// Breadth-first expansion keeping at most `cap` newly discovered nodes per
/// hop. Discarded nodes stay marked as reached and are never revisited, so a
/// kept node's hop is its distance inside the sampled subgraph (never less
/// than its distance in the full graph).
pub(crate) fn sample_block(
    g: &Graph,
    seed: NodeId,
    hops: usize,
    cap: Option<usize>,
    rng_seed: u64,
    scratch: &mut SampleScratch,
) -> EgoBlock {
    let s = scratch.next_stamp();
    let mut nodes = vec![seed];
    let mut hop = vec![0];
    scratch.seen[seed] = s;
    let mut frontier = 0..1;
    let mut rng = None;
    let mut next = Vec::new();
    for h in 1..=hops {
        next.clear();
        for i in frontier.clone() {
            for &v in g.neighbors(nodes[i]) {
                if scratch.seen[v] != s {
                    scratch.seen[v] = s;
                    next.push(v);
                }
            }
        }
        if let Some(c) = cap {
            if next.len() > c {
                let rng = rng.get_or_insert_with(|| block_rng(rng_seed, seed));
                let mut keep = index::sample(rng, next.len(), c).into_vec();
                keep.sort_unstable();
                next = keep.into_iter().map(|k| next[k]).collect();
            }
        }
        if next.is_empty() {
            break;
        }
        let start = nodes.len();
        nodes.extend_from_slice(&next);
        hop.resize(nodes.len(), h);
        frontier = start..nodes.len();
    }
    for (i, &v) in nodes.iter().enumerate() {
        scratch.member[v] = s;
        scratch.local[v] = i;
    }
    let deg: Vec<f64> = nodes
        .iter()
        .map(|&u| {
            let d = g.neighbors(u).iter().filter(|&&v| scratch.member[v] == s).count();
            d as f64 + 1.0
        })
        .collect();
    let mut offsets = Vec::with_capacity(nodes.len() + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    offsets.push(0);
    for (i, &u) in nodes.iter().enumerate() {
        let mut row: Vec<(usize, f64)> = vec![(i, 1.0 / deg[i])];
        for &v in g.neighbors(u) {
            if scratch.member[v] == s {
                let j = scratch.local[v];
                row.push((j, 1.0 / (deg[i] * deg[j]).sqrt()));
            }
        }
        row.sort_unstable_by_key(|e| e.0);
        for (j, a) in row {
            cols.push(j);
            vals.push(a);
        }
        offsets.push(cols.len());
    }
    EgoBlock {
        seed,
        nodes,
        hops: hop,
        offsets,
        cols,
        vals,
    }
}

/// Ego-networks for every seed. `cap_per_hop = None` keeps full balls.
pub fn sample_blocks(
    g: &Graph,
    seeds: &[NodeId],
    hops: usize,
    cap_per_hop: Option<usize>,
    seed: u64,
    exec: Exec,
) -> Result<Vec<EgoBlock>> {
    if hops == 0 {
        return Err(Error::input("hop bound must be at least 1"));
    }
    if cap_per_hop == Some(0) {
        return Err(Error::input("per-hop cap must be at least 1"));
    }
    for &s in seeds {
        g.check_node(s)?;
    }
    Ok(exec.map_range_init(
        seeds.len(),
        || SampleScratch::new(g.n_nodes()),
        |scratch, i| sample_block(g, seeds[i], hops, cap_per_hop, seed, scratch),
    ))
}

/// Several ego-networks stacked as disjoint blocks of one graph.
///
/// Rows are ordered by (hop, seed index, BFS position), so seeds occupy rows
/// `0..seeds.len()` and the rows within `r` hops of their own seed form the
/// prefix `0..rows_within(r)`.
#[derive(Clone, Debug)]
pub struct EgoBatch {
    pub seeds: Vec<NodeId>,
    /// Local row to global node id.
    pub nodes: Vec<NodeId>,
    /// Hop distance from the row's own seed.
    pub hops: Vec<usize>,
    /// Index into `seeds` of the block each row belongs to.
    pub owner: Vec<usize>,
    pub hop_bound: usize,
    prefix: Vec<usize>,
    prop: Arc<SparseOp>,
}

impl EgoBatch {
    pub fn from_blocks(blocks: &[&EgoBlock], hop_bound: usize) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::input("batch needs at least one seed"));
        }
        let total: usize = blocks.iter().map(|b| b.len()).sum();
        let mut row_of: Vec<Vec<usize>> = blocks.iter().map(|b| vec![0; b.len()]).collect();
        let mut cursor = vec![0usize; blocks.len()];
        let mut nodes = Vec::with_capacity(total);
        let mut hops = Vec::with_capacity(total);
        let mut owner = Vec::with_capacity(total);
        let mut prefix = Vec::with_capacity(hop_bound + 1);
        for r in 0..=hop_bound {
            for (b, blk) in blocks.iter().enumerate() {
                while cursor[b] < blk.len() && blk.hops[cursor[b]] == r {
                    let k = cursor[b];
                    row_of[b][k] = nodes.len();
                    nodes.push(blk.nodes[k]);
                    hops.push(r);
                    owner.push(b);
                    cursor[b] += 1;
                }
            }
            prefix.push(nodes.len());
        }
        if nodes.len() != total {
            return Err(Error::input(format!(
                "ego-network extends beyond hop bound {hop_bound}"
            )));
        }
        let mut entries: Vec<(usize, usize, usize)> = Vec::with_capacity(total);
        for (b, blk) in blocks.iter().enumerate() {
            for k in 0..blk.len() {
                entries.push((row_of[b][k], b, k));
            }
        }
        entries.sort_unstable();
        let mut offsets = Vec::with_capacity(total + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        let mut row = Vec::new();
        for &(_, b, k) in &entries {
            let blk = blocks[b];
            row.clear();
            for e in blk.offsets[k]..blk.offsets[k + 1] {
                row.push((row_of[b][blk.cols[e]], blk.vals[e]));
            }
            row.sort_unstable_by_key(|e| e.0);
            for &(j, a) in &row {
                cols.push(j);
                vals.push(a);
            }
            offsets.push(cols.len());
        }
        Ok(EgoBatch {
            seeds: blocks.iter().map(|b| b.seed).collect(),
            nodes,
            hops,
            owner,
            hop_bound,
            prefix,
            prop: Arc::new(SparseOp::new(offsets, cols, vals)?),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_seeds(&self) -> usize {
        self.seeds.len()
    }

    /// Number of rows within `r` hops of their seed.
    pub fn rows_within(&self, r: usize) -> usize {
        self.prefix[r.min(self.prefix.len() - 1)]
    }

    /// Self-loop normalized adjacency of the block-diagonal batch graph.
    pub fn propagation(&self) -> &Arc<SparseOp> {
        &self.prop
    }

    /// Feature rows for the first `rows` batch rows.
    pub fn gather(&self, x: &Array2<f64>, rows: usize) -> Array2<f64> {
        let c = x.ncols();
        let mut out = Array2::zeros((rows, c));
        for (mut dst, &v) in out.outer_iter_mut().zip(&self.nodes[..rows]) {
            dst.assign(&x.row(v));
        }
        out
    }
}

/// Samples one ego-network per seed and stacks them into a batch.
pub fn sample_ego(
    g: &Graph,
    seeds: &[NodeId],
    hops: usize,
    cap_per_hop: Option<usize>,
    seed: u64,
    exec: Exec,
) -> Result<EgoBatch> {
    let blocks = sample_blocks(g, seeds, hops, cap_per_hop, seed, exec)?;
    let refs: Vec<&EgoBlock> = blocks.iter().collect();
    EgoBatch::from_blocks(&refs, hops)
}
