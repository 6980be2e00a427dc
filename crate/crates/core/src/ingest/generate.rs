//! Synthetic stand-ins for city road networks and small-world contrasts.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{RawCityRecord, RawEdge, RawNode, Reversed};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Distribution of road lengths (meters) on generated grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum WeightLaw {
    Unit,
    Uniform { lo: f64, hi: f64 },
    /// Square districts of `block x block` cells, each with a base block
    /// length drawn log-uniformly from `[lo, hi]`; every edge takes its
    /// district's base scaled by `1 + jitter * U(-1, 1)`.
    Districts { block: usize, lo: f64, hi: f64, jitter: f64 },
    /// Districts as above, with each `fine x fine` block inside them further
    /// scaled by a factor drawn log-uniformly from `[1 / contrast, contrast]`.
    Layered {
        block: usize,
        fine: usize,
        lo: f64,
        hi: f64,
        contrast: f64,
        jitter: f64,
    },
}

impl Default for WeightLaw {
    fn default() -> Self {
        WeightLaw::Districts {
            block: 8,
            lo: 40.0,
            hi: 200.0,
            jitter: 0.3,
        }
    }
}

const LAND_USE: [&str; 6] = ["residential", "commercial", "industrial", "forest", "farmland", "retail"];
const ROAD_TYPES: [(&str, f64, &str); 5] = [
    ("residential", 30.0, "1"),
    ("tertiary", 40.0, "2"),
    ("secondary", 50.0, "2"),
    ("primary", 60.0, "[2, 3]"),
    ("service", 20.0, "1"),
];
const ZONE: usize = 8;

/// Lattice city with coordinates equal to grid positions.
///
/// Edges are deleted with probability `perturb_p` as long as the graph stays
/// connected. Land use and road types are assigned per 8x8 zone.
pub fn gen_grid_city(
    width: usize,
    height: usize,
    weight_law: &WeightLaw,
    perturb_p: f64,
    seed: u64,
) -> Result<(Graph, RawCityRecord)> {
    if width < 2 || height < 2 {
        return Err(Error::input(format!("grid must be at least 2x2, got {width}x{height}")));
    }
    if !(0.0..=1.0).contains(&perturb_p) {
        return Err(Error::input(format!("perturb_p must lie in [0, 1], got {perturb_p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |x: usize, y: usize| y * width + x;
    let n = width * height;

    let log_uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
    };
    let blocks = |b: usize| width.div_ceil(b) * height.div_ceil(b);
    let (district_base, fine_factor): (Vec<f64>, Vec<f64>) = match *weight_law {
        WeightLaw::Districts { block, lo, hi, .. } => {
            if block == 0 || !(lo > 0.0 && hi >= lo) {
                return Err(Error::input("districts need block > 0 and 0 < lo <= hi"));
            }
            let base = (0..blocks(block)).map(|_| log_uniform(&mut rng, lo, hi)).collect();
            (base, Vec::new())
        }
        WeightLaw::Layered {
            block,
            fine,
            lo,
            hi,
            contrast,
            ..
        } => {
            if block == 0 || fine == 0 || !(lo > 0.0 && hi >= lo) || !(contrast >= 1.0) {
                return Err(Error::input(
                    "layered districts need block, fine > 0, 0 < lo <= hi and contrast >= 1",
                ));
            }
            let base = (0..blocks(block)).map(|_| log_uniform(&mut rng, lo, hi)).collect();
            let detail = (0..blocks(fine))
                .map(|_| log_uniform(&mut rng, 1.0 / contrast, contrast))
                .collect();
            (base, detail)
        }
        WeightLaw::Uniform { lo, hi } if !(lo > 0.0 && hi >= lo) => {
            return Err(Error::input("uniform law needs 0 < lo <= hi"));
        }
        _ => (Vec::new(), Vec::new()),
    };
    let zones_x = width.div_ceil(ZONE);
    let n_zones = zones_x * height.div_ceil(ZONE);
    let zone_land: Vec<usize> = (0..n_zones).map(|_| rng.gen_range(0..LAND_USE.len())).collect();
    let zone_road: Vec<usize> = (0..n_zones).map(|_| rng.gen_range(0..ROAD_TYPES.len())).collect();
    let zone_of = |x: usize, y: usize| (y / ZONE) * zones_x + x / ZONE;

    let mut edges = Vec::with_capacity(2 * n);
    for y in 0..height {
        for x in 0..width {
            let mut push = |x2: usize, y2: usize, rng: &mut ChaCha8Rng| {
                let w = match *weight_law {
                    WeightLaw::Unit => 1.0,
                    WeightLaw::Uniform { lo, hi } => rng.gen_range(lo..=hi),
                    WeightLaw::Districts { block, jitter, .. } => {
                        // District of the edge's lower-left endpoint.
                        let d = (y / block) * width.div_ceil(block) + x / block;
                        district_base[d] * (1.0 + jitter * rng.gen_range(-1.0..=1.0))
                    }
                    WeightLaw::Layered {
                        block, fine, jitter, ..
                    } => {
                        let d = (y / block) * width.div_ceil(block) + x / block;
                        let f = (y / fine) * width.div_ceil(fine) + x / fine;
                        district_base[d]
                            * fine_factor[f]
                            * (1.0 + jitter * rng.gen_range(-1.0..=1.0))
                    }
                };
                edges.push((id(x, y), id(x2, y2), w));
            };
            if x + 1 < width {
                push(x + 1, y, &mut rng);
            }
            if y + 1 < height {
                push(x, y + 1, &mut rng);
            }
        }
    }

    let mut keep = vec![true; edges.len()];
    if perturb_p > 0.0 {
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (k, &(u, v, _)) in edges.iter().enumerate() {
            adj[u].push((v, k));
            adj[v].push((u, k));
        }
        for k in 0..edges.len() {
            if rng.gen::<f64>() >= perturb_p {
                continue;
            }
            keep[k] = false;
            let (u, v, _) = edges[k];
            if !reachable(&adj, &keep, u, v) {
                keep[k] = true;
            }
        }
    }
    let kept: Vec<_> = edges
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(&e, _)| e)
        .collect();
    let coords: Vec<_> = (0..n).map(|v| ((v % width) as f64, (v / width) as f64)).collect();
    let graph = Graph::from_edges(n, &kept, Some(coords))?;

    let nodes = (0..n)
        .map(|v| {
            let (x, y) = (v % width, v / width);
            RawNode {
                source_id: v as i64,
                lon: x as f64,
                lat: y as f64,
                street_count: graph.degree(v) as f64,
                land_use: LAND_USE[zone_land[zone_of(x, y)]].to_string(),
            }
        })
        .collect();
    let raw_edges = kept
        .iter()
        .map(|&(u, v, w)| {
            let (x, y) = (u % width, u / width);
            let (road, speed, lanes) = ROAD_TYPES[zone_road[zone_of(x, y)]];
            RawEdge {
                u,
                v,
                length: w,
                speed,
                one_way: rng.gen::<f64>() < 0.1,
                reversed: if rng.gen::<f64>() < 0.02 { Reversed::Yes } else { Reversed::No },
                lanes: lanes.to_string(),
                road_type: road.to_string(),
            }
        })
        .collect();
    Ok((graph, RawCityRecord { nodes, edges: raw_edges }))
}

fn reachable(adj: &[Vec<(usize, usize)>], keep: &[bool], from: usize, to: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(u) = queue.pop_front() {
        if u == to {
            return true;
        }
        for &(v, k) in &adj[u] {
            if keep[k] && !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    false
}

/// Watts-Strogatz ring: `k` nearest neighbors, each edge rewired with
/// probability `rewire_p` (no self-loops or duplicates). Disconnected draws
/// are retried with the next random state. Unit weights, nodes placed on
/// the unit circle.
pub fn gen_small_world(n: usize, k: usize, rewire_p: f64, seed: u64) -> Result<Graph> {
    if k % 2 != 0 || k == 0 || k >= n {
        return Err(Error::input(format!("small world needs even 0 < k < n, got n={n}, k={k}")));
    }
    if !(0.0..=1.0).contains(&rewire_p) {
        return Err(Error::input(format!("rewire_p must lie in [0, 1], got {rewire_p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<_> = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            (t.cos(), t.sin())
        })
        .collect();
    for _ in 0..100 {
        let mut adj: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); n];
        for i in 0..n {
            for j in 1..=k / 2 {
                let t = (i + j) % n;
                adj[i].insert(t);
                adj[t].insert(i);
            }
        }
        for j in 1..=k / 2 {
            for i in 0..n {
                if rng.gen::<f64>() >= rewire_p {
                    continue;
                }
                let t = (i + j) % n;
                if !adj[i].contains(&t) || adj[i].len() >= n - 1 {
                    continue;
                }
                let w = loop {
                    let w = rng.gen_range(0..n);
                    if w != i && !adj[i].contains(&w) {
                        break w;
                    }
                };
                adj[i].remove(&t);
                adj[t].remove(&i);
                adj[i].insert(w);
                adj[w].insert(i);
            }
        }
        let edges: Vec<_> = (0..n)
            .flat_map(|u| adj[u].iter().filter(move |&&v| u < v).map(move |&v| (u, v, 1.0)))
            .collect::<Vec<_>>();
        let g = Graph::from_edges(n, &edges, Some(coords.clone()))?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::input("could not draw a connected small-world graph in 100 attempts"))
}

/// City-style attributes for an arbitrary graph: coordinates from the graph
/// (or zeros), street count = degree, edge length = edge weight, random
/// land use and road type per node/edge.
pub fn synthetic_record(g: &Graph, seed: u64) -> RawCityRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = (0..g.n_nodes())
        .map(|v| {
            let (lon, lat) = g.coords().map_or((0.0, 0.0), |c| c[v]);
            RawNode {
                source_id: v as i64,
                lon,
                lat,
                street_count: g.degree(v) as f64,
                land_use: LAND_USE.choose(&mut rng).unwrap().to_string(),
            }
        })
        .collect();
    let edges = g
        .edges()
        .map(|(u, v, w)| {
            let (road, speed, lanes) = *ROAD_TYPES.choose(&mut rng).unwrap();
            RawEdge {
                u,
                v,
                length: w,
                speed,
                one_way: false,
                reversed: Reversed::No,
                lanes: lanes.to_string(),
                road_type: road.to_string(),
            }
        })
        .collect();
    RawCityRecord { nodes, edges }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square() {
        let (g, raw) = gen_grid_city(2, 2, &WeightLaw::Unit, 0.0, 1).unwrap();
        assert_eq!((g.n_nodes(), g.n_edges()), (4, 4));
        assert_eq!(raw.edges.len(), 4);
    }

    #[test]
    fn lattice_average_degree() {
        let (g, _) = gen_grid_city(64, 64, &WeightLaw::default(), 0.0, 1).unwrap();
        let avg = 2.0 * g.n_edges() as f64 / g.n_nodes() as f64;
        assert!((avg - 2.0 * (2.0 * 64.0 * 63.0) / 4096.0).abs() < 1e-12);
        assert!((avg - 3.94).abs() < 0.01);
    }

    #[test]
    fn deterministic_and_connected_under_perturbation() {
        let a = gen_grid_city(20, 15, &WeightLaw::default(), 0.2, 9).unwrap();
        let b = gen_grid_city(20, 15, &WeightLaw::default(), 0.2, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.0.is_connected());
        assert!(a.0.n_edges() < 2 * 20 * 15 - 20 - 15);
        assert!(gen_grid_city(1, 5, &WeightLaw::Unit, 0.0, 0).is_err());
    }

    #[test]
    fn small_world_ring_lattices() {
        let c10 = gen_small_world(10, 2, 0.0, 0).unwrap();
        assert_eq!(c10.n_edges(), 10);
        assert!((0..10).all(|v| c10.degree(v) == 2));
        let r4 = gen_small_world(10, 4, 0.0, 0).unwrap();
        assert!((0..10).all(|v| r4.degree(v) == 4));
        assert!(gen_small_world(10, 3, 0.1, 0).is_err());
        let sw = gen_small_world(200, 4, 1.0, 3).unwrap();
        assert!(sw.is_connected());
        assert_eq!(sw.n_edges(), 400);
    }
}
