use std::collections::BTreeMap;

use ndarray::Array2;

use super::schema::{EncodingSchema, KEPT_CATEGORIES};
use super::{FeatureTable, RawCityRecord, Reversed};
use crate::error::{Error, Result};
use crate::graph::Graph;

const CAT_SLOTS: usize = KEPT_CATEGORIES + 1;
const NODE_WIDTH: usize = 3 + CAT_SLOTS;
/// length, speed, one_way {no, yes}, reversed {no, yes, mixed}, lanes, road_type
const EDGE_WIDTH: usize = 2 + 2 + 3 + CAT_SLOTS + CAT_SLOTS;

/// Width of the city feature schema: 12 node columns + 25 edge columns.
pub const CITY_FEATURE_WIDTH: usize = NODE_WIDTH + EDGE_WIDTH;

/// Standardized columns: lon, lat, street_count, then length, speed.
const NUMERIC_COLUMNS: [usize; 5] = [0, 1, 2, NODE_WIDTH, NODE_WIDTH + 1];

fn edge_vector(e: &super::RawEdge, schema: &EncodingSchema) -> [f64; EDGE_WIDTH] {
    let mut row = [0.0; EDGE_WIDTH];
    row[0] = e.length;
    row[1] = e.speed;
    row[2 + e.one_way as usize] = 1.0;
    row[4 + match e.reversed {
        Reversed::No => 0,
        Reversed::Yes => 1,
        Reversed::Mixed => 2,
    }] = 1.0;
    row[7 + schema.lanes.slot(&e.lanes)] = 1.0;
    row[7 + CAT_SLOTS + schema.road_type.slot(&e.road_type)] = 1.0;
    row
}

/// Per-node mean of incident undirected edges, after mean-merging every
/// directed segment of the same endpoint pair.
fn node_edge_block(raw: &RawCityRecord, schema: &EncodingSchema) -> Vec<[f64; EDGE_WIDTH]> {
    let mut pairs: BTreeMap<(usize, usize), ([f64; EDGE_WIDTH], usize)> = BTreeMap::new();
    for e in &raw.edges {
        let v = edge_vector(e, schema);
        let slot = pairs
            .entry((e.u.min(e.v), e.u.max(e.v)))
            .or_insert(([0.0; EDGE_WIDTH], 0));
        slot.0.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        slot.1 += 1;
    }
    let n = raw.nodes.len();
    let mut sums = vec![[0.0; EDGE_WIDTH]; n];
    let mut deg = vec![0usize; n];
    for (&(u, v), (sum, c)) in &pairs {
        for w in [u, v] {
            sums[w]
                .iter_mut()
                .zip(sum)
                .for_each(|(a, b)| *a += b / *c as f64);
            deg[w] += 1;
        }
    }
    for (row, d) in sums.iter_mut().zip(deg) {
        if d > 0 {
            row.iter_mut().for_each(|x| *x /= d as f64);
        }
    }
    sums
}

/// Pre-standardization numeric node columns `[lon, lat, street_count,
/// mean length, mean speed]`, one vector per column.
pub(crate) fn node_numeric_columns(raw: &RawCityRecord) -> [Vec<f64>; 5] {
    let dummy = EncodingSchema {
        land_use: Default::default(),
        lanes: Default::default(),
        road_type: Default::default(),
        numeric: Vec::new(),
    };
    let edge = node_edge_block(raw, &dummy);
    [
        raw.nodes.iter().map(|n| n.lon).collect(),
        raw.nodes.iter().map(|n| n.lat).collect(),
        raw.nodes.iter().map(|n| n.street_count).collect(),
        edge.iter().map(|r| r[0]).collect(),
        edge.iter().map(|r| r[1]).collect(),
    ]
}

fn feature_names(schema: &EncodingSchema) -> Vec<String> {
    let mut names: Vec<String> = ["lon", "lat", "street_count"].map(String::from).to_vec();
    let cat = |names: &mut Vec<String>, list: &super::CategoryList| {
        for i in 0..KEPT_CATEGORIES {
            names.push(match list.kept.get(i) {
                Some(c) => format!("{}={}", list.name, c),
                None => format!("{}=<unused{}>", list.name, i),
            });
        }
        names.push(format!("{}=other", list.name));
    };
    cat(&mut names, &schema.land_use);
    names.extend(
        [
            "length",
            "speed",
            "one_way=false",
            "one_way=true",
            "reversed=false",
            "reversed=true",
            "reversed=mixed",
        ]
        .map(String::from),
    );
    cat(&mut names, &schema.lanes);
    cat(&mut names, &schema.road_type);
    names
}

/// Encodes node and incident-edge attributes into the 37-column city table.
///
/// Categorical groups always occupy 9 columns (8 kept slots + other) so the
/// width is stable across cities; unused slots are zero columns. Numeric
/// columns are standardized with the schema statistics.
pub fn encode_features(g: &Graph, raw: &RawCityRecord, schema: &EncodingSchema) -> Result<FeatureTable> {
    let n = g.n_nodes();
    if raw.nodes.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: raw.nodes.len(),
        });
    }
    if let Some(v) = (0..n).find(|&v| g.degree(v) == 0) {
        return Err(Error::input(format!("node {v} has no incident edges")));
    }
    if schema.numeric.len() != NUMERIC_COLUMNS.len() {
        return Err(Error::input("schema is missing numeric statistics"));
    }
    let edge = node_edge_block(raw, schema);
    let mut x = Array2::zeros((n, CITY_FEATURE_WIDTH));
    for (v, node) in raw.nodes.iter().enumerate() {
        x[[v, 0]] = node.lon;
        x[[v, 1]] = node.lat;
        x[[v, 2]] = node.street_count;
        x[[v, 3 + schema.land_use.slot(&node.land_use)]] = 1.0;
        for (k, &val) in edge[v].iter().enumerate() {
            x[[v, NODE_WIDTH + k]] = val;
        }
    }
    for (&col, stat) in NUMERIC_COLUMNS.iter().zip(&schema.numeric) {
        for v in 0..n {
            x[[v, col]] = if stat.std > 0.0 {
                (x[[v, col]] - stat.mean) / stat.std
            } else {
                0.0
            };
        }
    }
    Ok(FeatureTable {
        x,
        feature_names: feature_names(schema),
        labels: None,
        split: None,
    })
}
