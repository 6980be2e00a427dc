use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Deserialize;

use super::{RawCityRecord, RawEdge, RawNode, Reversed};
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Deserialize)]
struct NodeRow {
    id: i64,
    lon: f64,
    lat: f64,
    street_count: f64,
    #[serde(default)]
    land_use: String,
}

#[derive(Deserialize)]
struct EdgeRow {
    u: i64,
    v: i64,
    length: f64,
    #[serde(default)]
    speed: Option<f64>,
    one_way: String,
    reversed: String,
    #[serde(default)]
    lanes: String,
    #[serde(default)]
    road_type: String,
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => parse_err(path, line, e.to_string()),
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" | "" => Some(false),
        _ => None,
    }
}

fn parse_reversed(s: &str) -> Option<Reversed> {
    let t = s.trim();
    if t.starts_with('[') || t.eq_ignore_ascii_case("mixed") {
        let vals: Vec<_> = t
            .trim_matches(|c| c == '[' || c == ']')
            .split(',')
            .filter(|x| !x.trim().is_empty())
            .map(parse_bool)
            .collect::<Option<_>>()?;
        return Some(match (vals.contains(&false), vals.contains(&true)) {
            (true, true) | (false, false) => Reversed::Mixed,
            (false, true) => Reversed::Yes,
            (true, false) => Reversed::No,
        });
    }
    parse_bool(t).map(|b| if b { Reversed::Yes } else { Reversed::No })
}

/// Deserialized rows with their 1-based line numbers.
fn rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(u64, T)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .deserialize(Some(&headers))
            .map_err(|e| parse_err(path, line, e.to_string()))?;
        out.push((line, row));
    }
    Ok(out)
}

/// Reads a city from the nodes/edges CSV pair.
///
/// Parallel and antiparallel segments are merged into one undirected edge
/// whose weight is the mean segment length, self-loops are dropped, and only
/// the largest connected component is kept, with node ids densified. The
/// returned record keeps every directed segment (endpoints remapped) so that
/// edge features can be mean-reduced per pair during encoding. Missing
/// speeds are filled with the mean of the known speeds.
pub fn load_city(nodes_file: &Path, edges_file: &Path) -> Result<(Graph, RawCityRecord)> {
    let mut nodes = Vec::new();
    let mut index: HashMap<i64, usize> = HashMap::new();
    for (line, row) in rows::<NodeRow>(nodes_file)? {
        if index.insert(row.id, nodes.len()).is_some() {
            return Err(parse_err(nodes_file, line, format!("duplicate node id {}", row.id)));
        }
        if !row.lon.is_finite() || !row.lat.is_finite() {
            return Err(parse_err(nodes_file, line, "non-finite coordinate"));
        }
        nodes.push(RawNode {
            source_id: row.id,
            lon: row.lon,
            lat: row.lat,
            street_count: row.street_count,
            land_use: row.land_use,
        });
    }

    let mut edges = Vec::new();
    let mut speeds_missing = Vec::new();
    for (line, row) in rows::<EdgeRow>(edges_file)? {
        let endpoint = |id: i64| {
            index
                .get(&id)
                .copied()
                .ok_or_else(|| parse_err(edges_file, line, format!("unknown node id {id}")))
        };
        let (u, v) = (endpoint(row.u)?, endpoint(row.v)?);
        if !(row.length > 0.0) || !row.length.is_finite() {
            return Err(parse_err(
                edges_file,
                line,
                format!("edge length must be positive, got {}", row.length),
            ));
        }
        let one_way = parse_bool(&row.one_way).ok_or_else(|| {
            parse_err(edges_file, line, format!("bad one_way value {:?}", row.one_way))
        })?;
        let reversed = parse_reversed(&row.reversed).ok_or_else(|| {
            parse_err(edges_file, line, format!("bad reversed value {:?}", row.reversed))
        })?;
        if u == v {
            continue;
        }
        if row.speed.is_none() {
            speeds_missing.push(edges.len());
        }
        edges.push(RawEdge {
            u,
            v,
            length: row.length,
            speed: row.speed.unwrap_or(f64::NAN),
            one_way,
            reversed,
            lanes: row.lanes,
            road_type: row.road_type,
        });
    }
    if nodes.is_empty() || edges.is_empty() {
        return Err(Error::input(format!(
            "{}: graph has no edges after loading",
            edges_file.display()
        )));
    }
    let known: Vec<f64> = edges.iter().map(|e| e.speed).filter(|s| s.is_finite()).collect();
    let fill = if known.is_empty() {
        0.0
    } else {
        known.iter().sum::<f64>() / known.len() as f64
    };
    for i in speeds_missing {
        edges[i].speed = fill;
    }

    let merged = merge_lengths(&edges);
    let coords = nodes.iter().map(|n| (n.lon, n.lat)).collect();
    let full = Graph::from_edges(nodes.len(), &merged, Some(coords))?;
    let (graph, keep) = full.largest_component()?;
    if graph.n_edges() == 0 {
        return Err(Error::input("largest component has no edges"));
    }
    let mut new_id = vec![usize::MAX; nodes.len()];
    for (i, &old) in keep.iter().enumerate() {
        new_id[old] = i;
    }
    let record = RawCityRecord {
        nodes: keep.iter().map(|&old| nodes[old].clone()).collect(),
        edges: edges
            .into_iter()
            .filter(|e| new_id[e.u] != usize::MAX)
            .map(|e| RawEdge {
                u: new_id[e.u],
                v: new_id[e.v],
                ..e
            })
            .collect(),
    };
    Ok((graph, record))
}

/// Mean length per unordered endpoint pair, in pair order.
pub(crate) fn merge_lengths(edges: &[RawEdge]) -> Vec<(usize, usize, f64)> {
    let mut acc: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for e in edges {
        let key = (e.u.min(e.v), e.u.max(e.v));
        let slot = acc.entry(key).or_insert((0.0, 0));
        slot.0 += e.length;
        slot.1 += 1;
    }
    acc.into_iter()
        .map(|((u, v), (s, c))| (u, v, s / c as f64))
        .collect()
}
