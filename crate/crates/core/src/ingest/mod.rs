//! Dataset construction: city CSV ingestion, synthetic generators,
//! categorical encoding, edge-to-node feature transfer and split masks.

mod bundle;
mod csv_io;
mod encode;
mod generate;
mod schema;
mod split;

pub use bundle::{read_bundle, write_bundle, write_city_csv, Bundle};
pub use csv_io::load_city;
pub use encode::{encode_features, CITY_FEATURE_WIDTH};
pub use generate::{gen_grid_city, gen_small_world, synthetic_record, WeightLaw};
pub use schema::{build_schema, CategoryList, EncodingSchema, NumericStat, KEPT_CATEGORIES};
pub use split::{make_split, Split, DEFAULT_FRACTIONS};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;

/// Whether a road alternates direction. Merged OSM ways can carry both
/// values, which is kept as its own category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reversed {
    No,
    Yes,
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawNode {
    /// Identifier from the source file (not the dense graph id).
    pub source_id: i64,
    pub lon: f64,
    pub lat: f64,
    pub street_count: f64,
    pub land_use: String,
}

/// One directed (possibly parallel) road segment; endpoints are dense ids.
#[derive(Clone, Debug, PartialEq)]
pub struct RawEdge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
    pub speed: f64,
    pub one_way: bool,
    pub reversed: Reversed,
    pub lanes: String,
    pub road_type: String,
}

/// Node and edge attributes aligned with a [`Graph`]: `nodes[i]` describes
/// graph node `i`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawCityRecord {
    pub nodes: Vec<RawNode>,
    pub edges: Vec<RawEdge>,
}

/// Encoded node features plus labels and split.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub x: Array2<f64>,
    pub feature_names: Vec<String>,
    pub labels: Option<Vec<usize>>,
    pub split: Option<Vec<Split>>,
}

impl FeatureTable {
    pub fn n_nodes(&self) -> usize {
        self.x.nrows()
    }

    pub fn width(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|y| y.iter().max())
            .map_or(0, |m| m + 1)
    }

    /// Node ids in a split, ascending.
    pub fn mask(&self, which: Split) -> Vec<usize> {
        self.split
            .as_ref()
            .map(|s| (0..s.len()).filter(|&v| s[v] == which).collect())
            .unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    pub features: FeatureTable,
}

/// Encodes a city record against its own schema and attaches a default split.
pub fn city_dataset(
    graph: Graph,
    raw: &RawCityRecord,
    split_seed: u64,
) -> crate::error::Result<(Dataset, EncodingSchema)> {
    let schema = build_schema(raw);
    let mut features = encode_features(&graph, raw, &schema)?;
    features.split = Some(make_split(graph.n_nodes(), DEFAULT_FRACTIONS, split_seed)?);
    Ok((Dataset { graph, features }, schema))
}
