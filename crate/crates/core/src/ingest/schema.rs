use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::encode::node_numeric_columns;
use super::RawCityRecord;

/// Categories kept per categorical feature before everything else is
/// bucketed into "other".
pub const KEPT_CATEGORIES: usize = 8;

pub const OTHER: &str = "other";

/// Kept categories of one feature, most frequent first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryList {
    pub name: String,
    pub kept: Vec<String>,
}

impl CategoryList {
    /// Ranks by frequency, ties lexicographically; empty strings and a
    /// literal "other" never take a slot.
    pub fn from_values<'a>(name: &str, values: impl Iterator<Item = &'a str>) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for v in values {
            if !v.is_empty() && v != OTHER {
                *counts.entry(v).or_default() += 1;
            }
        }
        let mut ranked: Vec<_> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        CategoryList {
            name: name.to_string(),
            kept: ranked
                .into_iter()
                .take(KEPT_CATEGORIES)
                .map(|(v, _)| v.to_string())
                .collect(),
        }
    }

    /// Slot index in `0..=KEPT_CATEGORIES`; the last slot is "other".
    pub fn slot(&self, value: &str) -> usize {
        self.kept
            .iter()
            .position(|k| k == value)
            .unwrap_or(KEPT_CATEGORIES)
    }

    /// Kept categories followed by "other".
    pub fn with_other(&self) -> Vec<String> {
        let mut v = self.kept.clone();
        v.push(OTHER.to_string());
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericStat {
    pub name: String,
    pub mean: f64,
    /// Population standard deviation over nodes; zero means the column is
    /// constant and encodes to all zeros.
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingSchema {
    pub land_use: CategoryList,
    pub lanes: CategoryList,
    pub road_type: CategoryList,
    /// Node-level statistics of `lon, lat, street_count, length, speed`
    /// (edge columns after the incident-edge mean).
    pub numeric: Vec<NumericStat>,
}

pub fn build_schema(raw: &RawCityRecord) -> EncodingSchema {
    let cols = node_numeric_columns(raw);
    let names = ["lon", "lat", "street_count", "length", "speed"];
    let numeric = names
        .iter()
        .zip(cols)
        .map(|(name, col)| {
            let n = col.len().max(1) as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            NumericStat {
                name: name.to_string(),
                mean,
                std: var.sqrt(),
            }
        })
        .collect();
    EncodingSchema {
        land_use: CategoryList::from_values("land_use", raw.nodes.iter().map(|n| n.land_use.as_str())),
        lanes: CategoryList::from_values("lanes", raw.edges.iter().map(|e| e.lanes.as_str())),
        road_type: CategoryList::from_values(
            "road_type",
            raw.edges.iter().map(|e| e.road_type.as_str()),
        ),
        numeric,
    }
}
