//! On-disk dataset bundle: `graph.bin`, `features.csv`, `labels.csv`,
//! `split.csv`, `schema.json`.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{Dataset, EncodingSchema, FeatureTable, RawCityRecord, Reversed, Split};
use crate::error::{Error, Result};
use crate::graph::{read_graph_bin, write_graph_bin, Graph};

#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub dataset: Dataset,
    pub schema: EncodingSchema,
    pub epsilon_hat: Option<Vec<f64>>,
}

fn create(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

fn csv_fail(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::input(format!("{}: {e}", path.display()))
}

pub fn write_bundle(dir: &Path, bundle: &Bundle) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ds = &bundle.dataset;
    write_graph_bin(&ds.graph, &dir.join("graph.bin"))?;

    let p = dir.join("features.csv");
    let mut w = create(&p)?;
    let mut header = vec!["id".to_string()];
    header.extend(ds.features.feature_names.iter().cloned());
    w.write_record(&header).map_err(csv_fail(&p))?;
    for (v, row) in ds.features.x.rows().into_iter().enumerate() {
        let mut rec = vec![v.to_string()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec).map_err(csv_fail(&p))?;
    }
    w.flush().map_err(|e| Error::io(&p, e))?;

    if let Some(split) = &ds.features.split {
        let p = dir.join("split.csv");
        let mut w = create(&p)?;
        w.write_record(["id", "split"]).map_err(csv_fail(&p))?;
        for (v, s) in split.iter().enumerate() {
            w.write_record([v.to_string(), s.as_str().to_string()])
                .map_err(csv_fail(&p))?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
    }

    if let Some(labels) = &ds.features.labels {
        let p = dir.join("labels.csv");
        let mut w = create(&p)?;
        w.write_record(["id", "epsilon_hat", "label"]).map_err(csv_fail(&p))?;
        for (v, y) in labels.iter().enumerate() {
            let eps = bundle
                .epsilon_hat
                .as_ref()
                .map_or(String::new(), |e| e[v].to_string());
            w.write_record([v.to_string(), eps, y.to_string()])
                .map_err(csv_fail(&p))?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
    }

    let p = dir.join("schema.json");
    fs::write(&p, serde_json::to_string_pretty(&bundle.schema)?).map_err(|e| Error::io(&p, e))
}

fn read_rows(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::input(format!("{}: {other:?}", path.display())),
    })?;
    rdr.records()
        .map(|r| r.map_err(csv_fail(path)))
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("bad or missing column {i}"),
        })
}

pub fn read_bundle(dir: &Path) -> Result<Bundle> {
    let graph = read_graph_bin(&dir.join("graph.bin"))?;
    let n = graph.n_nodes();

    let p = dir.join("schema.json");
    let schema: EncodingSchema =
        serde_json::from_str(&fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?)?;

    let p = dir.join("features.csv");
    let mut rdr = csv::Reader::from_path(&p).map_err(csv_fail(&p))?;
    let names: Vec<String> = rdr
        .headers()
        .map_err(csv_fail(&p))?
        .iter()
        .skip(1)
        .map(String::from)
        .collect();
    drop(rdr);
    let rows = read_rows(&p)?;
    if rows.len() != n {
        return Err(Error::input(format!("{}: {} rows for {n} nodes", p.display(), rows.len())));
    }
    let mut x = Array2::zeros((n, names.len()));
    for (v, rec) in rows.iter().enumerate() {
        for j in 0..names.len() {
            x[[v, j]] = field(&p, rec, j + 1)?;
        }
    }

    let p = dir.join("split.csv");
    let split = if p.exists() {
        let rows = read_rows(&p)?;
        let mut s = vec![Split::Test; n];
        for rec in &rows {
            let v: usize = field(&p, rec, 0)?;
            let which = rec.get(1).and_then(Split::parse).ok_or_else(|| Error::Parse {
                path: p.clone(),
                line: rec.position().map_or(0, |q| q.line()),
                msg: "bad split name".into(),
            })?;
            *s.get_mut(v).ok_or_else(|| Error::input("split id out of range"))? = which;
        }
        Some(s)
    } else {
        None
    };

    let p = dir.join("labels.csv");
    let (labels, epsilon_hat) = if p.exists() {
        let rows = read_rows(&p)?;
        let mut y = vec![0usize; n];
        let mut eps = vec![f64::NAN; n];
        for rec in &rows {
            let v: usize = field(&p, rec, 0)?;
            if v >= n {
                return Err(Error::input("label id out of range"));
            }
            y[v] = field(&p, rec, 2)?;
            if rec.get(1).is_some_and(|s| !s.is_empty()) {
                eps[v] = field(&p, rec, 1)?;
            }
        }
        let eps = eps.iter().all(|e| e.is_finite()).then_some(eps);
        (Some(y), eps)
    } else {
        (None, None)
    };

    Ok(Bundle {
        dataset: Dataset {
            graph,
            features: FeatureTable {
                x,
                feature_names: names,
                labels,
                split,
            },
        },
        schema,
        epsilon_hat,
    })
}

/// Writes the `nodes.csv` / `edges.csv` interchange pair for a graph and its
/// attribute record.
pub fn write_city_csv(g: &Graph, raw: &RawCityRecord, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join("nodes.csv");
    let mut w = create(&p)?;
    w.write_record(["id", "lon", "lat", "street_count", "land_use"])
        .map_err(csv_fail(&p))?;
    for (v, n) in raw.nodes.iter().enumerate().take(g.n_nodes()) {
        w.write_record([
            v.to_string(),
            n.lon.to_string(),
            n.lat.to_string(),
            n.street_count.to_string(),
            n.land_use.clone(),
        ])
        .map_err(csv_fail(&p))?;
    }
    w.flush().map_err(|e| Error::io(&p, e))?;

    let p = dir.join("edges.csv");
    let mut w = create(&p)?;
    w.write_record(["u", "v", "length", "speed", "one_way", "reversed", "lanes", "road_type"])
        .map_err(csv_fail(&p))?;
    for e in &raw.edges {
        let rev = match e.reversed {
            Reversed::No => "false",
            Reversed::Yes => "true",
            Reversed::Mixed => "mixed",
        };
        w.write_record([
            e.u.to_string(),
            e.v.to_string(),
            e.length.to_string(),
            e.speed.to_string(),
            e.one_way.to_string(),
            rev.to_string(),
            e.lanes.clone(),
            e.road_type.clone(),
        ])
        .map_err(csv_fail(&p))?;
    }
    w.flush().map_err(|e| Error::io(&p, e))
}
