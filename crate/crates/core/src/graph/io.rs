//! `graph.bin`: magic `LRGK1`, then little-endian u64 `n_nodes`, `n_edges`,
//! `nnz`, `has_coords`, followed by `offsets` (n+1 x u64), `neighbors`
//! (nnz x u64), `weights` (nnz x f64) and, if present, `coords` (n x 2 x f64,
//! longitude then latitude).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};

pub const GRAPH_MAGIC: &[u8; 5] = b"LRGK1";

pub fn write_graph_bin(g: &Graph, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(GRAPH_MAGIC)?;
    let nnz = g.raw_neighbors().len();
    for x in [
        g.n_nodes() as u64,
        g.n_edges() as u64,
        nnz as u64,
        g.coords().is_some() as u64,
    ] {
        put(&x.to_le_bytes())?;
    }
    for &o in g.offsets() {
        put(&(o as u64).to_le_bytes())?;
    }
    for &v in g.raw_neighbors() {
        put(&(v as u64).to_le_bytes())?;
    }
    for &x in g.raw_weights() {
        put(&x.to_le_bytes())?;
    }
    if let Some(coords) = g.coords() {
        for &(lon, lat) in coords {
            put(&lon.to_le_bytes())?;
            put(&lat.to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_graph_bin(path: &Path) -> Result<Graph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != GRAPH_MAGIC {
        return Err(Error::input(format!(
            "{}: not a graph.bin file (bad magic)",
            path.display()
        )));
    }
    let word = |r: &mut BufReader<File>| -> Result<[u8; 8]> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
        Ok(b)
    };
    let n = u64::from_le_bytes(word(&mut r)?) as usize;
    let n_edges = u64::from_le_bytes(word(&mut r)?) as usize;
    let nnz = u64::from_le_bytes(word(&mut r)?) as usize;
    let has_coords = u64::from_le_bytes(word(&mut r)?) != 0;
    if nnz != 2 * n_edges {
        return Err(Error::input(format!(
            "{}: header says {n_edges} edges but {nnz} adjacency entries",
            path.display()
        )));
    }
    let offsets = (0..=n)
        .map(|_| word(&mut r).map(|b| u64::from_le_bytes(b) as usize))
        .collect::<Result<Vec<_>>>()?;
    let neighbors = (0..nnz)
        .map(|_| word(&mut r).map(|b| u64::from_le_bytes(b) as usize))
        .collect::<Result<Vec<_>>>()?;
    let weights = (0..nnz)
        .map(|_| word(&mut r).map(f64::from_le_bytes))
        .collect::<Result<Vec<_>>>()?;
    let coords = if has_coords {
        Some(
            (0..n)
                .map(|_| Ok((f64::from_le_bytes(word(&mut r)?), f64::from_le_bytes(word(&mut r)?))))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Graph::from_csr(offsets, neighbors, weights, coords)
}

#[cfg(test)]
mod tests {
    use super::super::named::grid;
    use super::*;

    #[test]
    fn roundtrip_and_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("graph.bin");
        let g = grid(4, 3);
        write_graph_bin(&g, &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..5], b"LRGK1");
        assert_eq!(u64::from_le_bytes(bytes[5..13].try_into().unwrap()), 12);
        assert_eq!(read_graph_bin(&p).unwrap(), g);
        std::fs::write(&p, b"NOPE!").unwrap();
        assert!(read_graph_bin(&p).is_err());
    }
}
