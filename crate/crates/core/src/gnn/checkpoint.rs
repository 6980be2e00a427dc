//! Versioned binary checkpoint of model parameters.
//!
//! Layout: magic, u64 length of a JSON model config, the config, then for
//! each weight and bias (layer order, weights first) u64 rows, u64 cols and
//! row-major little-endian f64 data.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::model::{ModelConfig, ModelParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"LRGKM1";

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let cfg = serde_json::to_vec(&params.config)?;
    w.write_all(CHECKPOINT_MAGIC).map_err(io)?;
    w.write_all(&(cfg.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&cfg).map_err(io)?;
    for t in params.tensors() {
        w.write_all(&(t.nrows() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&(t.ncols() as u64).to_le_bytes()).map_err(io)?;
        for v in t.iter() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    let io = |e| Error::io(path, e);
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::input(format!(
            "{} is not a model checkpoint",
            path.display()
        )));
    }
    let mut word = [0u8; 8];
    let mut read_u64 = |r: &mut BufReader<File>| -> Result<u64> {
        r.read_exact(&mut word).map_err(io)?;
        Ok(u64::from_le_bytes(word))
    };
    let len = read_u64(&mut r)? as usize;
    if len > 1 << 20 {
        return Err(Error::input("checkpoint header too large"));
    }
    let mut cfg = vec![0u8; len];
    r.read_exact(&mut cfg).map_err(io)?;
    let config: ModelConfig = serde_json::from_slice(&cfg)?;
    config.validate()?;
    let n = config.layer_dims().len();
    let mut tensors = Vec::with_capacity(2 * n);
    for _ in 0..2 * n {
        let rows = read_u64(&mut r)? as usize;
        let cols = read_u64(&mut r)? as usize;
        if rows.saturating_mul(cols) > 1 << 28 {
            return Err(Error::input("checkpoint tensor too large"));
        }
        let mut data = vec![0u8; rows * cols * 8];
        r.read_exact(&mut data).map_err(io)?;
        let vals = data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        tensors.push(Array2::from_shape_vec((rows, cols), vals).expect("sized buffer"));
    }
    let biases = tensors.split_off(n);
    ModelParams::from_parts(config, tensors, biases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::model::Arch;

    #[test]
    fn roundtrip() {
        let p = ModelParams::init(
            ModelConfig {
                arch: Arch::Gcn,
                layers: 3,
                hidden: 8,
                in_dim: 5,
                n_classes: 4,
                dropout: 0.2,
            },
            9,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_checkpoint(&p, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), p);
        std::fs::write(&path, b"garbage!").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
