use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// Train / validation / test fractions.
pub const DEFAULT_FRACTIONS: [f64; 3] = [0.1, 0.1, 0.8];

/// Seeded permutation of the nodes; the first `round(n * f_train)` are
/// train, the next `round(n * f_val)` validation, the rest test.
pub fn make_split(n_nodes: usize, fractions: [f64; 3], seed: u64) -> Result<Vec<Split>> {
    if fractions.iter().any(|f| !(*f >= 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::input(format!(
            "split fractions must be non-negative and sum to 1, got {fractions:?}"
        )));
    }
    let n_train = (n_nodes as f64 * fractions[0]).round() as usize;
    let n_val = ((n_nodes as f64 * fractions[1]).round() as usize).min(n_nodes - n_train.min(n_nodes));
    let mut order: Vec<usize> = (0..n_nodes).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut split = vec![Split::Test; n_nodes];
    for (rank, &v) in order.iter().enumerate() {
        if rank < n_train {
            split[v] = Split::Train;
        } else if rank < n_train + n_val {
            split[v] = Split::Val;
        }
    }
    Ok(split)
}
