//! Long-range graph toolkit.
//!
//! Builds eccentricity-labeled road-network style datasets, trains small
//! message-passing models on hop-bounded ego-networks, and measures how far
//! a trained model actually looks through Jacobian influence scores and
//! spectral over-smoothing diagnostics.
//!
//! Data-parallel loops (per-node eccentricities, per-node Jacobians, triangle
//! counts, operator products) go through [`exec::Exec`], which runs on rayon
//! when the `parallel` feature is enabled and falls back to plain iteration
//! otherwise.

pub mod error;
pub mod exec;
pub mod gnn;
pub mod graph;
pub mod influence;
pub mod ingest;
pub mod labeling;
pub mod netstats;
pub mod oracle;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::Exec;
pub use graph::Graph;
