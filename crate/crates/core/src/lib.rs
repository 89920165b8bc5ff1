//! Influence prediction and influence maximization on undirected networks.
//!
//! The pipeline labels nodes with SIR Monte Carlo influence, pretrains a
//! graph-attention regressor on synthetic graphs, picks representative nodes
//! of a target graph from a relative-entropy correlation network, fine-tunes
//! on their simulated labels, and feeds the predicted influence into an
//! overlap-aware greedy seed selector.

pub mod error;
pub mod gnn;
pub mod graph;
pub mod imp;
pub mod metrics;
pub mod rankers;
pub mod rng;
pub mod sampler;
pub mod sir;
mod table;

pub use error::{Error, Result};
pub use graph::Graph;
