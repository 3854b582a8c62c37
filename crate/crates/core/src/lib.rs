//! Planted densest-k-subgraph toolkit: semi-random instance generation, the
//! vector relaxation and its solver, threshold-and-prune recovery, and exact
//! oracles for auditing the guarantees.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`, which is what the solver works in.

pub mod error;
pub mod graph;
pub mod instance;
pub mod linalg;
pub mod oracles;
pub mod rng;
pub mod rounding;
pub mod scalar;
pub mod sdp;

pub use error::{DksError, Result};
pub use graph::VertexSubset;
pub use scalar::Scalar;

pub type Graph = graph::WeightedGraph<f64>;
pub type Instance = instance::PlantedInstance<f64>;
pub type Params = instance::ModelParams<f64>;
pub type Recovery = rounding::RecoveryResult<f64>;
