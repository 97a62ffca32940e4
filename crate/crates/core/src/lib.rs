//! Random-subspace ensembles of graph neural networks for node
//! classification.
//!
//! Each base model is a mean-aggregation message-passing network trained on
//! the subgraph induced by a random fraction `alpha` of the nodes and on a
//! random fraction `beta` of the feature columns. At inference every model
//! sees the whole graph through its own feature mask, and the posteriors are
//! combined by soft, hard or weighted voting.
//!
//! Training of the `k` base models is data-parallel over model indices
//! (feature `parallel`, on by default); results do not depend on the number
//! of worker threads.

mod codec;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod metrics;
pub mod par;
pub mod perturb;
pub mod sampler;

pub use error::{Error, Result};
pub use graph::{Graph, NodeMapping, Splits};
