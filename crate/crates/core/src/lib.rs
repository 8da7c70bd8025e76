//! Collaborative filtering with polynomial spectral graph filters.
//!
//! Embeddings live on the user-item bipartite graph and are propagated with a
//! Jacobi (or Chebyshev, Legendre, monomial, Bernstein) polynomial of the
//! normalized adjacency. The crate covers the whole loop: loading and
//! splitting interaction data, building the graph, training with BPR and
//! Adam, full-ranking evaluation, and dense spectral analysis of small
//! subgraphs.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod pipeline;
pub mod polybasis;
pub mod propagation;
pub mod rng;
pub mod spectral;
pub mod synthetic;
pub mod training;

pub use checkpoint::Checkpoint;
pub use config::RunConfig;
pub use dataset::{load_interactions, split_dataset, InteractionDataset, PairFormat, Splits};
pub use error::{Error, Result};
pub use evaluation::{evaluate, MetricsReport};
pub use graph::{build_adjacency, normalize_adjacency, NormalizedAdjacency, SparseAdjacency};
pub use polybasis::{BasisKind, FilterParams, ResponseMode};
pub use propagation::{forward, EmbeddingTable};
pub use training::{fit, TrainConfig};
