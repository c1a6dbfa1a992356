//! Fine-grained topic discovery by distilling sparse teacher supervision into a
//! lightweight embedding adapter.
//!
//! The flow is: sample item pairs from a corpus, label them with a teacher
//! (binary same-topic judgments or teacher-embedding cosines), train a residual
//! adapter over frozen base embeddings with the CoSENT ranking loss, then cluster
//! the adapted embeddings with thresholded community detection and evaluate the
//! result with pairwise AUC, cluster purity, and the purity/granularity Pareto
//! curve.

pub mod cluster;
pub mod config;
pub mod corpus;
pub mod digest;
pub mod distill;
pub mod embedding;
pub mod error;
pub mod metrics;
pub mod pairs;
pub mod pipeline;
pub mod rng;
pub mod sampling;
pub mod teacher;

pub use cluster::{cluster_count_fraction, community_detect, Cluster, ClusterResult};
pub use config::RunConfig;
pub use corpus::{Corpus, CorpusItem};
pub use embedding::{normalize_rows, EmbeddingSet, Role};
pub use error::{Error, Result};
pub use pairs::{PairDataset, PairRecord, Provenance, Split};
