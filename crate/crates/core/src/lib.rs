//! Homophily boosting for graphs with discrete node features.
//!
//! The library is organized around four pieces:
//!
//! - [`graph`]: an immutable undirected graph with sparse binary node
//!   features and (optionally partial) node labels.
//! - [`homophily`]: the homophily metric suite (share, feature, edge, and
//!   adjusted homophily) with soft-label support for augmented graphs.
//! - [`transform`]: the feature-node graph transformation that provably
//!   boosts homophily, the naive all-pairs booster it replaces, and
//!   executable checkers for the accompanying guarantees.
//! - [`gnn`]: a desk-scale self-gated GNN over transformed graphs, with a
//!   small reverse-mode differentiation tape, an Adam trainer, and
//!   gradient verification hooks.

pub mod gnn;
pub mod graph;
pub mod homophily;
pub mod kahan;
pub mod textfmt;
pub mod transform;

#[cfg(test)]
pub(crate) mod testutil;

pub use graph::{ClassId, FeatureId, Graph, NodeId, NodeLabel, SoftLabeledGraph, SparseVec};
pub use homophily::HomophilyReport;
pub use transform::{NodeKind, TheoremReport, TransformedGraph};
