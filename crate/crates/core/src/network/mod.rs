//! Community detection, density and co-clustering over causal networks.

mod cocluster;
mod graph;
mod louvain;

use thiserror::Error;

pub use cocluster::{cocluster, CoClusterMatrix, Membership};
pub use graph::{density, project_cpdag, EdgeWeighting, WeightedGraph};
pub use louvain::{louvain, louvain_traced, modularity, ClusterAssignment, LouvainTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("edge ({0}, {1}) is not a valid pair of distinct nodes")]
    InvalidEdge(usize, usize),
    #[error("edge weight {0} must be finite and non-negative")]
    InvalidWeight(f64),
    #[error("{names} node names for a graph on {nodes} nodes")]
    NodeCountMismatch { names: usize, nodes: usize },
    #[error("density needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("co-clustering needs at least one assignment")]
    NoAssignments,
    #[error("assignment has {labels} labels for {assets} assets")]
    LabelCountMismatch { labels: usize, assets: usize },
}
