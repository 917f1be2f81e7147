use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::NetworkError;
use crate::contagion::NecoModel;
use crate::structure::Cpdag;

/// Undirected graph with non-negative finite edge weights and no self-loops.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedGraph {
    nodes: Vec<String>,
    edges: BTreeMap<(usize, usize), f64>,
}

impl WeightedGraph {
    pub fn new(nodes: Vec<String>) -> Self {
        Self { nodes, edges: BTreeMap::new() }
    }

    /// Adds or replaces the edge `{a, b}`.
    pub fn add_edge(&mut self, a: usize, b: usize, weight: f64) -> Result<(), NetworkError> {
        let n = self.nodes.len();
        if a == b || a >= n || b >= n {
            return Err(NetworkError::InvalidEdge(a, b));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(NetworkError::InvalidWeight(weight));
        }
        self.edges.insert((a.min(b), a.max(b)), weight);
        Ok(())
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.edges.get(&(a.min(b), a.max(b))).copied()
    }

    /// Edges as `((a, b), w)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.edges.iter().map(|(&k, &w)| (k, w))
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    /// The same graph with nodes sorted by name; returns the graph and, for
    /// each new index, the old one.
    pub fn canonicalize(&self) -> (WeightedGraph, Vec<usize>) {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| self.nodes[a].cmp(&self.nodes[b]));
        let mut new_of = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_of[old] = new;
        }
        let mut g = WeightedGraph::new(order.iter().map(|&o| self.nodes[o].clone()).collect());
        for ((a, b), w) in self.edges() {
            g.edges.insert((new_of[a].min(new_of[b]), new_of[a].max(new_of[b])), w);
        }
        (g, order)
    }
}

/// How skeleton edges are weighted for clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeWeighting {
    /// `|beta|` from the point-extension model; 1 where no coefficient exists.
    #[default]
    Beta,
    Unit,
}

/// Undirected projection of a CPDAG whose node `k` is `names[k]`.
pub fn project_cpdag(
    cpdag: &Cpdag,
    names: &[String],
    model: Option<&NecoModel>,
    weighting: EdgeWeighting,
) -> Result<WeightedGraph, NetworkError> {
    if names.len() != cpdag.n_nodes() {
        return Err(NetworkError::NodeCountMismatch { names: names.len(), nodes: cpdag.n_nodes() });
    }
    let coefficient = |from: &str, to: &str| -> Option<f64> {
        let m = model?;
        let child = m.assets.iter().position(|a| a == to)?;
        let parent = m.assets.iter().position(|a| a == from)?;
        m.fits[child].beta_from(parent)
    };
    let mut g = WeightedGraph::new(names.to_vec());
    for (a, b) in cpdag.skeleton_edges() {
        let w = match weighting {
            EdgeWeighting::Unit => 1.0,
            EdgeWeighting::Beta => coefficient(&names[a], &names[b])
                .or_else(|| coefficient(&names[b], &names[a]))
                .map(f64::abs)
                .unwrap_or(1.0),
        };
        g.add_edge(a, b, w)?;
    }
    Ok(g)
}

/// Skeleton edges over the number of node pairs.
pub fn density(cpdag: &Cpdag) -> Result<f64, NetworkError> {
    let n = cpdag.n_nodes();
    if n < 2 {
        return Err(NetworkError::TooFewNodes(n));
    }
    Ok(cpdag.n_edges() as f64 / (n * (n - 1) / 2) as f64)
}
