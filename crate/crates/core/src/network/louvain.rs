//! Two-phase Louvain modularity optimisation (local moving, then aggregation).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::WeightedGraph;

const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterAssignment {
    /// Community id per node; ids are contiguous from 0 in order of first
    /// appearance by node index.
    pub labels: Vec<usize>,
    pub modularity: f64,
    pub n_communities: usize,
}

impl ClusterAssignment {
    pub fn members(&self, community: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == community).collect()
    }
}

/// Modularity after every local-moving sweep and after every level.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LouvainTrace {
    pub sweeps: Vec<f64>,
    pub levels: Vec<f64>,
}

/// Symmetric weighted adjacency; a self-loop entry `a[i][i]` counts both
/// endpoints, so `degree[i] = sum_j a[i][j]`.
struct Level {
    adj: Vec<BTreeMap<usize, f64>>,
    degree: Vec<f64>,
}

impl Level {
    fn from_graph(g: &WeightedGraph) -> Self {
        let n = g.n_nodes();
        let mut adj = vec![BTreeMap::new(); n];
        for ((a, b), w) in g.edges() {
            if w > 0.0 {
                adj[a].insert(b, w);
                adj[b].insert(a, w);
            }
        }
        Self::with_adj(adj)
    }

    fn with_adj(adj: Vec<BTreeMap<usize, f64>>) -> Self {
        let degree = adj.iter().map(|row| row.values().sum()).collect();
        Self { adj, degree }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn modularity(&self, comm: &[usize], two_m: f64, resolution: f64) -> f64 {
        if two_m <= 0.0 {
            return 0.0;
        }
        let k = comm.iter().max().map_or(0, |m| m + 1);
        let mut inside = vec![0.0; k];
        let mut tot = vec![0.0; k];
        for (i, row) in self.adj.iter().enumerate() {
            tot[comm[i]] += self.degree[i];
            for (&j, &w) in row {
                if comm[j] == comm[i] {
                    inside[comm[i]] += w;
                }
            }
        }
        inside.iter().zip(&tot).map(|(a, t)| a / two_m - resolution * (t / two_m).powi(2)).sum()
    }

    /// Moves nodes between communities until a full sweep makes no move.
    /// Returns whether anything moved.
    fn local_moving(
        &self,
        comm: &mut [usize],
        order: &[usize],
        two_m: f64,
        resolution: f64,
        trace: &mut LouvainTrace,
    ) -> bool {
        let mut tot = vec![0.0; self.len()];
        for i in 0..self.len() {
            tot[comm[i]] += self.degree[i];
        }
        let mut any_move = false;
        loop {
            let mut moved = false;
            for &i in order {
                let ki = self.degree[i];
                if ki == 0.0 {
                    continue;
                }
                let own = comm[i];
                let mut links: BTreeMap<usize, f64> = BTreeMap::new();
                for (&j, &w) in &self.adj[i] {
                    if j != i {
                        *links.entry(comm[j]).or_default() += w;
                    }
                }
                tot[own] -= ki;
                let gain = |c: usize, link: f64| link - resolution * tot[c] * ki / two_m;
                let stay = gain(own, links.get(&own).copied().unwrap_or(0.0));
                let mut best = (own, stay);
                // BTreeMap iterates in increasing community id, so strict
                // improvement keeps the lowest id among equal gains.
                for (&c, &link) in links.iter().filter(|(&c, _)| c != own) {
                    let g = gain(c, link);
                    let bar = if best.0 == own { stay + GAIN_EPS } else { best.1 };
                    if g > bar {
                        best = (c, g);
                    }
                }
                tot[best.0] += ki;
                if best.0 != own {
                    comm[i] = best.0;
                    moved = true;
                    any_move = true;
                }
            }
            trace.sweeps.push(self.modularity(comm, two_m, resolution));
            if !moved {
                return any_move;
            }
        }
    }

    fn aggregate(&self, comm: &[usize], k: usize) -> Level {
        let mut adj = vec![BTreeMap::new(); k];
        for (i, row) in self.adj.iter().enumerate() {
            for (&j, &w) in row {
                *adj[comm[i]].entry(comm[j]).or_insert(0.0) += w;
            }
        }
        Level::with_adj(adj)
    }
}

/// Relabels to contiguous ids in order of first appearance.
fn compact(labels: &mut [usize]) -> usize {
    let mut map = BTreeMap::new();
    for l in labels.iter_mut() {
        let next = map.len();
        *l = *map.entry(*l).or_insert(next);
    }
    map.len()
}

/// Louvain at resolution 1. Nodes are visited in index order, or in a
/// seeded random order when `seed` is given.
pub fn louvain(g: &WeightedGraph, seed: Option<u64>) -> ClusterAssignment {
    louvain_traced(g, seed, 1.0).0
}

pub fn louvain_traced(g: &WeightedGraph, seed: Option<u64>, resolution: f64) -> (ClusterAssignment, LouvainTrace) {
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut level = Level::from_graph(g);
    let two_m: f64 = level.degree.iter().sum();
    let mut labels: Vec<usize> = (0..g.n_nodes()).collect();
    let mut trace = LouvainTrace::default();

    if two_m > 0.0 {
        loop {
            let mut comm: Vec<usize> = (0..level.len()).collect();
            let mut order: Vec<usize> = (0..level.len()).collect();
            if let Some(r) = rng.as_mut() {
                order.shuffle(r);
            }
            let moved = level.local_moving(&mut comm, &order, two_m, resolution, &mut trace);
            let k = compact(&mut comm);
            for l in labels.iter_mut() {
                *l = comm[*l];
            }
            trace.levels.push(level.modularity(&comm, two_m, resolution));
            if !moved || k == level.len() {
                break;
            }
            level = level.aggregate(&comm, k);
        }
    }
    let n_communities = compact(&mut labels);
    let modularity = modularity(g, &labels, resolution);
    (ClusterAssignment { labels, modularity, n_communities }, trace)
}

/// Newman-Girvan modularity of a labelling; 0 for graphs without weight.
pub fn modularity(g: &WeightedGraph, labels: &[usize], resolution: f64) -> f64 {
    let level = Level::from_graph(g);
    let two_m: f64 = level.degree.iter().sum();
    level.modularity(labels, two_m, resolution)
}
