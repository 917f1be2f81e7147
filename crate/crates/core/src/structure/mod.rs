//! PC-stable structure learning: skeleton search, collider orientation, Meek
//! closure, and enumeration of the DAGs a CPDAG represents.

mod enumerate;
mod orient;
mod skeleton;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::ci::CiError;

pub use enumerate::{enumerate_dags, Extensions, DEFAULT_EXTENSION_CAP};
pub use orient::{apply_meek_rules, orient_colliders};
pub use skeleton::{learn_skeleton, learn_skeleton_with};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructureError {
    #[error("edge list contains a directed cycle")]
    Cycle,
    #[error("edge ({0}, {1}) is not a valid pair of distinct nodes")]
    InvalidEdge(usize, usize),
    #[error("partially directed graph admits no consistent DAG extension")]
    NoConsistentExtension,
    #[error(transparent)]
    Ci(#[from] CiError),
}

/// Undirected adjacency after conditional-independence pruning, together with
/// the separating set recorded for every removed pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skeleton {
    n: usize,
    adj: Vec<BTreeSet<usize>>,
    #[serde(serialize_with = "pair_map")]
    sep_sets: BTreeMap<(usize, usize), Vec<usize>>,
    /// CI tests that failed numerically; the tested edge was kept.
    pub degenerate_tests: usize,
}

fn pair_map<S: Serializer, V: Serialize>(m: &BTreeMap<(usize, usize), V>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(m.iter().map(|((i, j), v)| (i, j, v)))
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl Skeleton {
    pub fn complete(n: usize) -> Self {
        let adj = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
        Self { n, adj, sep_sets: BTreeMap::new(), degenerate_tests: 0 }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i].contains(&j)
    }

    pub fn neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.adj[i]
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n).flat_map(|i| self.adj[i].range(i + 1..).map(move |&j| (i, j))).collect()
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn sep_set(&self, i: usize, j: usize) -> Option<&[usize]> {
        self.sep_sets.get(&ordered(i, j)).map(Vec::as_slice)
    }

    pub fn sep_sets(&self) -> &BTreeMap<(usize, usize), Vec<usize>> {
        &self.sep_sets
    }

    pub(crate) fn remove_edge(&mut self, i: usize, j: usize, sep: Vec<usize>) {
        self.adj[i].remove(&j);
        self.adj[j].remove(&i);
        self.sep_sets.insert(ordered(i, j), sep);
    }

    /// Builds a skeleton from explicit edges and separating sets.
    pub fn from_parts(
        n: usize,
        edges: &[(usize, usize)],
        sep_sets: BTreeMap<(usize, usize), Vec<usize>>,
    ) -> Result<Self, StructureError> {
        let mut adj = vec![BTreeSet::new(); n];
        for &(i, j) in edges {
            if i == j || i >= n || j >= n {
                return Err(StructureError::InvalidEdge(i, j));
            }
            adj[i].insert(j);
            adj[j].insert(i);
        }
        let sep_sets = sep_sets.into_iter().map(|((i, j), s)| (ordered(i, j), s)).collect();
        Ok(Self { n, adj, sep_sets, degenerate_tests: 0 })
    }
}

/// Which step of the orientation phase fixed a directed edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeOrigin {
    Collider,
    Meek1,
    Meek2,
    Meek3,
    Meek4,
    /// Copied from a fully specified DAG.
    Given,
}

/// Partially directed graph; the output of PC is a CPDAG in this type.
///
/// Internally `marks[i * n + j]` is set when there is an edge `i -> j` or
/// `i -- j`; an undirected edge sets both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cpdag {
    n: usize,
    marks: Vec<bool>,
    origin: BTreeMap<(usize, usize), EdgeOrigin>,
    conflicts: BTreeSet<(usize, usize)>,
}

#[derive(Serialize)]
struct CpdagRepr<'a> {
    n_nodes: usize,
    directed: Vec<(usize, usize, EdgeOrigin)>,
    undirected: Vec<(usize, usize)>,
    conflicts: &'a BTreeSet<(usize, usize)>,
}

impl Serialize for Cpdag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CpdagRepr {
            n_nodes: self.n,
            directed: self
                .directed_edges()
                .into_iter()
                .map(|(a, b)| (a, b, self.origin.get(&(a, b)).copied().unwrap_or(EdgeOrigin::Given)))
                .collect(),
            undirected: self.undirected_edges(),
            conflicts: &self.conflicts,
        }
        .serialize(s)
    }
}

/// Edge state of an unordered pair, seen from its lower-indexed endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairState {
    None,
    Forward,
    Backward,
    Undirected,
}

impl Cpdag {
    pub fn empty(n: usize) -> Self {
        Self { n, marks: vec![false; n * n], origin: BTreeMap::new(), conflicts: BTreeSet::new() }
    }

    /// All skeleton edges undirected.
    pub fn from_skeleton(skel: &Skeleton) -> Self {
        let mut g = Self::empty(skel.n_nodes());
        for (i, j) in skel.edges() {
            g.add_undirected(i, j);
        }
        g
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    fn mark(&self, i: usize, j: usize) -> bool {
        self.marks[i * self.n + j]
    }

    pub fn add_undirected(&mut self, i: usize, j: usize) {
        self.marks[i * self.n + j] = true;
        self.marks[j * self.n + i] = true;
        self.origin.remove(&(i, j));
        self.origin.remove(&(j, i));
    }

    pub fn add_directed(&mut self, from: usize, to: usize, origin: EdgeOrigin) {
        self.marks[from * self.n + to] = true;
        self.marks[to * self.n + from] = false;
        self.origin.remove(&(to, from));
        self.origin.insert((from, to), origin);
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.mark(i, j) || self.mark(j, i)
    }

    /// True for `from -> to`.
    pub fn is_directed(&self, from: usize, to: usize) -> bool {
        self.mark(from, to) && !self.mark(to, from)
    }

    pub fn is_undirected(&self, i: usize, j: usize) -> bool {
        self.mark(i, j) && self.mark(j, i)
    }

    pub fn pair_state(&self, i: usize, j: usize) -> PairState {
        match (self.mark(i, j), self.mark(j, i)) {
            (false, false) => PairState::None,
            (true, false) => PairState::Forward,
            (false, true) => PairState::Backward,
            (true, true) => PairState::Undirected,
        }
    }

    pub fn origin(&self, from: usize, to: usize) -> Option<EdgeOrigin> {
        self.origin.get(&(from, to)).copied()
    }

    pub fn parents(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&p| self.is_directed(p, i)).collect()
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&c| self.is_directed(i, c)).collect()
    }

    pub fn undirected_neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&k| k != i && self.is_undirected(i, k)).collect()
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&k| k != i && self.adjacent(i, k)).collect()
    }

    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| self.is_directed(a, b)).collect()
    }

    /// Undirected edges as `(i, j)` with `i < j`.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|&(a, b)| self.is_undirected(a, b)).collect()
    }

    /// Skeleton edges as `(i, j)` with `i < j`.
    pub fn skeleton_edges(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|&(a, b)| self.adjacent(a, b)).collect()
    }

    pub fn n_edges(&self) -> usize {
        self.skeleton_edges().len()
    }

    /// Edges on which collider orientations disagreed; they were left undirected.
    pub fn conflicts(&self) -> &BTreeSet<(usize, usize)> {
        &self.conflicts
    }

    pub(crate) fn add_conflict(&mut self, i: usize, j: usize) {
        self.conflicts.insert(ordered(i, j));
    }

    /// Unshielded colliders `a -> k <- b` as `(a, k, b)` with `a < b`.
    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for k in 0..self.n {
            let pa = self.parents(k);
            for (x, &a) in pa.iter().enumerate() {
                for &b in &pa[x + 1..] {
                    if !self.adjacent(a, b) {
                        out.insert((a, k, b));
                    }
                }
            }
        }
        out
    }

    /// Whether a directed path `from -> ... -> to` exists.
    pub fn has_directed_path(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend(self.children(v).into_iter().filter(|&c| !seen[c]));
        }
        false
    }

    pub fn directed_part_is_acyclic(&self) -> bool {
        topological_order(self.n, |v| self.parents(v)).is_some()
    }

    /// Re-indexes nodes into a graph on `n_total` nodes; node `k` becomes `map[k]`.
    pub fn relabel(&self, n_total: usize, map: &[usize]) -> Cpdag {
        let mut g = Cpdag::empty(n_total);
        for (a, b) in self.undirected_edges() {
            g.add_undirected(map[a], map[b]);
        }
        for (a, b) in self.directed_edges() {
            g.add_directed(map[a], map[b], self.origin(a, b).unwrap_or(EdgeOrigin::Given));
        }
        for &(a, b) in &self.conflicts {
            g.add_conflict(map[a], map[b]);
        }
        g
    }
}

/// Structural Hamming distance: number of node pairs whose edge state differs.
pub fn structural_hamming_distance(a: &Cpdag, b: &Cpdag) -> usize {
    assert_eq!(a.n_nodes(), b.n_nodes(), "graphs over different node sets");
    let n = a.n_nodes();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| a.pair_state(i, j) != b.pair_state(i, j))
        .count()
}

/// Kahn's algorithm with a min-heap, so ties resolve to the lowest index.
fn topological_order(n: usize, parents: impl Fn(usize) -> Vec<usize>) -> Option<Vec<usize>> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let pa: Vec<Vec<usize>> = (0..n).map(&parents).collect();
    let mut indegree: Vec<usize> = pa.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (v, ps) in pa.iter().enumerate() {
        for &p in ps {
            children[p].push(v);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| indegree[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// A directed acyclic graph stored as sorted parent lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize)]
#[serde(try_from = "DagRepr")]
pub struct Dag {
    n_nodes: usize,
    parents: Vec<Vec<usize>>,
}

#[derive(serde::Deserialize)]
struct DagRepr {
    n_nodes: usize,
    parents: Vec<Vec<usize>>,
}

impl TryFrom<DagRepr> for Dag {
    type Error = StructureError;

    fn try_from(r: DagRepr) -> Result<Self, Self::Error> {
        if r.parents.len() != r.n_nodes {
            return Err(StructureError::InvalidEdge(r.parents.len(), r.n_nodes));
        }
        let edges: Vec<_> = r.parents.iter().enumerate().flat_map(|(c, ps)| ps.iter().map(move |&p| (p, c))).collect();
        Dag::from_edges(r.n_nodes, &edges)
    }
}

impl Dag {
    pub fn empty(n: usize) -> Self {
        Self { n_nodes: n, parents: vec![Vec::new(); n] }
    }

    /// Builds a DAG from `(parent, child)` pairs.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, StructureError> {
        let mut parents = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a == b || a >= n || b >= n {
                return Err(StructureError::InvalidEdge(a, b));
            }
            parents[b].insert(a);
        }
        let dag = Self { n_nodes: n, parents: parents.into_iter().map(|s| s.into_iter().collect()).collect() };
        if dag.topological_order_opt().is_none() {
            return Err(StructureError::Cycle);
        }
        Ok(dag)
    }

    /// Reads a DAG off a fully directed [`Cpdag`].
    pub fn from_cpdag(g: &Cpdag) -> Result<Self, StructureError> {
        if let Some(&(i, j)) = g.undirected_edges().first() {
            return Err(StructureError::InvalidEdge(i, j));
        }
        Self::from_edges(g.n_nodes(), &g.directed_edges())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    /// `(parent, child)` pairs ordered by child, then parent.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> =
            self.parents.iter().enumerate().flat_map(|(c, ps)| ps.iter().map(move |&p| (p, c))).collect();
        e.sort_unstable();
        e
    }

    pub fn n_edges(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    fn topological_order_opt(&self) -> Option<Vec<usize>> {
        topological_order(self.n_nodes, |v| self.parents[v].clone())
    }

    /// Parents before children; ties broken by lowest index.
    pub fn topological_order(&self) -> Vec<usize> {
        self.topological_order_opt().expect("Dag invariant: acyclic")
    }

    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        self.as_pdag().v_structures()
    }

    pub fn as_pdag(&self) -> Cpdag {
        let mut g = Cpdag::empty(self.n_nodes);
        for (p, c) in self.edges() {
            g.add_directed(p, c, EdgeOrigin::Given);
        }
        g
    }

    /// Representative CPDAG of this DAG's Markov equivalence class.
    pub fn to_cpdag(&self) -> Cpdag {
        let dir = self.as_pdag();
        let mut g = Cpdag::empty(self.n_nodes);
        for (a, b) in dir.skeleton_edges() {
            g.add_undirected(a, b);
        }
        for (a, k, b) in dir.v_structures() {
            g.add_directed(a, k, EdgeOrigin::Collider);
            g.add_directed(b, k, EdgeOrigin::Collider);
        }
        apply_meek_rules(&g)
    }

    /// Same skeleton, same unshielded colliders, and every directed edge of
    /// `g` kept.
    pub fn is_extension_of(&self, g: &Cpdag) -> bool {
        let mine = self.as_pdag();
        mine.skeleton_edges() == g.skeleton_edges()
            && g.directed_edges().iter().all(|&(a, b)| mine.is_directed(a, b))
            && mine.v_structures() == g.v_structures()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dag_rejects_cycles_and_self_loops() {
        assert_eq!(Dag::from_edges(3, &[(0, 1), (1, 2), (2, 0)]), Err(StructureError::Cycle));
        assert_eq!(Dag::from_edges(2, &[(1, 1)]), Err(StructureError::InvalidEdge(1, 1)));
        let d = Dag::from_edges(3, &[(2, 0), (0, 1)]).unwrap();
        assert_eq!(d.topological_order(), [2, 0, 1]);
        assert_eq!(d.parents(1), [0]);
    }

    #[test]
    fn cpdag_edge_states() {
        let mut g = Cpdag::empty(3);
        g.add_undirected(0, 1);
        g.add_directed(2, 1, EdgeOrigin::Collider);
        assert!(g.is_undirected(1, 0));
        assert!(g.is_directed(2, 1) && !g.is_directed(1, 2));
        assert_eq!(g.pair_state(1, 2), PairState::Backward);
        assert_eq!(g.parents(1), [2]);
        assert_eq!(g.skeleton_edges(), [(0, 1), (1, 2)]);
        assert_eq!(g.origin(2, 1), Some(EdgeOrigin::Collider));
    }

    #[test]
    fn collider_dag_cpdag_is_fully_directed() {
        let d = Dag::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let g = d.to_cpdag();
        assert_eq!(g.directed_edges(), [(0, 2), (1, 2)]);
        assert!(g.undirected_edges().is_empty());
        assert!(d.is_extension_of(&g));
    }

    #[test]
    fn chain_cpdag_is_undirected() {
        let d = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let g = d.to_cpdag();
        assert_eq!(g.undirected_edges(), [(0, 1), (1, 2)]);
        assert!(g.directed_edges().is_empty());
    }

    #[test]
    fn shd_counts_pair_mismatches() {
        let a = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap().as_pdag();
        let b = Dag::from_edges(3, &[(1, 0), (0, 2)]).unwrap().as_pdag();
        assert_eq!(structural_hamming_distance(&a, &a), 0);
        assert_eq!(structural_hamming_distance(&a, &b), 3);
    }

    #[test]
    fn relabel_moves_edges() {
        let mut g = Cpdag::empty(2);
        g.add_directed(0, 1, EdgeOrigin::Meek1);
        let h = g.relabel(4, &[3, 1]);
        assert!(h.is_directed(3, 1));
        assert_eq!(h.origin(3, 1), Some(EdgeOrigin::Meek1));
        assert_eq!(h.n_edges(), 1);
    }
}
