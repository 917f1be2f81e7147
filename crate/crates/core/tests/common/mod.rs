//! Brute-force oracles shared by integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use necof::ci::{partial_correlation, CiError, CiResult, CorrMatrix, IndependenceTest};
use necof::structure::{Cpdag, PairState};

pub type Edges = Vec<(usize, usize)>;

/// Mark of an unordered pair `(a, b)` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mark {
    Forward,
    Backward,
    Undirected,
}

pub type Pattern = BTreeMap<(usize, usize), Mark>;

fn acyclic(n: usize, edges: &[(usize, usize)]) -> bool {
    // Repeatedly strip sinks.
    let mut alive = vec![true; n];
    for _ in 0..n {
        let sink = (0..n).find(|&v| alive[v] && !edges.iter().any(|&(a, b)| a == v && alive[b]));
        match sink {
            Some(v) => alive[v] = false,
            None => return false,
        }
    }
    true
}

/// Every DAG on `n` labelled nodes, by trying all three states of every pair.
pub fn all_dags(n: usize) -> Vec<Edges> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    let total = 3usize.pow(pairs.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        for &(a, b) in &pairs {
            match c % 3 {
                1 => edges.push((a, b)),
                2 => edges.push((b, a)),
                _ => {}
            }
            c /= 3;
        }
        if acyclic(n, &edges) {
            out.push(edges);
        }
    }
    out
}

/// Skeleton plus unshielded colliders `(a, k, b)` with `a < b`.
pub type ClassKey = (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize, usize)>);

pub fn class_key(n: usize, edges: &[(usize, usize)]) -> ClassKey {
    let skel: BTreeSet<(usize, usize)> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let mut vs = BTreeSet::new();
    for k in 0..n {
        let parents: Vec<usize> = edges.iter().filter(|e| e.1 == k).map(|e| e.0).collect();
        for &a in &parents {
            for &b in &parents {
                if a < b && !skel.contains(&(a, b)) {
                    vs.insert((a, k, b));
                }
            }
        }
    }
    (skel, vs)
}

/// Equivalence-class patterns: an edge is directed iff every member DAG
/// orients it the same way.
pub fn class_patterns(n: usize) -> BTreeMap<ClassKey, Pattern> {
    let mut classes: BTreeMap<ClassKey, Vec<Edges>> = BTreeMap::new();
    for d in all_dags(n) {
        classes.entry(class_key(n, &d)).or_default().push(d);
    }
    classes
        .into_iter()
        .map(|(key, members)| {
            let pattern = key
                .0
                .iter()
                .map(|&(a, b)| {
                    let fwd = members.iter().all(|m| m.contains(&(a, b)));
                    let bwd = members.iter().all(|m| m.contains(&(b, a)));
                    let mark = if fwd {
                        Mark::Forward
                    } else if bwd {
                        Mark::Backward
                    } else {
                        Mark::Undirected
                    };
                    ((a, b), mark)
                })
                .collect();
            (key, pattern)
        })
        .collect()
}

pub fn pattern_of(g: &Cpdag) -> Pattern {
    let n = g.n_nodes();
    let mut p = Pattern::new();
    for a in 0..n {
        for b in a + 1..n {
            let mark = match g.pair_state(a, b) {
                PairState::None => continue,
                PairState::Forward => Mark::Forward,
                PairState::Backward => Mark::Backward,
                PairState::Undirected => Mark::Undirected,
            };
            p.insert((a, b), mark);
        }
    }
    p
}

/// Number of pairs whose state differs.
pub fn pattern_distance(a: &Pattern, b: &Pattern) -> usize {
    let keys: BTreeSet<_> = a.keys().chain(b.keys()).collect();
    keys.into_iter().filter(|k| a.get(k) != b.get(k)).count()
}

/// Partial correlation by the first-order recursion.
pub fn recursive_pcor(r: &nalgebra::DMatrix<f64>, i: usize, j: usize, s: &[usize]) -> f64 {
    match s.split_last() {
        None => r[(i, j)],
        Some((&k, rest)) => {
            let rij = recursive_pcor(r, i, j, rest);
            let rik = recursive_pcor(r, i, k, rest);
            let rjk = recursive_pcor(r, j, k, rest);
            (rij - rik * rjk) / ((1.0 - rik * rik) * (1.0 - rjk * rjk)).sqrt()
        }
    }
}

/// Independence oracle from exact (population) partial correlations.
pub struct PopulationTest<'a> {
    pub corr: &'a CorrMatrix,
}

impl IndependenceTest for PopulationTest<'_> {
    fn n_vars(&self) -> usize {
        self.corr.len()
    }

    fn max_conditioning(&self) -> usize {
        self.corr.len()
    }

    fn test(&self, i: usize, j: usize, s: &[usize]) -> Result<CiResult, CiError> {
        let r = partial_correlation(self.corr, i, j, s)?;
        Ok(CiResult {
            i,
            j,
            sep_candidate: s.to_vec(),
            partial_corr: r,
            statistic: r.abs(),
            independent: r.abs() < 1e-9,
            alpha: 0.0,
        })
    }
}

/// Newman-Girvan modularity straight from the definition
/// `Q = 1/2m sum_ij (A_ij - k_i k_j / 2m) [c_i = c_j]`.
pub fn modularity_by_definition(n: usize, edges: &[(usize, usize, f64)], labels: &[usize]) -> f64 {
    let mut a = vec![vec![0.0; n]; n];
    for &(x, y, w) in edges {
        a[x][y] += w;
        a[y][x] += w;
    }
    let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Calls `f` with every set partition of `0..n` as a restricted growth string.
pub fn for_each_partition(n: usize, mut f: impl FnMut(&[usize])) {
    fn rec(labels: &mut Vec<usize>, n: usize, max: usize, f: &mut dyn FnMut(&[usize])) {
        if labels.len() == n {
            f(labels);
            return;
        }
        let next = if labels.is_empty() { 0 } else { max + 1 };
        for l in 0..=next {
            labels.push(l);
            rec(labels, n, max.max(l), f);
            labels.pop();
        }
    }
    if n == 0 {
        f(&[]);
    } else {
        let mut labels = Vec::with_capacity(n);
        rec(&mut labels, n, 0, &mut f);
    }
}
