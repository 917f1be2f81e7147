use std::collections::BTreeSet;

use super::{apply_meek_rules, Cpdag, Dag, EdgeOrigin, StructureError};

pub const DEFAULT_EXTENSION_CAP: usize = 256;

/// Consistent DAG extensions of a CPDAG, in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Extensions {
    pub dags: Vec<Dag>,
    /// More extensions exist than `cap` allowed.
    pub truncated: bool,
}

/// Lists the DAGs with the skeleton and unshielded colliders of `cpdag` that
/// keep all of its directed edges, up to `cap` of them.
///
/// Undirected edges are resolved in lexicographic order, trying the
/// lower-to-higher index orientation first, with Meek propagation after each
/// choice. The first DAG returned therefore prefers `low -> high` on every
/// edge where the equivalence class leaves a choice.
pub fn enumerate_dags(cpdag: &Cpdag, cap: usize) -> Result<Extensions, StructureError> {
    let target = cpdag.v_structures();
    let mut out = Vec::new();
    let mut truncated = false;
    let start = apply_meek_rules(cpdag);
    if start.directed_part_is_acyclic() && start.v_structures() == target {
        search(start, &target, cap, &mut out, &mut truncated);
    }
    if out.is_empty() {
        return Err(StructureError::NoConsistentExtension);
    }
    Ok(Extensions { dags: out, truncated })
}

fn search(g: Cpdag, target: &BTreeSet<(usize, usize, usize)>, cap: usize, out: &mut Vec<Dag>, truncated: &mut bool) {
    if *truncated {
        return;
    }
    let Some(&(i, j)) = g.undirected_edges().first() else {
        if let Ok(dag) = Dag::from_cpdag(&g) {
            if out.len() == cap {
                *truncated = true;
            } else {
                out.push(dag);
            }
        }
        return;
    };
    for (a, b) in [(i, j), (j, i)] {
        if g.has_directed_path(b, a) {
            continue;
        }
        let mut h = g.clone();
        h.add_directed(a, b, EdgeOrigin::Given);
        let h = apply_meek_rules(&h);
        // Directed v-structures survive into every completion, so a new one
        // rules out the whole branch.
        if !h.directed_part_is_acyclic() || !h.v_structures().is_subset(target) {
            continue;
        }
        search(h, target, cap, out, truncated);
        if *truncated {
            return;
        }
    }
}
