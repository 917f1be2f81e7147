use std::collections::BTreeSet;

use super::{Cpdag, EdgeOrigin, Skeleton};

/// Orients every unshielded triple `i - k - j` whose separating set lacks `k`
/// as `i -> k <- j`.
///
/// All collider claims are collected before any edge is oriented. An edge
/// claimed in both directions is left undirected and recorded in
/// [`Cpdag::conflicts`], which makes the result independent of the order in
/// which triples are visited.
pub fn orient_colliders(skel: &Skeleton) -> Cpdag {
    let n = skel.n_nodes();
    let mut claims: BTreeSet<(usize, usize)> = BTreeSet::new();
    for k in 0..n {
        let nb: Vec<usize> = skel.neighbors(k).iter().copied().collect();
        for (x, &i) in nb.iter().enumerate() {
            for &j in &nb[x + 1..] {
                if skel.adjacent(i, j) {
                    continue;
                }
                match skel.sep_set(i, j) {
                    Some(sep) if !sep.contains(&k) => {
                        claims.insert((i, k));
                        claims.insert((j, k));
                    }
                    Some(_) => {}
                    None => log::warn!("no separating set recorded for non-adjacent ({i}, {j})"),
                }
            }
        }
    }

    let mut g = Cpdag::from_skeleton(skel);
    for &(a, b) in &claims {
        if claims.contains(&(b, a)) {
            log::info!("conflicting collider orientations on edge ({a}, {b}); left undirected");
            g.add_conflict(a, b);
        } else {
            g.add_directed(a, b, EdgeOrigin::Collider);
        }
    }
    g
}

/// Applies Meek's rules R1-R4 until no further edge can be oriented.
pub fn apply_meek_rules(pdag: &Cpdag) -> Cpdag {
    let mut g = pdag.clone();
    let n = g.n_nodes();
    loop {
        let mut changed = false;
        for a in 0..n {
            for b in 0..n {
                if a == b || !g.is_undirected(a, b) {
                    continue;
                }
                let Some(rule) = meek_rule(&g, a, b) else { continue };
                // An inconsistent input (e.g. after collider conflicts) could
                // otherwise close a directed cycle.
                if g.has_directed_path(b, a) {
                    log::info!("orienting {a} -> {b} would close a cycle; edge left undirected");
                    continue;
                }
                g.add_directed(a, b, rule);
                changed = true;
            }
        }
        if !changed {
            return g;
        }
    }
}

/// The first rule that forces `a -> b` for the undirected edge `a - b`.
fn meek_rule(g: &Cpdag, a: usize, b: usize) -> Option<EdgeOrigin> {
    let n = g.n_nodes();
    // R1: c -> a - b, c and b non-adjacent.
    if (0..n).any(|c| c != b && g.is_directed(c, a) && !g.adjacent(c, b)) {
        return Some(EdgeOrigin::Meek1);
    }
    // R2: a -> c -> b.
    if (0..n).any(|c| g.is_directed(a, c) && g.is_directed(c, b)) {
        return Some(EdgeOrigin::Meek2);
    }
    // R3: a - c -> b, a - d -> b, c and d non-adjacent.
    let fork: Vec<usize> = (0..n).filter(|&c| g.is_undirected(a, c) && g.is_directed(c, b)).collect();
    for (x, &c) in fork.iter().enumerate() {
        if fork[x + 1..].iter().any(|&d| !g.adjacent(c, d)) {
            return Some(EdgeOrigin::Meek3);
        }
    }
    // R4: c -> d -> b with a adjacent to c and d, c and b non-adjacent.
    for d in (0..n).filter(|&d| d != a && g.is_directed(d, b) && g.adjacent(a, d)) {
        if (0..n).any(|c| c != a && c != b && g.is_directed(c, d) && g.adjacent(a, c) && !g.adjacent(c, b)) {
            return Some(EdgeOrigin::Meek4);
        }
    }
    None
}
