use itertools::Itertools;
use rayon::prelude::*;

use super::{Skeleton, StructureError};
use crate::ci::{CiError, CorrMatrix, FisherZTest, IndependenceTest};

/// PC-stable adjacency search with Fisher-z tests on `corr`.
pub fn learn_skeleton(corr: &CorrMatrix, alpha: f64, max_cond: Option<usize>) -> Result<Skeleton, StructureError> {
    let test = FisherZTest::new(corr, alpha)?;
    Ok(learn_skeleton_with(&test, max_cond))
}

struct PairOutcome {
    sep: Option<Vec<usize>>,
    degenerate: usize,
}

/// PC-stable adjacency search against any independence oracle.
///
/// At each level the neighbourhoods used to enumerate conditioning sets are
/// frozen, so removals within a level never influence other tests of that
/// level and the result does not depend on variable order.
pub fn learn_skeleton_with<T: IndependenceTest + ?Sized>(test: &T, max_cond: Option<usize>) -> Skeleton {
    let n = test.n_vars();
    let mut skel = Skeleton::complete(n);
    let level_cap = max_cond.unwrap_or(usize::MAX).min(test.max_conditioning());

    let mut level = 0usize;
    loop {
        let frozen: Vec<Vec<usize>> = (0..n).map(|i| skel.neighbors(i).iter().copied().collect()).collect();
        let pairs = skel.edges();
        let any_testable = pairs.iter().any(|&(i, j)| frozen[i].len() > level || frozen[j].len() > level);
        if level > level_cap || !any_testable {
            break;
        }

        let outcomes: Vec<PairOutcome> =
            pairs.par_iter().map(|&(i, j)| search_pair(test, &frozen, i, j, level)).collect();
        for (&(i, j), out) in pairs.iter().zip(outcomes) {
            skel.degenerate_tests += out.degenerate;
            if let Some(sep) = out.sep {
                skel.remove_edge(i, j, sep);
            }
        }
        level += 1;
    }
    skel
}

fn search_pair<T: IndependenceTest + ?Sized>(
    test: &T,
    frozen: &[Vec<usize>],
    i: usize,
    j: usize,
    level: usize,
) -> PairOutcome {
    let mut degenerate = 0;
    let from_i: Vec<usize> = frozen[i].iter().copied().filter(|&k| k != j).collect();
    let from_j: Vec<usize> = frozen[j].iter().copied().filter(|&k| k != i).collect();
    for (side, cand) in [&from_i, &from_j].into_iter().enumerate() {
        if cand.len() < level {
            continue;
        }
        for s in cand.iter().copied().combinations(level) {
            // Subsets of adj(i) were already tried from the first side.
            if side == 1 && s.iter().all(|k| from_i.contains(k)) {
                continue;
            }
            match test.test(i, j, &s) {
                Ok(r) if r.independent => return PairOutcome { sep: Some(s), degenerate },
                Ok(_) => {}
                Err(CiError::Degenerate { .. }) | Err(CiError::NotFinite) => {
                    log::debug!("degenerate CI test for ({i}, {j}) given {s:?}; edge kept");
                    degenerate += 1;
                }
                Err(e) => {
                    log::warn!("CI test for ({i}, {j}) given {s:?} failed: {e}");
                    degenerate += 1;
                }
            }
        }
    }
    PairOutcome { sep: None, degenerate }
}
