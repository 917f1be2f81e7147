use std::io::Write;

use super::{ClusterAssignment, NetworkError};
use crate::fmt_f64;
use nalgebra::DMatrix;

/// One window's community labels, keyed by the assets present in it.
#[derive(Debug, Clone, Copy)]
pub struct Membership<'a> {
    pub assets: &'a [String],
    pub assignment: &'a ClusterAssignment,
}

/// How often each pair of assets shares a community, over the windows in
/// which both are present.
#[derive(Debug, Clone, PartialEq)]
pub struct CoClusterMatrix {
    pub assets: Vec<String>,
    pub frequency: DMatrix<f64>,
    /// Windows in which both assets shared a community.
    pub together: DMatrix<usize>,
    /// Windows in which both assets were present.
    pub shared: DMatrix<usize>,
    pub window_count: usize,
}

pub fn cocluster(windows: &[Membership<'_>], universe: &[String]) -> Result<CoClusterMatrix, NetworkError> {
    if windows.is_empty() {
        return Err(NetworkError::NoAssignments);
    }
    let n = universe.len();
    let mut together = DMatrix::<usize>::zeros(n, n);
    let mut shared = DMatrix::<usize>::zeros(n, n);
    for w in windows {
        if w.assignment.labels.len() != w.assets.len() {
            return Err(NetworkError::LabelCountMismatch { labels: w.assignment.labels.len(), assets: w.assets.len() });
        }
        let label: Vec<Option<usize>> =
            universe.iter().map(|u| w.assets.iter().position(|a| a == u).map(|k| w.assignment.labels[k])).collect();
        for a in 0..n {
            for b in 0..n {
                if let (Some(la), Some(lb)) = (label[a], label[b]) {
                    shared[(a, b)] += 1;
                    if la == lb {
                        together[(a, b)] += 1;
                    }
                }
            }
        }
    }
    let frequency = DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            1.0
        } else if shared[(a, b)] == 0 {
            0.0
        } else {
            together[(a, b)] as f64 / shared[(a, b)] as f64
        }
    });
    Ok(CoClusterMatrix { assets: universe.to_vec(), frequency, together, shared, window_count: windows.len() })
}

impl CoClusterMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.assets.iter().position(|x| x == a)?;
        let j = self.assets.iter().position(|x| x == b)?;
        Some(self.frequency[(i, j)])
    }

    /// Square matrix with an `asset` header column.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["asset".to_string()];
        header.extend(self.assets.iter().cloned());
        w.write_record(&header)?;
        for (i, a) in self.assets.iter().enumerate() {
            let mut row = vec![a.clone()];
            row.extend(self.frequency.row(i).iter().map(|&x| fmt_f64(x)));
            w.write_record(&row)?;
        }
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assignment(labels: &[usize]) -> ClusterAssignment {
        let n_communities = labels.iter().max().map_or(0, |m| m + 1);
        ClusterAssignment { labels: labels.to_vec(), modularity: 0.0, n_communities }
    }

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn counts_shared_windows() {
        let u = names(&["DKK", "EUR", "JPY"]);
        // EUR-JPY together in 3 of 12 windows, DKK-EUR in the other 9.
        let labs: Vec<ClusterAssignment> =
            (0..12).map(|k| if k < 3 { assignment(&[0, 1, 1]) } else { assignment(&[0, 0, 1]) }).collect();
        let w: Vec<Membership> = labs.iter().map(|l| Membership { assets: &u, assignment: l }).collect();
        let m = cocluster(&w, &u).unwrap();
        assert_eq!(m.get("DKK", "EUR"), Some(0.75));
        assert_eq!(m.get("EUR", "JPY"), Some(0.25));
        assert_eq!(m.get("DKK", "JPY"), Some(0.0));
        assert_eq!(m.get("JPY", "JPY"), Some(1.0));
        assert_eq!(m.window_count, 12);
        assert_eq!(m.frequency, m.frequency.transpose());
    }

    #[test]
    fn always_together_is_one() {
        let u = names(&["DKK", "EUR"]);
        let l = assignment(&[0, 0]);
        let w = vec![Membership { assets: &u, assignment: &l }; 5];
        assert_eq!(cocluster(&w, &u).unwrap().get("EUR", "DKK"), Some(1.0));
    }

    #[test]
    fn absent_assets_leave_the_denominator() {
        let u = names(&["A", "B", "C"]);
        let ab = names(&["A", "B"]);
        let abc_l = assignment(&[0, 1, 1]);
        let ab_l = assignment(&[0, 0]);
        let w = vec![Membership { assets: &u, assignment: &abc_l }, Membership { assets: &ab, assignment: &ab_l }];
        let m = cocluster(&w, &u).unwrap();
        assert_eq!(m.get("A", "B"), Some(0.5));
        assert_eq!(m.shared[(1, 2)], 1);
        assert_eq!(m.get("B", "C"), Some(1.0));
    }

    #[test]
    fn errors() {
        assert_eq!(cocluster(&[], &names(&["A"])), Err(NetworkError::NoAssignments));
        let u = names(&["A", "B"]);
        let l = assignment(&[0]);
        assert!(matches!(
            cocluster(&[Membership { assets: &u, assignment: &l }], &u),
            Err(NetworkError::LabelCountMismatch { .. })
        ));
    }
}
