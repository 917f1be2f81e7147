//! Pearson correlations, partial correlations and the Fisher-z
//! conditional-independence test.

use nalgebra::{DMatrix, DMatrixView};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::market_data::{sample_variance, EPS_VAR};

/// Correlations at or beyond this magnitude are clamped and always treated as
/// dependent.
pub const R_CLAMP: f64 = 1.0 - 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CiError {
    #[error("need at least 4 observations, got {0}")]
    TooFewObservations(usize),
    #[error("column {0} has zero variance")]
    ZeroVariance(usize),
    #[error("invalid correlation matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid index set for partial correlation of ({i}, {j}) given {s:?}")]
    InvalidIndices { i: usize, j: usize, s: Vec<usize> },
    #[error("conditioning set of size {card} is too large for {n_obs} observations")]
    InsufficientSample { n_obs: usize, card: usize },
    #[error("singular correlation submatrix for ({i}, {j}) given {s:?}")]
    Degenerate { i: usize, j: usize, s: Vec<usize> },
    #[error("significance level {0} outside (0, 1)")]
    InvalidAlpha(f64),
    #[error("partial correlation is not finite")]
    NotFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    pub assets: Vec<String>,
    pub values: DMatrix<f64>,
    pub n_obs: usize,
}

impl CorrMatrix {
    /// Validates symmetry, unit diagonal and the `[-1, 1]` range.
    pub fn new(assets: Vec<String>, values: DMatrix<f64>, n_obs: usize) -> Result<Self, CiError> {
        let n = values.nrows();
        if values.ncols() != n || assets.len() != n {
            return Err(CiError::InvalidMatrix(format!(
                "{}x{} matrix for {} assets",
                values.nrows(),
                values.ncols(),
                assets.len()
            )));
        }
        for i in 0..n {
            if (values[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(CiError::InvalidMatrix(format!("diagonal entry {i} is {}", values[(i, i)])));
            }
            for j in 0..i {
                let (a, b) = (values[(i, j)], values[(j, i)]);
                if !a.is_finite() || (a - b).abs() > 1e-12 || a.abs() > 1.0 + 1e-12 {
                    return Err(CiError::InvalidMatrix(format!("entry ({i}, {j}) = {a}")));
                }
            }
        }
        Ok(Self { assets, values, n_obs })
    }

    /// Rescales a covariance matrix to correlations.
    pub fn from_covariance(assets: Vec<String>, cov: &DMatrix<f64>, n_obs: usize) -> Result<Self, CiError> {
        let n = cov.nrows();
        let sd: Vec<f64> = (0..n).map(|i| cov[(i, i)].sqrt()).collect();
        if let Some(i) = sd.iter().position(|s| !(*s > 0.0)) {
            return Err(CiError::ZeroVariance(i));
        }
        let values =
            DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { (cov[(i, j)] / (sd[i] * sd[j])).clamp(-1.0, 1.0) });
        Self::new(assets, values, n_obs)
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sample Pearson correlations of the columns of `data` (rows are observations).
pub fn correlation_matrix(data: DMatrixView<'_, f64>, assets: &[String]) -> Result<CorrMatrix, CiError> {
    let (t, n) = data.shape();
    if t < 4 {
        return Err(CiError::TooFewObservations(t));
    }
    if assets.len() != n {
        return Err(CiError::InvalidMatrix(format!("{n} columns for {} assets", assets.len())));
    }
    for (k, col) in data.column_iter().enumerate() {
        if sample_variance(col.iter()) < EPS_VAR {
            return Err(CiError::ZeroVariance(k));
        }
    }
    let means: Vec<f64> = data.column_iter().map(|c| c.mean()).collect();
    let centered = DMatrix::from_fn(t, n, |r, c| data[(r, c)] - means[c]);
    let cov = centered.tr_mul(&centered);
    CorrMatrix::from_covariance(assets.to_vec(), &cov, t)
}

/// Partial correlation of `i` and `j` given `s`, from the inverse of the
/// correlation submatrix over `{i, j} ∪ s`.
pub fn partial_correlation(corr: &CorrMatrix, i: usize, j: usize, s: &[usize]) -> Result<f64, CiError> {
    let n = corr.len();
    let bad = i == j || i >= n || j >= n || s.iter().any(|&k| k == i || k == j || k >= n);
    if bad {
        return Err(CiError::InvalidIndices { i, j, s: s.to_vec() });
    }
    if s.len() + 4 > corr.n_obs {
        return Err(CiError::InsufficientSample { n_obs: corr.n_obs, card: s.len() });
    }
    if s.is_empty() {
        return Ok(corr.values[(i, j)]);
    }
    let idx: Vec<usize> = [i, j].into_iter().chain(s.iter().copied()).collect();
    let m = idx.len();
    let sub = DMatrix::from_fn(m, m, |a, b| corr.values[(idx[a], idx[b])]);
    let degenerate = || CiError::Degenerate { i, j, s: s.to_vec() };
    let precision = sub.cholesky().ok_or_else(degenerate)?.inverse();
    let (pii, pjj, pij) = (precision[(0, 0)], precision[(1, 1)], precision[(0, 1)]);
    if !(pii > 0.0 && pjj > 0.0) || !pij.is_finite() {
        return Err(degenerate());
    }
    let r = -pij / (pii * pjj).sqrt();
    if !r.is_finite() {
        return Err(degenerate());
    }
    Ok(r.clamp(-1.0, 1.0))
}

/// Outcome of a single conditional-independence test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiResult {
    pub i: usize,
    pub j: usize,
    pub sep_candidate: Vec<usize>,
    pub partial_corr: f64,
    pub statistic: f64,
    pub independent: bool,
    pub alpha: f64,
}

/// Verdict of a Fisher-z test, before it is attached to a variable pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherZ {
    pub partial_corr: f64,
    pub statistic: f64,
    pub independent: bool,
    pub alpha: f64,
}

pub fn critical_value(alpha: f64) -> Result<f64, CiError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CiError::InvalidAlpha(alpha));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

pub fn fisher_z_test(partial_corr: f64, n_obs: usize, card_s: usize, alpha: f64) -> Result<FisherZ, CiError> {
    let critical = critical_value(alpha)?;
    fisher_z_with_critical(partial_corr, n_obs, card_s, alpha, critical)
}

fn fisher_z_with_critical(
    partial_corr: f64,
    n_obs: usize,
    card_s: usize,
    alpha: f64,
    critical: f64,
) -> Result<FisherZ, CiError> {
    if !partial_corr.is_finite() {
        return Err(CiError::NotFinite);
    }
    if n_obs < card_s + 4 {
        return Err(CiError::InsufficientSample { n_obs, card: card_s });
    }
    let clamped = partial_corr.abs() >= R_CLAMP;
    let r = partial_corr.clamp(-R_CLAMP, R_CLAMP);
    let z = 0.5 * ((1.0 + r) / (1.0 - r)).ln();
    let statistic = ((n_obs - card_s - 3) as f64).sqrt() * z.abs();
    Ok(FisherZ { partial_corr, statistic, independent: !clamped && statistic <= critical, alpha })
}

/// A conditional-independence oracle over variables `0..n_vars()`.
pub trait IndependenceTest: Sync {
    fn n_vars(&self) -> usize;

    /// Largest conditioning-set size the test can evaluate.
    fn max_conditioning(&self) -> usize;

    fn test(&self, i: usize, j: usize, s: &[usize]) -> Result<CiResult, CiError>;
}

/// Fisher-z test on a sample correlation matrix.
#[derive(Debug, Clone)]
pub struct FisherZTest<'a> {
    corr: &'a CorrMatrix,
    alpha: f64,
    critical: f64,
}

impl<'a> FisherZTest<'a> {
    pub fn new(corr: &'a CorrMatrix, alpha: f64) -> Result<Self, CiError> {
        Ok(Self { corr, alpha, critical: critical_value(alpha)? })
    }
}

impl IndependenceTest for FisherZTest<'_> {
    fn n_vars(&self) -> usize {
        self.corr.len()
    }

    fn max_conditioning(&self) -> usize {
        self.corr.n_obs.saturating_sub(4)
    }

    fn test(&self, i: usize, j: usize, s: &[usize]) -> Result<CiResult, CiError> {
        let r = partial_correlation(self.corr, i, j, s)?;
        let v = fisher_z_with_critical(r, self.corr.n_obs, s.len(), self.alpha, self.critical)?;
        Ok(CiResult {
            i,
            j,
            sep_candidate: s.to_vec(),
            partial_corr: v.partial_corr,
            statistic: v.statistic,
            independent: v.independent,
            alpha: self.alpha,
        })
    }
}
