//! Per-asset structural VAR: own lags plus contemporaneous causal parents.

use nalgebra::{DMatrix, DMatrixView, DVector};
use serde::Serialize;

use super::ModelError;
use crate::market_data::sample_variance;
use crate::structure::Dag;

/// Relative tolerance on the QR diagonal below which a design is rank-deficient.
const RANK_TOL: f64 = 1e-10;

/// Sample covariances between the three additive components of a fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ComponentCovariances {
    pub ar_neco: f64,
    pub ar_resid: f64,
    pub neco_resid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetFit {
    pub intercept: f64,
    /// Coefficients on lags `1..=L`.
    pub ar: Vec<f64>,
    pub parents: Vec<usize>,
    /// Contagion coefficients, aligned with `parents`.
    pub beta: Vec<f64>,
    pub var_ar: f64,
    pub var_neco: f64,
    pub var_resid: f64,
    pub component_cov: ComponentCovariances,
    /// The design matrix was rank-deficient; coefficients are minimum-norm.
    pub degenerate: bool,
}

impl AssetFit {
    pub fn beta_from(&self, parent: usize) -> Option<f64> {
        self.parents.iter().position(|&p| p == parent).map(|k| self.beta[k])
    }

    pub fn total_variance(&self) -> f64 {
        self.var_ar + self.var_neco + self.var_resid
    }
}

/// Fitted structural VAR for one window and one DAG.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecoModel {
    pub assets: Vec<String>,
    pub lags: usize,
    /// Rows used by every regression: window length minus `lags`.
    pub n_eff: usize,
    pub fits: Vec<AssetFit>,
}

/// Additive pieces of an asset's fitted series over the regression rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub observed: Vec<f64>,
    pub intercept: f64,
    pub ar: Vec<f64>,
    pub neco: Vec<f64>,
    pub resid: Vec<f64>,
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let (ma, mb) = (a.iter().sum::<f64>() / n as f64, b.iter().sum::<f64>() / n as f64);
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1) as f64
}

/// Least squares with a rank check; falls back to an SVD minimum-norm
/// solution when the design is rank-deficient.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, bool) {
    let p = x.ncols();
    if p == 0 {
        return (DVector::zeros(0), false);
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    let rank_ok = x.nrows() >= p && scale > 0.0 && (0..p).all(|k| r[(k, k)].abs() > RANK_TOL * scale);
    if rank_ok {
        let qty = qr.q().tr_mul(y);
        if let Some(coef) = r.solve_upper_triangular(&qty) {
            return (coef, false);
        }
    }
    let svd = x.clone().svd(true, true);
    let coef = svd.solve(y, RANK_TOL * scale.max(f64::MIN_POSITIVE)).unwrap_or_else(|_| DVector::zeros(p));
    (coef, true)
}

/// Regresses each asset on an intercept, its own lags `1..=lags` and its
/// contemporaneous parents in `dag`, over rows `lags..T`.
pub fn fit_structural_var(
    data: DMatrixView<'_, f64>,
    assets: &[String],
    dag: &Dag,
    lags: usize,
) -> Result<NecoModel, ModelError> {
    let (t, n) = data.shape();
    if assets.len() != n || dag.n_nodes() != n {
        return Err(ModelError::ShapeMismatch { columns: n, assets: assets.len(), nodes: dag.n_nodes() });
    }
    let n_eff = t.saturating_sub(lags);
    for i in 0..n {
        let needed = lags + dag.parents(i).len() + 1;
        if n_eff <= needed {
            return Err(ModelError::InsufficientSample { asset: assets[i].clone(), rows: n_eff, regressors: needed });
        }
    }
    let fits = (0..n).map(|i| fit_asset(data, i, dag.parents(i), lags)).collect();
    Ok(NecoModel { assets: assets.to_vec(), lags, n_eff, fits })
}

fn fit_asset(data: DMatrixView<'_, f64>, i: usize, parents: &[usize], lags: usize) -> AssetFit {
    let t = data.nrows();
    let rows = t - lags;
    let p = 1 + lags + parents.len();
    let x = DMatrix::from_fn(rows, p, |r, c| {
        let tt = r + lags;
        match c {
            0 => 1.0,
            c if c <= lags => data[(tt - c, i)],
            c => data[(tt, parents[c - 1 - lags])],
        }
    });
    let y = DVector::from_fn(rows, |r, _| data[(r + lags, i)]);
    let (coef, degenerate) = least_squares(&x, &y);
    if degenerate {
        log::warn!("rank-deficient design for asset column {i}");
    }

    let mut fit = AssetFit {
        intercept: coef[0],
        ar: coef.rows(1, lags).iter().copied().collect(),
        parents: parents.to_vec(),
        beta: coef.rows(1 + lags, parents.len()).iter().copied().collect(),
        var_ar: 0.0,
        var_neco: 0.0,
        var_resid: 0.0,
        component_cov: ComponentCovariances::default(),
        degenerate,
    };
    let d = decompose_with(data, i, &fit, lags);
    fit.var_ar = sample_variance(d.ar.iter());
    fit.var_neco = sample_variance(d.neco.iter());
    fit.var_resid = sample_variance(d.resid.iter());
    fit.component_cov = ComponentCovariances {
        ar_neco: covariance(&d.ar, &d.neco),
        ar_resid: covariance(&d.ar, &d.resid),
        neco_resid: covariance(&d.neco, &d.resid),
    };
    fit
}

fn decompose_with(data: DMatrixView<'_, f64>, i: usize, fit: &AssetFit, lags: usize) -> Decomposition {
    let rows = data.nrows() - lags;
    let mut d = Decomposition {
        observed: Vec::with_capacity(rows),
        intercept: fit.intercept,
        ar: Vec::with_capacity(rows),
        neco: Vec::with_capacity(rows),
        resid: Vec::with_capacity(rows),
    };
    for r in 0..rows {
        let tt = r + lags;
        let y = data[(tt, i)];
        let ar: f64 = fit.ar.iter().enumerate().map(|(l, a)| a * data[(tt - l - 1, i)]).sum();
        let neco: f64 = fit.parents.iter().zip(&fit.beta).map(|(&j, b)| b * data[(tt, j)]).sum();
        d.observed.push(y);
        d.ar.push(ar);
        d.neco.push(neco);
        d.resid.push(y - fit.intercept - ar - neco);
    }
    d
}

impl NecoModel {
    /// Splits asset `i`'s series on `data` (the window the model was fitted
    /// on) into intercept, AR, NECO and residual parts.
    pub fn decompose(&self, data: DMatrixView<'_, f64>, i: usize) -> Decomposition {
        decompose_with(data, i, &self.fits[i], self.lags)
    }

    /// The DAG the model was fitted on.
    pub fn dag(&self) -> Dag {
        let edges: Vec<_> =
            self.fits.iter().enumerate().flat_map(|(c, f)| f.parents.iter().map(move |&p| (p, c))).collect();
        Dag::from_edges(self.fits.len(), &edges).expect("fitted parents form a DAG")
    }
}
