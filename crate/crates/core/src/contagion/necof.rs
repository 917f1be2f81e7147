//! Network contagion factors: point values, the sums-of-squares cross-check,
//! and ranges over a CPDAG's DAG extensions.

use std::io::Write;

use nalgebra::{DMatrix, DMatrixView, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::var::{fit_structural_var, least_squares, NecoModel};
use super::ModelError;
use crate::fmt_f64;
use crate::structure::{enumerate_dags, Cpdag, Dag};

/// Share of each asset's return variance carried by its contemporaneous
/// parents: `var_neco / (var_ar + var_neco + var_resid)`. Zero for parentless
/// assets and for assets whose three component variances are all zero.
pub fn necof(model: &NecoModel) -> Vec<f64> {
    model
        .fits
        .iter()
        .map(|f| {
            let total = f.total_variance();
            if f.parents.is_empty() || !(total > 0.0) {
                0.0
            } else {
                (f.var_neco / total).clamp(0.0, 1.0)
            }
        })
        .collect()
}

/// Which residual the sums-of-squares estimator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RssMode {
    /// Residual against the fitted contagion term alone: `sum (x - neco)^2`.
    #[default]
    NecoOnly,
    /// Type II share: the drop in residual sum of squares when the parents
    /// are added to an intercept-plus-lags regression.
    TypeII,
}

/// `1 - RSS_neco / SS` per asset, with `SS` the sum of squares around the
/// window mean. `None` where `SS` is zero.
pub fn necof_ss(data: DMatrixView<'_, f64>, model: &NecoModel, mode: RssMode) -> Vec<Option<f64>> {
    (0..model.fits.len())
        .map(|i| {
            let d = model.decompose(data, i);
            let n = d.observed.len() as f64;
            let mean = d.observed.iter().sum::<f64>() / n;
            let ss: f64 = d.observed.iter().map(|x| (x - mean).powi(2)).sum();
            if !(ss > 0.0) {
                return None;
            }
            let rss = match mode {
                RssMode::NecoOnly => d.observed.iter().zip(&d.neco).map(|(x, c)| (x - c).powi(2)).sum::<f64>(),
                RssMode::TypeII => {
                    let full: f64 = d.resid.iter().map(|e| e * e).sum();
                    ss - (reduced_rss(data, i, model.lags) - full)
                }
            };
            Some(1.0 - rss / ss)
        })
        .collect()
}

fn reduced_rss(data: DMatrixView<'_, f64>, i: usize, lags: usize) -> f64 {
    let rows = data.nrows() - lags;
    let x = DMatrix::from_fn(rows, 1 + lags, |r, c| if c == 0 { 1.0 } else { data[(r + lags - c, i)] });
    let y = DVector::from_fn(rows, |r, _| data[(r + lags, i)]);
    let (coef, _) = least_squares(&x, &y);
    (&y - &x * coef).norm_squared()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetNecof {
    pub asset: String,
    pub point: f64,
    pub min: f64,
    pub max: f64,
    /// Sums-of-squares estimate under the point extension.
    pub necof_ss: Option<f64>,
    /// Parents under the point extension.
    pub parents: Vec<String>,
    pub pegged: bool,
    pub degenerate: bool,
}

impl AssetNecof {
    fn zero(asset: &str, pegged: bool, degenerate: bool) -> Self {
        Self {
            asset: asset.to_string(),
            point: 0.0,
            min: 0.0,
            max: 0.0,
            necof_ss: None,
            parents: Vec::new(),
            pegged,
            degenerate,
        }
    }

    pub fn flags(&self) -> String {
        let mut f = Vec::new();
        if self.pegged {
            f.push("pegged");
        }
        if self.degenerate {
            f.push("degenerate");
        }
        f.join("|")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecofReport {
    pub assets: Vec<AssetNecof>,
    /// Mean point NECOF over non-pegged assets.
    pub market_necof: f64,
    /// DAG extensions that were fitted.
    pub extensions: usize,
    pub truncated: bool,
    /// No consistent extension existed; all values are zero.
    pub degenerate: bool,
}

impl NecofReport {
    /// All-zero report for a window whose graph could not be used.
    pub fn degenerate(assets: &[String], pegged: &[bool]) -> Self {
        let rows = assets.iter().zip(pegged).map(|(a, &p)| AssetNecof::zero(a, p, !p)).collect();
        Self { assets: rows, market_necof: 0.0, extensions: 0, truncated: false, degenerate: true }
    }

    fn update_market(&mut self) {
        let active: Vec<f64> = self.assets.iter().filter(|a| !a.pegged).map(|a| a.point).collect();
        self.market_necof =
            if active.is_empty() { 0.0 } else { (active.iter().sum::<f64>() / active.len() as f64).clamp(0.0, 1.0) };
    }

    /// Adds zero-NECOF rows for `pegged` assets and reorders rows to `order`.
    pub fn with_pegged(mut self, pegged: &[String], order: &[String]) -> Self {
        self.assets.extend(pegged.iter().map(|a| AssetNecof::zero(a, true, false)));
        self.assets.sort_by_key(|row| order.iter().position(|o| *o == row.asset).unwrap_or(usize::MAX));
        self.update_market();
        self
    }

    pub fn get(&self, asset: &str) -> Option<&AssetNecof> {
        self.assets.iter().find(|a| a.asset == asset)
    }

    /// Mean point NECOF over all assets, pegged ones counted as zero.
    pub fn mean_including_pegged(&self) -> f64 {
        if self.assets.is_empty() {
            0.0
        } else {
            self.assets.iter().map(|a| a.point).sum::<f64>() / self.assets.len() as f64
        }
    }

    /// `asset,point,min,max,necof_ss,flags` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["asset", "point", "min", "max", "necof_ss", "flags"])?;
        for a in &self.assets {
            w.write_record([
                a.asset.clone(),
                fmt_f64(a.point),
                fmt_f64(a.min),
                fmt_f64(a.max),
                a.necof_ss.map(fmt_f64).unwrap_or_default(),
                a.flags(),
            ])?;
        }
        w.flush()
    }
}

/// Output of [`necof_range`].
#[derive(Debug, Clone, PartialEq)]
pub struct RangeFit {
    pub report: NecofReport,
    pub point_dag: Dag,
    pub point_model: NecoModel,
}

/// Fits every DAG extension of `cpdag` (up to `cap`) and reports per-asset
/// NECOF ranges. The point value comes from the first extension in
/// enumeration order, which orients open edges from lower to higher index.
pub fn necof_range(
    data: DMatrixView<'_, f64>,
    assets: &[String],
    cpdag: &Cpdag,
    lags: usize,
    cap: usize,
    rss_mode: RssMode,
) -> Result<RangeFit, ModelError> {
    let ext = enumerate_dags(cpdag, cap)?;
    let models: Vec<NecoModel> =
        ext.dags.par_iter().map(|dag| fit_structural_var(data, assets, dag, lags)).collect::<Result<_, _>>()?;
    let values: Vec<Vec<f64>> = models.iter().map(necof).collect();

    let point_model = models[0].clone();
    let point_dag = ext.dags[0].clone();
    let ss = necof_ss(data, &point_model, rss_mode);
    let rows = assets
        .iter()
        .enumerate()
        .map(|(i, asset)| {
            let column = values.iter().map(|v| v[i]);
            let fit = &point_model.fits[i];
            AssetNecof {
                asset: asset.clone(),
                point: values[0][i],
                min: column.clone().fold(f64::INFINITY, f64::min),
                max: column.fold(f64::NEG_INFINITY, f64::max),
                necof_ss: ss[i],
                parents: fit.parents.iter().map(|&p| assets[p].clone()).collect(),
                pegged: false,
                degenerate: models.iter().any(|m| m.fits[i].degenerate) || !(fit.total_variance() > 0.0),
            }
        })
        .collect();
    let mut report = NecofReport {
        assets: rows,
        market_necof: 0.0,
        extensions: ext.dags.len(),
        truncated: ext.truncated,
        degenerate: false,
    };
    report.update_market();
    Ok(RangeFit { report, point_dag, point_model })
}
