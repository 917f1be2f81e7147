//! Per-window pipeline and market-level series.

use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ci::correlation_matrix;
use crate::contagion::{necof_range, NecoModel, NecofReport, RssMode};
use crate::fmt_f64;
use crate::market_data::{make_windows, DataError, MissingPolicy, ReturnsPanel, Window};
use crate::network::{
    cocluster, density, louvain, project_cpdag, ClusterAssignment, CoClusterMatrix, EdgeWeighting, Membership,
};
use crate::structure::{apply_meek_rules, learn_skeleton, orient_colliders, Cpdag, DEFAULT_EXTENSION_CAP};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be at least 1")]
    NotPositive(&'static str),
    #[error("alpha {0} outside (0, 1)")]
    Alpha(f64),
    #[error("window of {window_len} observations leaves too few rows for {lags} lags")]
    WindowTooShort { window_len: usize, lags: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub window_len: usize,
    pub step: usize,
    pub alpha: f64,
    pub lags: usize,
    pub extension_cap: usize,
    pub max_cond: Option<usize>,
    pub missing: MissingPolicy,
    /// Louvain visit order: canonical when `None`, seeded shuffle (seed plus
    /// window index) otherwise.
    pub seed: Option<u64>,
    pub weighting: EdgeWeighting,
    pub rss_mode: RssMode,
    /// Count pegged assets as zero in the market mean instead of dropping them.
    pub pegged_in_mean: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window_len: 250,
            step: 63,
            alpha: 0.05,
            lags: 1,
            extension_cap: DEFAULT_EXTENSION_CAP,
            max_cond: None,
            missing: MissingPolicy::DropDate,
            seed: None,
            weighting: EdgeWeighting::Beta,
            rss_mode: RssMode::NecoOnly,
            pegged_in_mean: true,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.window_len == 0 {
            return Err(ConfigError::NotPositive("window"));
        }
        if self.step == 0 {
            return Err(ConfigError::NotPositive("step"));
        }
        if self.extension_cap == 0 {
            return Err(ConfigError::NotPositive("extension cap"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ConfigError::Alpha(self.alpha));
        }
        // Correlations need 4 rows; a parentless fit needs more rows than regressors.
        if self.window_len < 4 || self.window_len <= 2 * self.lags + 2 {
            return Err(ConfigError::WindowTooShort { window_len: self.window_len, lags: self.lags });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub pegged: Vec<String>,
    pub degenerate_tests: usize,
    /// Edges whose collider orientations disagreed.
    pub conflicts: Vec<(String, String)>,
    pub extensions: usize,
    pub truncated: bool,
    pub errors: Vec<String>,
}

impl Diagnostics {
    pub fn is_degenerate(&self) -> bool {
        !self.errors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowResult {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub label_date: NaiveDate,
    /// Node order for `cpdag` and `clusters`: asset codes sorted.
    pub assets: Vec<String>,
    pub cpdag: Cpdag,
    /// Point-extension fit over the non-pegged assets.
    pub model: Option<NecoModel>,
    pub necof: NecofReport,
    pub clusters: ClusterAssignment,
    pub density: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketSeries {
    pub dates: Vec<NaiveDate>,
    pub mean_necof: Vec<f64>,
    pub n_clusters: Vec<usize>,
    pub density: Vec<f64>,
    pub pegged_in_mean: bool,
}

impl MarketSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// `date,mean_necof,n_clusters,density` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "mean_necof", "n_clusters", "density"])?;
        for k in 0..self.len() {
            w.write_record([
                self.dates[k].format("%Y-%m-%d").to_string(),
                fmt_f64(self.mean_necof[k]),
                self.n_clusters[k].to_string(),
                fmt_f64(self.density[k]),
            ])?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingOutput {
    pub windows: Vec<WindowResult>,
    pub market: MarketSeries,
}

impl RollingOutput {
    pub fn cocluster(&self) -> Option<CoClusterMatrix> {
        let first = self.windows.first()?;
        let members: Vec<Membership> =
            self.windows.iter().map(|w| Membership { assets: &w.assets, assignment: &w.clusters }).collect();
        cocluster(&members, &first.assets).ok()
    }
}

pub fn market_metrics(results: &[WindowResult], pegged_in_mean: bool) -> MarketSeries {
    MarketSeries {
        dates: results.iter().map(|w| w.label_date).collect(),
        mean_necof: results
            .iter()
            .map(|w| if pegged_in_mean { w.necof.mean_including_pegged() } else { w.necof.market_necof })
            .collect(),
        n_clusters: results.iter().map(|w| w.clusters.n_communities).collect(),
        density: results.iter().map(|w| w.density).collect(),
        pegged_in_mean,
    }
}

pub fn run_rolling(returns: &ReturnsPanel, config: &AnalysisConfig) -> Result<RollingOutput, ConfigError> {
    config.validate()?;
    let windows = make_windows(returns, config.window_len, config.step)?;
    let results: Vec<WindowResult> = windows.par_iter().map(|w| analyze_window(w, config)).collect();
    let market = market_metrics(&results, config.pegged_in_mean);
    Ok(RollingOutput { windows: results, market })
}

/// Runs the full pipeline on one window. Failures are recorded in the
/// diagnostics and fall back to an empty graph with zero NECOF.
pub fn analyze_window(window: &Window<'_>, config: &AnalysisConfig) -> WindowResult {
    let panel = window.panel();
    let mut order: Vec<usize> = (0..panel.n_assets()).collect();
    order.sort_by(|&a, &b| panel.assets()[a].cmp(&panel.assets()[b]));
    let assets: Vec<String> = order.iter().map(|&c| panel.assets()[c].clone()).collect();
    let flags = window.zero_variance_flags();
    let pegged_by_pos: Vec<bool> = order.iter().map(|&c| flags[c]).collect();
    let active_pos: Vec<usize> = (0..order.len()).filter(|&k| !pegged_by_pos[k]).collect();
    let active_cols: Vec<usize> = active_pos.iter().map(|&k| order[k]).collect();
    let active_names: Vec<String> = active_pos.iter().map(|&k| assets[k].clone()).collect();
    let pegged: Vec<String> = (0..assets.len()).filter(|&k| pegged_by_pos[k]).map(|k| assets[k].clone()).collect();

    let mut diag = Diagnostics { pegged: pegged.clone(), ..Default::default() };
    let data = window.columns(&active_cols);

    let learned = (|| -> Result<(Cpdag, crate::contagion::RangeFit), String> {
        let sub = if active_cols.len() >= 2 {
            let corr = correlation_matrix(data.as_view(), &active_names).map_err(|e| e.to_string())?;
            let skel = learn_skeleton(&corr, config.alpha, config.max_cond).map_err(|e| e.to_string())?;
            diag.degenerate_tests = skel.degenerate_tests;
            apply_meek_rules(&orient_colliders(&skel))
        } else {
            Cpdag::empty(active_cols.len())
        };
        let fit = necof_range(data.as_view(), &active_names, &sub, config.lags, config.extension_cap, config.rss_mode)
            .map_err(|e| e.to_string())?;
        Ok((sub, fit))
    })();

    let (cpdag, model, necof) = match learned {
        Ok((sub, fit)) => {
            diag.conflicts =
                sub.conflicts().iter().map(|&(a, b)| (active_names[a].clone(), active_names[b].clone())).collect();
            diag.extensions = fit.report.extensions;
            diag.truncated = fit.report.truncated;
            let report = fit.report.with_pegged(&pegged, &assets);
            (sub.relabel(assets.len(), &active_pos), Some(fit.point_model), report)
        }
        Err(e) => {
            log::warn!("window {} ({}): {e}", window.index, window.label_date());
            diag.errors.push(e);
            (Cpdag::empty(assets.len()), None, NecofReport::degenerate(&assets, &pegged_by_pos))
        }
    };

    let graph = project_cpdag(&cpdag, &assets, model.as_ref(), config.weighting).expect("node names match the graph");
    let clusters = louvain(&graph, config.seed.map(|s| s.wrapping_add(window.index as u64)));
    let density = if assets.len() >= 2 { density(&cpdag).expect("at least two nodes") } else { 0.0 };

    WindowResult {
        index: window.index,
        start: window.start,
        end: window.end,
        label_date: window.label_date(),
        assets,
        cpdag,
        model,
        necof,
        clusters,
        density,
        diagnostics: diag,
    }
}
