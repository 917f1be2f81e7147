//! Causal contagion networks for financial log-returns.
//!
//! The pipeline learns a CPDAG per rolling window with PC-stable and Fisher-z
//! tests, fits a structural VAR on the implied parent sets, and reports each
//! asset's network contagion factor (NECOF), the share of its return variance
//! explained by contemporaneous causal parents. Communities, graph density and
//! market-level contagion series are derived from the same windows.

pub mod ci;
pub mod cli;
pub mod contagion;
pub mod market_data;
pub mod network;
pub mod report;
pub mod rolling;
pub mod structure;
pub mod synth;

pub use ci::{CiError, CorrMatrix};
pub use contagion::{NecoModel, NecofReport};
pub use market_data::{DataError, MissingPolicy, RatePanel, ReturnsPanel, Window};
pub use rolling::{AnalysisConfig, MarketSeries, WindowResult};
pub use structure::{Cpdag, Dag, Skeleton};

/// Fixed-width float rendering used by every text export: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
