//! Structural VAR contagion model and network contagion factors.

mod intervention;
mod necof;
mod var;

use thiserror::Error;

use crate::structure::StructureError;

pub use intervention::{implied_means, predict_do, InterventionSpec};
pub use necof::{necof, necof_range, necof_ss, AssetNecof, NecofReport, RangeFit, RssMode};
pub use var::{fit_structural_var, AssetFit, ComponentCovariances, Decomposition, NecoModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("data has {columns} columns, {assets} asset names and {nodes} graph nodes")]
    ShapeMismatch { columns: usize, assets: usize, nodes: usize },
    #[error("asset `{asset}`: {rows} regression rows for {regressors} regressors")]
    InsufficientSample { asset: String, rows: usize, regressors: usize },
    #[error("model parents of `{0}` differ from the graph")]
    ParentMismatch(String),
    #[error("invalid intervention: {0}")]
    InvalidIntervention(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}
