//! Graph exports, SVG charts and the run manifest.

mod charts;
mod export;
mod manifest;

use thiserror::Error;

pub use charts::{asset_necof_chart, cocluster_chart, line_chart, load_events, market_charts, EventMarker, LineSeries};
pub use export::{contagion_graph, export_graph, ContagionEdge, ContagionGraph, GraphFormat};
pub use manifest::{sha256_hex, InputDigest, RunManifest, WindowOutputs};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown graph format '{0}' (expected dot, graphml or json)")]
    UnknownFormat(String),
    #[error("chart input is empty")]
    EmptyInput,
    #[error("event file row {row}: {reason}")]
    MalformedEvent { row: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
