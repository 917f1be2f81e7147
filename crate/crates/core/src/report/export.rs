//! DOT, GraphML and JSON renderings of a contagion graph.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use super::ReportError;
use crate::contagion::NecoModel;
use crate::fmt_f64;
use crate::structure::Cpdag;

/// Pen width per unit of `|beta|`.
const PEN_SCALE: f64 = 4.0;
/// Pen width for edges without a coefficient.
const PEN_DEFAULT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Graphml,
    Json,
}

impl GraphFormat {
    pub fn extension(self) -> &'static str {
        match self {
            GraphFormat::Dot => "dot",
            GraphFormat::Graphml => "graphml",
            GraphFormat::Json => "json",
        }
    }
}

impl FromStr for GraphFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" | "gv" => Ok(GraphFormat::Dot),
            "graphml" => Ok(GraphFormat::Graphml),
            "json" => Ok(GraphFormat::Json),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContagionEdge {
    pub source: String,
    pub target: String,
    pub directed: bool,
    /// Contagion coefficient of `source -> target`, or of the orientation the
    /// point model chose for an undirected edge.
    pub weight: Option<f64>,
    pub color: &'static str,
    pub penwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContagionGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<ContagionEdge>,
}

fn sign_color(beta: Option<f64>) -> &'static str {
    match beta {
        Some(b) if b > 0.0 => "green",
        Some(b) if b < 0.0 => "red",
        _ => "gray",
    }
}

/// Collects edges (directed first, then undirected, each sorted by node index)
/// with their coefficients from `model`, matched by asset name.
pub fn contagion_graph(cpdag: &Cpdag, names: &[String], model: Option<&NecoModel>) -> ContagionGraph {
    let coefficient = |from: usize, to: usize| -> Option<f64> {
        let m = model?;
        let child = m.assets.iter().position(|a| *a == names[to])?;
        let parent = m.assets.iter().position(|a| *a == names[from])?;
        m.fits[child].beta_from(parent)
    };
    let edge = |a: usize, b: usize, directed: bool, weight: Option<f64>| ContagionEdge {
        source: names[a].clone(),
        target: names[b].clone(),
        directed,
        weight,
        color: sign_color(weight),
        penwidth: weight.map_or(PEN_DEFAULT, |w| PEN_SCALE * w.abs()),
    };
    let mut edges: Vec<ContagionEdge> =
        cpdag.directed_edges().into_iter().map(|(a, b)| edge(a, b, true, coefficient(a, b))).collect();
    edges.extend(
        cpdag
            .undirected_edges()
            .into_iter()
            .map(|(a, b)| edge(a, b, false, coefficient(a, b).or_else(|| coefficient(b, a)))),
    );
    ContagionGraph { nodes: names.to_vec(), edges }
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn to_dot(g: &ContagionGraph) -> String {
    let mut out = String::from("digraph contagion {\n");
    for n in &g.nodes {
        let _ = writeln!(out, "  {};", dot_id(n));
    }
    for e in &g.edges {
        let mut attrs = Vec::new();
        if !e.directed {
            attrs.push("dir=none".to_string());
        }
        if let Some(w) = e.weight {
            attrs.push(format!("weight={}", fmt_f64(w)));
        }
        attrs.push(format!("color={}", e.color));
        attrs.push(format!("penwidth={}", fmt_f64(e.penwidth)));
        let _ = writeln!(out, "  {} -> {} [{}];", dot_id(&e.source), dot_id(&e.target), attrs.join(", "));
    }
    out.push_str("}\n");
    out
}

fn to_graphml(g: &ContagionGraph) -> String {
    let mut out = String::from(concat!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n",
        "  <key id=\"directed\" for=\"edge\" attr.name=\"directed\" attr.type=\"boolean\"/>\n",
        "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n",
        "  <key id=\"color\" for=\"edge\" attr.name=\"color\" attr.type=\"string\"/>\n",
        "  <key id=\"penwidth\" for=\"edge\" attr.name=\"penwidth\" attr.type=\"double\"/>\n",
        "  <graph id=\"contagion\" edgedefault=\"directed\">\n",
    ));
    for n in &g.nodes {
        let _ = writeln!(out, "    <node id=\"{}\"/>", xml_escape(n));
    }
    for e in &g.edges {
        let _ = writeln!(out, "    <edge source=\"{}\" target=\"{}\">", xml_escape(&e.source), xml_escape(&e.target));
        let _ = writeln!(out, "      <data key=\"directed\">{}</data>", e.directed);
        if let Some(w) = e.weight {
            let _ = writeln!(out, "      <data key=\"weight\">{}</data>", fmt_f64(w));
        }
        let _ = writeln!(out, "      <data key=\"color\">{}</data>", e.color);
        let _ = writeln!(out, "      <data key=\"penwidth\">{}</data>", fmt_f64(e.penwidth));
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

pub fn export_graph(g: &ContagionGraph, format: GraphFormat) -> Result<Vec<u8>, ReportError> {
    Ok(match format {
        GraphFormat::Dot => to_dot(g).into_bytes(),
        GraphFormat::Graphml => to_graphml(g).into_bytes(),
        GraphFormat::Json => {
            let mut v = serde_json::to_vec_pretty(g)?;
            v.push(b'\n');
            v
        }
    })
}
