//! Command-line front end.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::contagion::RssMode;
use crate::fmt_f64;
use crate::market_data::{load_rates, log_returns, DataError, LoadOptions, MissingPolicy};
use crate::network::EdgeWeighting;
use crate::report::{
    asset_necof_chart, cocluster_chart, contagion_graph, export_graph, load_events, market_charts, ContagionGraph,
    GraphFormat, InputDigest, ReportError, RunManifest, WindowOutputs,
};
use crate::rolling::{run_rolling, AnalysisConfig, ConfigError, WindowResult};
use crate::structure::DEFAULT_EXTENSION_CAP;
use crate::synth::{business_days, node_names, random_dag, simulate_sem, SemSpec, SynthError};

#[derive(Debug, Parser)]
#[command(name = "necof", version, about = "Causal contagion networks for financial returns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the rolling-window analysis on a rate file and write all artifacts.
    Analyze(AnalyzeArgs),
    /// Write a synthetic rate file generated from a random linear SEM.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MissingArg {
    Drop,
    Ffill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightsArg {
    Beta,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RssArg {
    NecoOnly,
    TypeIi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormatArg {
    Dot,
    Graphml,
    Json,
}

impl From<GraphFormatArg> for GraphFormat {
    fn from(f: GraphFormatArg) -> Self {
        match f {
            GraphFormatArg::Dot => GraphFormat::Dot,
            GraphFormatArg::Graphml => GraphFormat::Graphml,
            GraphFormatArg::Json => GraphFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Rate file: a date column followed by one column per asset.
    #[arg(long)]
    pub input: PathBuf,
    /// Window length in observations.
    #[arg(long, default_value_t = 250)]
    pub window: usize,
    /// Step between window starts.
    #[arg(long, default_value_t = 63)]
    pub step: usize,
    /// Significance level of the independence tests.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Autoregressive lags in the structural VAR.
    #[arg(long, default_value_t = 1)]
    pub lags: usize,
    /// Seed for a shuffled Louvain visit order; canonical order when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "necof_out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = MissingArg::Drop)]
    pub missing: MissingArg,
    #[arg(long, value_enum, default_value_t = WeightsArg::Beta)]
    pub weights: WeightsArg,
    /// Maximum number of DAG extensions fitted per window.
    #[arg(long, default_value_t = DEFAULT_EXTENSION_CAP)]
    pub cap: usize,
    /// Largest conditioning set tried by the skeleton search.
    #[arg(long)]
    pub max_cond: Option<usize>,
    /// Residual sum of squares used for the sum-of-squares NECOF.
    #[arg(long, value_enum, default_value_t = RssArg::NecoOnly)]
    pub rss: RssArg,
    /// Drop pegged assets from the market mean instead of counting them as zero.
    #[arg(long)]
    pub exclude_pegged: bool,
    /// Name of the date column (default: first column).
    #[arg(long)]
    pub date_column: Option<String>,
    /// CSV of `date,label,color` rows drawn as vertical lines on charts.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Per-window graph formats.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [GraphFormatArg::Dot, GraphFormatArg::Graphml])]
    pub graph_formats: Vec<GraphFormatArg>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 5)]
    pub nodes: usize,
    /// Expected number of neighbours per node.
    #[arg(long, default_value_t = 1.5)]
    pub degree: f64,
    /// Number of returns; the file holds one more rate row.
    #[arg(long, default_value_t = 1000)]
    pub obs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Scale applied to simulated returns before compounding into rates.
    #[arg(long, default_value_t = 0.01)]
    pub scale: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the generating SEM as JSON.
    #[arg(long)]
    pub spec_out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Config(String),
    #[error("every window was degenerate ({0} windows)")]
    AllDegenerate(usize),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Output(_) => 1,
            CliError::Config(_) => 2,
            CliError::AllDegenerate(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Config(_) => "config",
            CliError::AllDegenerate(_) => "degenerate",
            CliError::Output(_) => "output",
        }
    }

    /// Single-line `error kind=<kind>: <reason>` message for stderr.
    pub fn line(&self) -> String {
        format!("error kind={}: {}", self.kind(), self.to_string().replace('\n', " "))
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Data(DataError::WindowTooLong { .. } | DataError::InvalidWindowing) => {
                CliError::Config(e.to_string())
            }
            ConfigError::Data(d) => CliError::Input(d.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn out_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Output(format!("{}: {e}", path.display()))
}

fn report_err(e: ReportError) -> CliError {
    CliError::Output(e.to_string())
}

/// Run timestamp: `SOURCE_DATE_EPOCH` when set, so reruns are byte-identical.
fn run_timestamp() -> Result<DateTime<Utc>, CliError> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(s) => s
            .trim()
            .parse::<i64>()
            .ok()
            .and_then(|secs| DateTime::from_timestamp(secs, 0))
            .ok_or_else(|| CliError::Config(format!("SOURCE_DATE_EPOCH '{s}' is not a valid timestamp"))),
        Err(_) => Ok(Utc::now()),
    }
}

impl AnalyzeArgs {
    pub fn config(&self) -> AnalysisConfig {
        AnalysisConfig {
            window_len: self.window,
            step: self.step,
            alpha: self.alpha,
            lags: self.lags,
            extension_cap: self.cap,
            max_cond: self.max_cond,
            missing: match self.missing {
                MissingArg::Drop => MissingPolicy::DropDate,
                MissingArg::Ffill => MissingPolicy::ForwardFill,
            },
            seed: self.seed,
            weighting: match self.weights {
                WeightsArg::Beta => EdgeWeighting::Beta,
                WeightsArg::Unit => EdgeWeighting::Unit,
            },
            rss_mode: match self.rss {
                RssArg::NecoOnly => RssMode::NecoOnly,
                RssArg::TypeIi => RssMode::TypeII,
            },
            pegged_in_mean: !self.exclude_pegged,
        }
    }
}

#[derive(Serialize)]
struct WindowDocument<'a> {
    #[serde(flatten)]
    window: &'a WindowResult,
    graph: ContagionGraph,
}

struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        fs::write(&path, bytes).map_err(out_err(&path))?;
        self.written.push(rel.to_string());
        Ok(())
    }

    fn write_with(
        &mut self,
        rel: &str,
        f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.root.join(rel);
        let file = fs::File::create(&path).map_err(out_err(&path))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(out_err(&path))?;
        self.written.push(rel.to_string());
        Ok(())
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<RunManifest, CliError> {
    let config = args.config();
    config.validate()?;
    if args.graph_formats.is_empty() {
        return Err(CliError::Config("at least one graph format is required".into()));
    }
    let timestamp = run_timestamp()?;

    let bytes = fs::read(&args.input).map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
    let opts = LoadOptions { date_column: args.date_column.clone(), ..Default::default() };
    let rates = load_rates(bytes.as_slice(), &opts).map_err(|e| CliError::Input(e.to_string()))?;
    let returns = log_returns(&rates, config.missing).map_err(|e| CliError::Input(e.to_string()))?;
    let events = match &args.events {
        Some(p) => {
            let f = fs::File::open(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            load_events(f).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
        }
        None => Vec::new(),
    };

    let run = run_rolling(&returns, &config)?;
    log::info!("analysed {} windows over {} assets", run.windows.len(), returns.n_assets());

    for sub in ["", "windows", "graphs", "charts"] {
        let dir = args.out.join(sub);
        fs::create_dir_all(&dir).map_err(out_err(&dir))?;
    }
    let mut out = OutDir { root: args.out.clone(), written: Vec::new() };
    let mut manifest =
        RunManifest::new(InputDigest::new(&args.input.display().to_string(), &bytes), config.clone(), timestamp);
    manifest.n_observations = returns.len();
    manifest.assets = run.windows[0].assets.clone();

    out.write_with("returns.csv", |w| returns.write_csv(w))?;
    out.write_with("market_series.csv", |w| run.market.write_csv(w))?;
    out.write_with("necof_report.csv", |w| write_necof_history(w, &run.windows))?;
    out.write_with("clusters.csv", |w| write_clusters(w, &run.windows))?;
    if let Some(m) = run.cocluster() {
        out.write_with("cocluster.csv", |w| m.write_csv(w))?;
        out.write("charts/cocluster.svg", cocluster_chart(&m).map_err(report_err)?.as_bytes())?;
    }
    for (stem, svg) in market_charts(&run.market, &events).map_err(report_err)? {
        out.write(&format!("charts/{stem}.svg"), svg.as_bytes())?;
    }
    out.write("charts/asset_necof.svg", asset_necof_chart(&run.windows, &events).map_err(report_err)?.as_bytes())?;

    let mut index = Vec::new();
    for w in &run.windows {
        let graph = contagion_graph(&w.cpdag, &w.assets, w.model.as_ref());
        let stem = format!("{:03}", w.index);
        let mut graphs = Vec::new();
        for &f in &args.graph_formats {
            let format = GraphFormat::from(f);
            let rel = format!("graphs/{stem}.{}", format.extension());
            out.write(&rel, &export_graph(&graph, format).map_err(report_err)?)?;
            graphs.push(rel);
        }
        let json = format!("windows/{stem}.json");
        out.write(&json, &json_bytes(&WindowDocument { window: w, graph })?)?;
        index.push(WindowOutputs {
            index: w.index,
            label_date: w.label_date.format("%Y-%m-%d").to_string(),
            json,
            graphs,
            degenerate: w.diagnostics.is_degenerate(),
        });
    }
    out.write("windows/index.json", &json_bytes(&index)?)?;

    manifest.windows = index;
    manifest.outputs =
        out.written.iter().filter(|p| !p.starts_with("windows/") && !p.starts_with("graphs/")).cloned().collect();
    manifest.outputs.push("windows/index.json".into());
    manifest.outputs.push("manifest.json".into());
    out.write("manifest.json", &json_bytes(&manifest)?)?;

    if run.windows.iter().all(|w| w.diagnostics.is_degenerate()) {
        return Err(CliError::AllDegenerate(run.windows.len()));
    }
    Ok(manifest)
}

fn write_necof_history<W: std::io::Write>(out: W, windows: &[WindowResult]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window", "date", "asset", "point", "min", "max", "necof_ss", "parents", "flags"])?;
    for win in windows {
        for a in &win.necof.assets {
            w.write_record([
                win.index.to_string(),
                win.label_date.format("%Y-%m-%d").to_string(),
                a.asset.clone(),
                fmt_f64(a.point),
                fmt_f64(a.min),
                fmt_f64(a.max),
                a.necof_ss.map(fmt_f64).unwrap_or_default(),
                a.parents.join("|"),
                a.flags(),
            ])?;
        }
    }
    w.flush()
}

fn write_clusters<W: std::io::Write>(out: W, windows: &[WindowResult]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window", "date", "asset", "cluster"])?;
    for win in windows {
        for (a, l) in win.assets.iter().zip(&win.clusters.labels) {
            w.write_record([
                win.index.to_string(),
                win.label_date.format("%Y-%m-%d").to_string(),
                a.clone(),
                l.to_string(),
            ])?;
        }
    }
    w.flush()
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    if args.nodes == 0 {
        return Err(CliError::Config("--nodes must be at least 1".into()));
    }
    if !(args.scale > 0.0 && args.scale.is_finite()) {
        return Err(CliError::Config("--scale must be positive".into()));
    }
    let spec = SemSpec::random(random_dag(args.nodes, args.degree, args.seed), args.seed);
    let sim = simulate_sem(&spec, args.obs).map_err(|e: SynthError| CliError::Config(e.to_string()))?;
    let dates = business_days(args.obs + 1);
    let names = node_names(args.nodes);

    let file = fs::File::create(&args.out).map_err(out_err(&args.out))?;
    let write = |file: fs::File| -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        let mut header = vec!["date".to_string()];
        header.extend(names.iter().cloned());
        w.write_record(&header)?;
        let mut level = vec![1.0f64; args.nodes];
        for (t, d) in dates.iter().enumerate() {
            if t > 0 {
                for (i, l) in level.iter_mut().enumerate() {
                    *l *= (args.scale * sim.returns()[(t - 1, i)]).exp();
                }
            }
            let mut row = vec![d.format("%Y-%m-%d").to_string()];
            row.extend(level.iter().map(|&x| fmt_f64(x)));
            w.write_record(&row)?;
        }
        w.flush()
    };
    write(file).map_err(out_err(&args.out))?;
    if let Some(p) = &args.spec_out {
        fs::write(p, json_bytes(&spec)?).map_err(out_err(p))?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a).map(|_| ()),
        Command::Simulate(s) => cmd_simulate(s),
    }
}
