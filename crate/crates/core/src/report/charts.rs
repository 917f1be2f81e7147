//! Self-contained SVG charts: date-axis line charts and the co-cluster dot grid.

use std::fmt::Write as _;
use std::io::Read;

use chrono::NaiveDate;
use serde::Deserialize;

use super::ReportError;
use crate::network::CoClusterMatrix;
use crate::rolling::{MarketSeries, WindowResult};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const X_TICKS: usize = 6;
const Y_TICKS: usize = 5;
const CELL: f64 = 28.0;
const GRID_LABEL: f64 = 60.0;
const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

/// A dated annotation drawn as a vertical line.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct EventMarker {
    pub date: NaiveDate,
    pub label: String,
    pub color: String,
}

/// Reads `date,label,color` rows (header required).
pub fn load_events<R: Read>(source: R) -> Result<Vec<EventMarker>, ReportError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let mut out = Vec::new();
    for (k, rec) in rdr.deserialize::<EventMarker>().enumerate() {
        let ev = rec.map_err(|e| ReportError::MalformedEvent { row: k + 2, reason: e.to_string() })?;
        out.push(ev);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSeries {
    pub name: String,
    pub values: Vec<f64>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn svg_open(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        width / 2.0,
        escape(title)
    );
}

/// Line chart over `dates`, one polyline per series.
pub fn line_chart(
    title: &str,
    dates: &[NaiveDate],
    series: &[LineSeries],
    events: &[EventMarker],
) -> Result<String, ReportError> {
    if dates.is_empty() || series.is_empty() || series.iter().any(|s| s.values.len() != dates.len()) {
        return Err(ReportError::EmptyInput);
    }
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let day = |d: NaiveDate| (d - dates[0]).num_days() as f64;
    let span = day(dates[dates.len() - 1]);
    let x_of = |d: NaiveDate| {
        if span > 0.0 {
            MARGIN_LEFT + plot_w * day(d) / span
        } else {
            MARGIN_LEFT + plot_w / 2.0
        }
    };

    let finite = series.iter().flat_map(|s| s.values.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = (lo.abs() * 0.1).max(0.5);
        lo -= pad;
        hi += pad;
    }
    let y_of = |v: f64| MARGIN_TOP + plot_h * (hi - v) / (hi - lo);

    let mut out = String::new();
    svg_open(&mut out, WIDTH, HEIGHT, title);
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN_LEFT:.2}\" y=\"{MARGIN_TOP:.2}\" width=\"{plot_w:.2}\" height=\"{plot_h:.2}\" fill=\"none\" stroke=\"#444\"/>"
    );

    out.push_str("<g class=\"y-axis\">\n");
    for k in 0..=Y_TICKS {
        let v = lo + (hi - lo) * k as f64 / Y_TICKS as f64;
        let y = y_of(v);
        let _ = writeln!(
            out,
            "<line x1=\"{MARGIN_LEFT:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/><text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v:.3}</text>",
            MARGIN_LEFT + plot_w,
            MARGIN_LEFT - 6.0,
            y + 4.0
        );
    }
    out.push_str("</g>\n<g class=\"x-axis\">\n");
    let n_ticks = if span > 0.0 { X_TICKS } else { 0 };
    for k in 0..=n_ticks {
        let d = dates[0] + chrono::Duration::days((span * k as f64 / X_TICKS.max(1) as f64).round() as i64);
        let x = x_of(d);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#444\"/><text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 5.0,
            MARGIN_TOP + plot_h + 18.0,
            d.format("%Y-%m-%d")
        );
    }
    out.push_str("</g>\n");

    if !events.is_empty() {
        out.push_str("<g class=\"events\">\n");
        for ev in events.iter().filter(|e| e.date >= dates[0] && e.date <= dates[dates.len() - 1]) {
            let x = x_of(ev.date);
            let _ = writeln!(
                out,
                "<line x1=\"{x:.2}\" y1=\"{MARGIN_TOP:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"{}\" stroke-dasharray=\"4 3\"><title>{} ({})</title></line>",
                MARGIN_TOP + plot_h,
                escape(&ev.color),
                escape(&ev.label),
                ev.date
            );
        }
        out.push_str("</g>\n");
    }

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = dates
            .iter()
            .zip(&s.values)
            .filter(|(_, v)| v.is_finite())
            .map(|(&d, &v)| format!("{:.2},{:.2}", x_of(d), y_of(v)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline class=\"series\" data-name=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            escape(&s.name),
            points.join(" ")
        );
        let ly = MARGIN_TOP + 14.0 * k as f64 + 8.0;
        let lx = WIDTH - MARGIN_RIGHT + 10.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{:.2}\" y=\"{:.2}\">{}</text>",
            lx + 16.0,
            lx + 20.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// The three market-level charts as `(file stem, svg)`.
pub fn market_charts(
    market: &MarketSeries,
    events: &[EventMarker],
) -> Result<Vec<(&'static str, String)>, ReportError> {
    let one = |name: &str, values: Vec<f64>| vec![LineSeries { name: name.to_string(), values }];
    Ok(vec![
        (
            "market_necof",
            line_chart("Market NECOF", &market.dates, &one("mean NECOF", market.mean_necof.clone()), events)?,
        ),
        (
            "n_clusters",
            line_chart(
                "Number of clusters",
                &market.dates,
                &one("clusters", market.n_clusters.iter().map(|&c| c as f64).collect()),
                events,
            )?,
        ),
        ("density", line_chart("Network density", &market.dates, &one("density", market.density.clone()), events)?),
    ])
}

/// Point NECOF of every asset over time; windows lacking an asset leave a gap.
pub fn asset_necof_chart(windows: &[WindowResult], events: &[EventMarker]) -> Result<String, ReportError> {
    let first = windows.first().ok_or(ReportError::EmptyInput)?;
    let dates: Vec<NaiveDate> = windows.iter().map(|w| w.label_date).collect();
    let series: Vec<LineSeries> = first
        .assets
        .iter()
        .map(|a| LineSeries {
            name: a.clone(),
            values: windows.iter().map(|w| w.necof.get(a).map_or(f64::NAN, |r| r.point)).collect(),
        })
        .collect();
    line_chart("NECOF by asset", &dates, &series, events)
}

/// Dot grid whose dot radius and opacity are proportional to co-cluster frequency.
pub fn cocluster_chart(m: &CoClusterMatrix) -> Result<String, ReportError> {
    let n = m.assets.len();
    if n == 0 {
        return Err(ReportError::EmptyInput);
    }
    let size = GRID_LABEL + CELL * n as f64 + 20.0;
    let max_r = CELL / 2.0 - 1.0;
    let mut out = String::new();
    svg_open(&mut out, size, size + 20.0, "Co-cluster frequency");
    let top = GRID_LABEL + 20.0;
    for (k, a) in m.assets.iter().enumerate() {
        let c = GRID_LABEL + CELL * (k as f64 + 0.5);
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text><text x=\"{c:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            GRID_LABEL - 6.0,
            top + CELL * (k as f64 + 0.5) + 4.0,
            escape(a),
            top - 6.0,
            escape(a)
        );
    }
    for i in 0..n {
        for j in 0..n {
            let f = m.frequency[(i, j)].clamp(0.0, 1.0);
            let cx = GRID_LABEL + CELL * (j as f64 + 0.5);
            let cy = top + CELL * (i as f64 + 0.5);
            let _ = writeln!(
                out,
                "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{:.2}\" fill=\"#08306b\" fill-opacity=\"{f:.4}\"><title>{} / {}: {f:.4}</title></circle>",
                max_r * f,
                escape(&m.assets[i]),
                escape(&m.assets[j])
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{cocluster, ClusterAssignment, Membership};

    fn dates(n: usize) -> Vec<NaiveDate> {
        (0..n).map(|k| NaiveDate::from_ymd_opt(2001, 1, 1).unwrap() + chrono::Duration::days(91 * k as i64)).collect()
    }

    fn polyline_points(svg: &str) -> Vec<Vec<(f64, f64)>> {
        svg.lines()
            .filter(|l| l.starts_with("<polyline"))
            .map(|l| {
                let start = l.find("points=\"").unwrap() + 8;
                let end = start + l[start..].find('"').unwrap();
                l[start..end]
                    .split_whitespace()
                    .map(|p| {
                        let (x, y) = p.split_once(',').unwrap();
                        (x.parse().unwrap(), y.parse().unwrap())
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn constant_series_is_horizontal() {
        let s = [LineSeries { name: "c".into(), values: vec![0.3; 5] }];
        let svg = line_chart("t", &dates(5), &s, &[]).unwrap();
        let pts = &polyline_points(&svg)[0];
        assert_eq!(pts.len(), 5);
        assert!(pts.iter().all(|p| p.1 == pts[0].1));
        // The value sits mid-axis.
        assert!((pts[0].1 - (MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0)).abs() < 0.01);
    }

    #[test]
    fn two_windows_give_two_points() {
        let s = [LineSeries { name: "m".into(), values: vec![0.1, 0.4] }];
        let svg = line_chart("t", &dates(2), &s, &[]).unwrap();
        let pts = &polyline_points(&svg)[0];
        assert_eq!(pts.len(), 2);
        assert!(pts[0].0 < pts[1].0);
        assert!(pts[0].1 > pts[1].1, "larger values are drawn higher");
    }

    #[test]
    fn events_inside_the_range_become_vertical_lines() {
        let d = dates(4);
        let ev = vec![
            EventMarker { date: d[1], label: "crisis".into(), color: "red".into() },
            EventMarker {
                date: NaiveDate::from_ymd_opt(1990, 1, 1).unwrap(),
                label: "early".into(),
                color: "orange".into(),
            },
        ];
        let s = [LineSeries { name: "m".into(), values: vec![0.1, 0.2, 0.3, 0.4] }];
        let svg = line_chart("t", &d, &s, &ev).unwrap();
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
        assert!(svg.contains("stroke=\"red\""));
        assert!(svg.contains("crisis"));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(line_chart("t", &[], &[], &[]), Err(ReportError::EmptyInput)));
        let s = [LineSeries { name: "m".into(), values: vec![0.1] }];
        assert!(line_chart("t", &dates(2), &s, &[]).is_err());
    }

    #[test]
    fn full_frequency_is_a_maximal_opaque_dot() {
        let u: Vec<String> = vec!["DKK".into(), "EUR".into(), "JPY".into()];
        let l = ClusterAssignment { labels: vec![0, 0, 1], modularity: 0.0, n_communities: 2 };
        let m = cocluster(&[Membership { assets: &u, assignment: &l }], &u).unwrap();
        let svg = cocluster_chart(&m).unwrap();
        let max_r = CELL / 2.0 - 1.0;
        let dke = svg.lines().find(|l| l.contains("<title>DKK / EUR")).unwrap();
        assert!(dke.contains(&format!("r=\"{max_r:.2}\"")));
        assert!(dke.contains("fill-opacity=\"1.0000\""));
        let dkj = svg.lines().find(|l| l.contains("<title>DKK / JPY")).unwrap();
        assert!(dkj.contains("r=\"0.00\"") && dkj.contains("fill-opacity=\"0.0000\""));
        assert_eq!(svg.matches("<circle").count(), 9);
    }

    #[test]
    fn shipped_event_file_parses() {
        let ev = load_events(include_str!("../../data/events.csv").as_bytes()).unwrap();
        assert_eq!(ev.len(), 10);
        assert!(ev.windows(2).all(|w| w[0].date <= w[1].date));
    }

    #[test]
    fn events_csv() {
        let src = "date,label,color\n2008-09-15, Lehman ,red\n2020-03-11,COVID-19,orange\n";
        let ev = load_events(src.as_bytes()).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].label, "Lehman");
        assert_eq!(ev[1].date, NaiveDate::from_ymd_opt(2020, 3, 11).unwrap());
        let bad = load_events("date,label,color\n2008-13-01,x,red\n".as_bytes());
        assert!(matches!(bad, Err(ReportError::MalformedEvent { row: 2, .. })));
    }
}
