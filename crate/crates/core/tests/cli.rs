use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use regex::Regex;

use necof::report::sha256_hex;

fn necof(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_necof"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1600000000")
        .output()
        .unwrap()
}

fn fixture(dir: &Path) {
    let out = necof(&["simulate", "--nodes", "5", "--obs", "450", "--seed", "3", "--out", "rates.csv"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_input_prints_usage_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = necof(&["analyze"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn unreadable_input_exits_1_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = necof(&["analyze", "--input", "nope.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=input: "));
}

#[test]
fn malformed_rates_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "date,EUR\n2001-01-02,1.0\n2001-01-03,-1.0\n").unwrap();
    let out = necof(&["analyze", "--input", "bad.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("non-positive rate"));
}

#[test]
fn bad_configuration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let out = necof(&["analyze", "--input", "rates.csv", "--alpha", "1.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error kind=config: "));
    let out = necof(&["analyze", "--input", "rates.csv", "--window", "5000"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixture_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let out = necof(&["analyze", "--input", "rates.csv", "--out", "run"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let run = dir.path().join("run");

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["windows"].as_array().unwrap().len(), 4);
    assert_eq!(manifest["timestamp"], "2020-09-13T12:26:40Z");
    assert_eq!(manifest["config"]["window_len"], 250);
    let input = std::fs::read(dir.path().join("rates.csv")).unwrap();
    assert_eq!(manifest["input"]["sha256"], sha256_hex(&input));

    for p in manifest["outputs"].as_array().unwrap() {
        assert!(run.join(p.as_str().unwrap()).is_file(), "{p}");
    }
    for w in manifest["windows"].as_array().unwrap() {
        assert!(run.join(w["json"].as_str().unwrap()).is_file());
        for g in w["graphs"].as_array().unwrap() {
            assert!(run.join(g.as_str().unwrap()).is_file());
        }
    }
    for chart in ["market_necof", "n_clusters", "density"] {
        let svg = std::fs::read_to_string(run.join(format!("charts/{chart}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
    let series = std::fs::read_to_string(run.join("market_series.csv")).unwrap();
    assert_eq!(series.lines().count(), 5);
    assert!(series.starts_with("date,mean_necof,n_clusters,density\n"));
}

type EdgeAttrs = (String, String, bool, Option<String>, String, String);

#[test]
fn graph_exports_reparse_to_the_window_graph() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let out =
        necof(&["analyze", "--input", "rates.csv", "--out", "run", "--graph-formats", "dot,graphml,json"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let run = dir.path().join("run");
    let dot_edge = Regex::new(r#"^  "([^"]+)" -> "([^"]+)" \[(.*)\];$"#).unwrap();
    let gml_edge = Regex::new(
        r#"(?s)<edge source="([^"]+)" target="([^"]+)">\s*<data key="directed">(true|false)</data>\s*(?:<data key="weight">([^<]+)</data>\s*)?<data key="color">([^<]+)</data>\s*<data key="penwidth">([^<]+)</data>"#,
    )
    .unwrap();

    for k in 0..4 {
        let doc: serde_json::Value =
            serde_json::from_slice(&std::fs::read(run.join(format!("windows/{k:03}.json"))).unwrap()).unwrap();
        let fmt = |v: &serde_json::Value| necof::fmt_f64(v.as_f64().unwrap());
        let expected: BTreeSet<EdgeAttrs> = doc["graph"]["edges"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| {
                (
                    e["source"].as_str().unwrap().to_string(),
                    e["target"].as_str().unwrap().to_string(),
                    e["directed"].as_bool().unwrap(),
                    (!e["weight"].is_null()).then(|| fmt(&e["weight"])),
                    e["color"].as_str().unwrap().to_string(),
                    fmt(&e["penwidth"]),
                )
            })
            .collect();
        // The window's CPDAG has the same number of edges as the export.
        let cpdag = &doc["cpdag"];
        let n_edges = cpdag["directed"].as_array().unwrap().len() + cpdag["undirected"].as_array().unwrap().len();
        assert_eq!(expected.len(), n_edges);

        let dot = std::fs::read_to_string(run.join(format!("graphs/{k:03}.dot"))).unwrap();
        let from_dot: BTreeSet<EdgeAttrs> = dot
            .lines()
            .filter_map(|l| dot_edge.captures(l))
            .map(|c| {
                let attrs: Vec<(&str, &str)> = c[3].split(", ").map(|kv| kv.split_once('=').unwrap()).collect();
                let get = |k: &str| attrs.iter().find(|a| a.0 == k).map(|a| a.1.to_string());
                (
                    c[1].to_string(),
                    c[2].to_string(),
                    get("dir").is_none(),
                    get("weight"),
                    get("color").unwrap(),
                    get("penwidth").unwrap(),
                )
            })
            .collect();
        assert_eq!(from_dot, expected);
        let dot_nodes = dot.lines().filter(|l| l.ends_with("\";")).count();
        assert_eq!(dot_nodes, doc["assets"].as_array().unwrap().len());

        let gml = std::fs::read_to_string(run.join(format!("graphs/{k:03}.graphml"))).unwrap();
        let from_gml: BTreeSet<EdgeAttrs> = gml_edge
            .captures_iter(&gml)
            .map(|c| {
                (
                    c[1].to_string(),
                    c[2].to_string(),
                    &c[3] == "true",
                    c.get(4).map(|m| m.as_str().to_string()),
                    c[5].to_string(),
                    c[6].to_string(),
                )
            })
            .collect();
        assert_eq!(from_gml, expected);
    }
}

#[test]
fn events_are_drawn_on_market_charts() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    // Fixture dates run from 2000-01-03 over 451 business days.
    std::fs::write(dir.path().join("events.csv"), "date,label,color\n2001-03-01,test event,red\n").unwrap();
    let out = necof(&["analyze", "--input", "rates.csv", "--out", "run", "--events", "events.csv"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let svg = std::fs::read_to_string(dir.path().join("run/charts/market_necof.svg")).unwrap();
    assert!(svg.contains("test event"));
}

#[test]
fn simulate_writes_positive_rates() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let text = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("date,X1,X2,X3,X4,X5"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 451);
    assert!(rows.iter().all(|r| r.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() > 0.0)));
}
