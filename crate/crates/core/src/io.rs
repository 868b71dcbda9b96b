//! Edge-list ingestion, result tables and run manifests.
//!
//! Edge lists are whitespace-separated `t i j weight` lines with 1-based `t`
//! and 0-based vertex indices; `#` starts a comment. Every table is rendered
//! with a header row and floats in shortest round-trip form, so output is
//! byte-stable for a fixed seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{CdpError, Result};
use crate::evaluation::{Comparison, ExperimentReport, PerfRecord, SummaryRow, TimingRow};
use crate::graph::Snapshot;
use crate::pipeline::ScoreSeries;

fn format_err(line: usize, message: impl Into<String>) -> CdpError {
    CdpError::Format {
        line,
        message: message.into(),
    }
}

/// Parses an edge list into one dense snapshot per distinct `t`, ascending.
///
/// An edge listed once is mirrored. Repeating an entry (either orientation)
/// with the same weight is accepted; a different weight is an error. With
/// `n` unset the vertex count is one more than the largest index seen.
pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Vec<Snapshot>> {
    let mut edges: BTreeMap<usize, BTreeMap<(usize, usize), f64>> = BTreeMap::new();
    let mut max_index = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(format_err(
                line_no,
                format!("expected `t i j weight`, got {} fields", fields.len()),
            ));
        }
        let int = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| format_err(line_no, format!("{what} `{s}` is not a nonnegative integer")))
        };
        let t = int(fields[0], "time index")?;
        if t == 0 {
            return Err(format_err(line_no, "time indices start at 1"));
        }
        let i = int(fields[1], "vertex")?;
        let j = int(fields[2], "vertex")?;
        let weight: f64 = fields[3]
            .parse()
            .map_err(|_| format_err(line_no, format!("weight `{}` is not a number", fields[3])))?;
        if !weight.is_finite() || weight < 0.0 {
            return Err(format_err(line_no, format!("weight {weight} must be finite and nonnegative")));
        }
        if let Some(n) = n {
            if i >= n || j >= n {
                return Err(format_err(line_no, format!("vertex {} out of range for n={n}", i.max(j))));
            }
        }
        max_index = max_index.max(i).max(j);
        let key = (i.min(j), i.max(j));
        match edges.entry(t).or_default().insert(key, weight) {
            Some(prev) if prev != weight => {
                return Err(format_err(
                    line_no,
                    format!("conflicting weights {prev} and {weight} for ({i}, {j}) at t={t}"),
                ));
            }
            _ => {}
        }
    }
    let n = n.unwrap_or(max_index + 1);
    edges
        .into_iter()
        .map(|(t, entries)| {
            let mut w = DMatrix::zeros(n, n);
            for ((i, j), x) in entries {
                w[(i, j)] = x;
                w[(j, i)] = x;
            }
            Snapshot::new(t, w).map_err(CdpError::at(t))
        })
        .collect()
}

pub fn read_edge_list(path: &Path, n: Option<usize>) -> Result<Vec<Snapshot>> {
    parse_edge_list(&fs::read_to_string(path)?, n)
}

/// Renders snapshots so that [`parse_edge_list`] returns them unchanged.
///
/// Only the upper triangle's nonzero entries are written, plus an explicit
/// zero for `(0, n-1)` when that entry is absent; that line keeps the vertex
/// count and any edgeless snapshot visible to the reader.
pub fn format_edge_list(snapshots: &[Snapshot]) -> String {
    let mut out = String::from("# t i j weight\n");
    for s in snapshots {
        let w = s.weights();
        let n = s.n();
        for i in 0..n {
            for j in i..n {
                let x = w[(i, j)];
                if x != 0.0 || (i == 0 && j == n - 1) {
                    let _ = writeln!(out, "{} {i} {j} {x}", s.t());
                }
            }
        }
    }
    out
}

pub fn write_edge_list(path: &Path, snapshots: &[Snapshot]) -> Result<()> {
    fs::write(path, format_edge_list(snapshots))?;
    Ok(())
}

/// `t,vertex,z,zscore,detected`, one row per scored vertex.
pub fn scores_csv(series: &ScoreSeries) -> String {
    let mut out = String::from("t,vertex,z,zscore,detected\n");
    for (t, scores) in &series.scores {
        let zs = &series.zscores[t];
        let detected = &series.detections[t];
        for (v, z) in scores.z.iter().enumerate() {
            let flag = u8::from(detected.binary_search(&v).is_ok());
            let _ = writeln!(out, "{t},{v},{z},{},{flag}", zs[v]);
        }
    }
    out
}

/// `t,d` for every embedded snapshot.
pub fn dims_csv(series: &ScoreSeries) -> String {
    let mut out = String::from("t,d\n");
    for (t, d) in &series.dims {
        let _ = writeln!(out, "{t},{d}");
    }
    out
}

/// `t,scored,detected,fraction` for every scored instant.
pub fn detection_csv(series: &ScoreSeries) -> String {
    let mut out = String::from("t,vertices,detected,fraction\n");
    for (t, det) in &series.detections {
        let frac = det.len() as f64 / series.n as f64;
        let _ = writeln!(out, "{t},{},{},{frac}", series.n, det.len());
    }
    out
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn performance_csv(records: &[PerfRecord]) -> String {
    let mut out = String::from("scenario,method,window,run,t,phi,eta,eta_bar\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.scenario,
            r.method,
            r.window,
            r.run,
            r.t,
            r.phi,
            r.eta,
            opt(r.eta_bar)
        );
    }
    out
}

pub fn summary_csv(scenario: &str, rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "scenario,method,window,t,runs,eta_q1,eta_median,eta_q3,eta_bar_q1,eta_bar_median,eta_bar_q3\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{scenario},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.window,
            r.t,
            r.runs,
            r.eta_q1,
            r.eta_median,
            r.eta_q3,
            opt(r.eta_bar_q1),
            opt(r.eta_bar_median),
            opt(r.eta_bar_q3)
        );
    }
    out
}

pub fn sign_tests_csv(scenario: &str, rows: &[Comparison]) -> String {
    let mut out = String::from("scenario,window,t,a,b,alternative,runs,p_value\n");
    for c in rows {
        let _ = writeln!(
            out,
            "{scenario},{},{},{},{},{},{},{}",
            c.window,
            c.t,
            c.a,
            c.b,
            c.alternative.as_str(),
            c.runs,
            opt(c.p_value)
        );
    }
    out
}

pub fn proportions_csv(scenario: &str, rows: &[Comparison]) -> String {
    let mut out = String::from("scenario,window,t,a,b,runs,proportion\n");
    for c in rows {
        let _ = writeln!(
            out,
            "{scenario},{},{},{},{},{},{}",
            c.window, c.t, c.a, c.b, c.runs, c.proportion
        );
    }
    out
}

pub fn timings_csv(scenario: &str, rows: &[TimingRow]) -> String {
    let mut out = String::from("scenario,method,window,embed_secs,score_secs\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{scenario},{},{},{},{}",
            r.method, r.window, r.embed_secs, r.score_secs
        );
    }
    out
}

/// Writes every table of an experiment into `dir`; returns the paths written.
pub fn write_experiment(dir: &Path, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    let s = &report.scenario;
    let files = [
        ("performance.csv", performance_csv(&report.records)),
        ("summary.csv", summary_csv(s, &report.summary())),
        ("sign_tests.csv", sign_tests_csv(s, &report.comparisons)),
        ("proportions.csv", proportions_csv(s, &report.comparisons)),
        ("timings.csv", timings_csv(s, &report.timings)),
    ];
    files
        .into_iter()
        .map(|(name, body)| write_file(dir, name, &body))
        .collect()
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Record of one command invocation.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Effective settings after merging the config file and flags.
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            ..Self::default()
        }
    }
}

/// Parses flat `key = value` lines; `#` starts a comment. Keys may be
/// written with or without a leading `--`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format_err(idx + 1, "expected `key = value`"))?;
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(format_err(idx + 1, "empty key"));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}
