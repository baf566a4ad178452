//! CSV, JSON sidecar and plot-data files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::{CurvePoint, RateCurve};

pub const CSV_HEADER: &str = "scheme,rho,snr_dB,mean_rate,ci95,samples";

/// One row per curve point, curves in run order.
pub fn to_csv(curves: &[RateCurve]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in curves {
        for p in &c.points {
            let ci = p.ci95.map_or_else(|| "NA".to_string(), |v| v.to_string());
            writeln!(out, "{},{},{},{},{},{}", c.scheme, c.rho, p.snr_db, p.mean_rate, ci, p.samples).expect("string write");
        }
    }
    out
}

fn parse_field<T: std::str::FromStr>(line: usize, name: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Validation(format!("line {line}: bad {name} `{s}`")))
}

/// Reads curves back from [`to_csv`] output. Rows of the same
/// `(scheme, rho)` form one curve; the fingerprint is left empty.
pub fn from_csv(text: &str) -> Result<Vec<RateCurve>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Validation(format!("missing header `{CSV_HEADER}`"))),
    }
    let mut curves: Vec<RateCurve> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::Validation(format!("line {}: expected 6 fields", i + 1)));
        }
        let rho: f64 = parse_field(i + 1, "rho", f[1])?;
        let point = CurvePoint {
            snr_db: parse_field(i + 1, "snr_dB", f[2])?,
            mean_rate: parse_field(i + 1, "mean_rate", f[3])?,
            ci95: if f[4].trim() == "NA" {
                None
            } else {
                Some(parse_field(i + 1, "ci95", f[4])?)
            },
            samples: parse_field(i + 1, "samples", f[5])?,
        };
        match curves.iter_mut().find(|c| c.scheme == f[0] && c.rho.to_bits() == rho.to_bits()) {
            Some(c) => c.points.push(point),
            None => curves.push(RateCurve {
                scheme: f[0].to_string(),
                rho,
                points: vec![point],
                fingerprint: String::new(),
            }),
        }
    }
    for c in &mut curves {
        c.points.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    }
    Ok(curves)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    experiment: &'a str,
    fingerprint: String,
    config: &'a ExperimentConfig,
    curves: Vec<SidecarCurve<'a>>,
}

#[derive(Serialize)]
struct SidecarCurve<'a> {
    scheme: &'a str,
    rho: f64,
    points: usize,
}

/// JSON sidecar with the full configuration and its fingerprint.
pub fn sidecar_json(cfg: &ExperimentConfig, curves: &[RateCurve]) -> String {
    let side = Sidecar {
        experiment: cfg.experiment.as_str(),
        fingerprint: cfg.fingerprint(),
        config: cfg,
        curves: curves
            .iter()
            .map(|c| SidecarCurve {
                scheme: &c.scheme,
                rho: c.rho,
                points: c.points.len(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&side).expect("sidecar serializes");
    s.push('\n');
    s
}

/// Writes `<experiment>.csv` and `<experiment>.json` into `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, curves: &[RateCurve], dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let stem = cfg.experiment.as_str();
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    fs::write(&csv, to_csv(curves))?;
    fs::write(&json, sidecar_json(cfg, curves))?;
    Ok((csv, json))
}

/// Gnuplot data: one indexed block per curve, separated by two blank lines.
pub fn gnuplot_data(curves: &[RateCurve]) -> String {
    let mut out = String::new();
    for (i, c) in curves.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        writeln!(out, "# {} rho={}", c.scheme, c.rho).expect("string write");
        writeln!(out, "# snr_dB mean_rate ci95").expect("string write");
        for p in &c.points {
            writeln!(out, "{} {} {}", p.snr_db, p.mean_rate, p.ci95.unwrap_or(0.0)).expect("string write");
        }
    }
    out
}

/// Vega-Lite line chart with the data inlined.
pub fn vega_lite(curves: &[RateCurve]) -> String {
    let values: Vec<serde_json::Value> = curves
        .iter()
        .flat_map(|c| {
            c.points.iter().map(move |p| {
                serde_json::json!({
                    "series": format!("{} rho={}", c.scheme, c.rho),
                    "snr_dB": p.snr_db,
                    "mean_rate": p.mean_rate,
                })
            })
        })
        .collect();
    let chart = serde_json::json!({
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "data": { "values": values },
        "mark": { "type": "line", "point": true },
        "encoding": {
            "x": { "field": "snr_dB", "type": "quantitative", "title": "SNR (dB)" },
            "y": { "field": "mean_rate", "type": "quantitative", "title": "sum rate (bits/channel use)" },
            "color": { "field": "series", "type": "nominal" }
        }
    });
    let mut s = serde_json::to_string_pretty(&chart).expect("chart serializes");
    s.push('\n');
    s
}
