//! CSV, SVG and manifest writers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use qib_core::SolverConfig;

use crate::error::CliResult;

pub const RATE_CURVE_HEADER: [&str; 7] = ["J", "rate", "I_xty_nats", "I_xpxt_nats", "feasible", "evals", "channel_file"];
pub const CLASSICAL_HEADER: [&str; 7] = ["J", "rate", "I_xty_nats", "I_xxt_nats", "feasible", "evals", "channel_json"];

/// One CSV row. `rate` and the informations are empty for failed points.
#[derive(Clone, Debug)]
pub struct Row {
    pub j: f64,
    pub rate: Option<f64>,
    pub i_xty: Option<f64>,
    pub i_cost: Option<f64>,
    pub feasible: bool,
    pub evals: u64,
    pub channel: String,
}

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Row]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record([
            r.j.to_string(),
            num(r.rate),
            num(r.i_xty),
            num(r.i_cost),
            r.feasible.to_string(),
            r.evals.to_string(),
            r.channel.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Witness file name for target `j`.
pub fn channel_file_name(j: f64) -> String {
    format!("channel_J{j:.6}.json")
}

/// Human-readable table on stdout; `bits` rescales informations by 1/ln 2.
pub fn print_table(rows: &[Row], bits: bool, cost_label: &str) {
    let (unit, scale) = if bits { ("bits", std::f64::consts::LN_2.recip()) } else { ("nats", 1.0) };
    let show = |v: Option<f64>, s: f64| v.map_or_else(|| "-".to_string(), |x| format!("{:.6}", x * s));
    println!("{:>8} {:>10} {:>14} {:>14} {:>9}", "J", "rate", format!("I_xty[{unit}]"), format!("{cost_label}[{unit}]"), "feasible");
    for r in rows {
        println!(
            "{:>8.4} {:>10} {:>14} {:>14} {:>9}",
            r.j,
            show(r.rate, 1.0),
            show(r.i_xty, scale),
            show(r.i_cost, scale),
            r.feasible
        );
    }
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 60.0;

fn px(j: f64) -> f64 {
    MARGIN + j * (WIDTH - 2.0 * MARGIN)
}

fn py(r: f64) -> f64 {
    HEIGHT - MARGIN - r * (HEIGHT - 2.0 * MARGIN)
}

/// Normalized rate against J in red, with the blue references R = J and R = J/2.
pub fn render_svg(points: &[(f64, f64)], title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600" viewBox="0 0 800 600">"#
    );
    let _ = writeln!(s, r#"<rect width="800" height="600" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="400" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        xml_escape(title)
    );
    // Axes and ticks.
    let _ = writeln!(
        s,
        r#"<polyline points="{:.1},{:.1} {:.1},{:.1} {:.1},{:.1}" fill="none" stroke="black"/>"#,
        px(0.0),
        py(1.0),
        px(0.0),
        py(0.0),
        px(1.0),
        py(0.0)
    );
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12">{v:.1}</text>"#,
            px(v),
            py(0.0),
            px(v),
            py(0.0) + 5.0,
            px(v),
            py(0.0) + 20.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="12">{v:.1}</text>"#,
            px(0.0) - 5.0,
            py(v),
            px(0.0),
            py(v),
            px(0.0) - 8.0,
            py(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="400" y="585" text-anchor="middle" font-family="sans-serif" font-size="14">J</text><text x="18" y="300" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 18 300)">normalized rate</text>"#
    );
    for (slope, dash) in [(1.0, ""), (0.5, r#" stroke-dasharray="6 4""#)] {
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="blue"{dash}/>"#,
            px(0.0),
            py(0.0),
            px(1.0),
            py(slope)
        );
    }
    if !points.is_empty() {
        let pts: Vec<String> = points
            .iter()
            .map(|&(j, r)| format!("{:.2},{:.2}", px(j), py(r.clamp(0.0, 1.0))))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="red" stroke-width="2"/>"#, pts.join(" "));
        for &(j, r) in points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="red"/>"#, px(j), py(r.clamp(0.0, 1.0)));
        }
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub argv: Vec<String>,
    pub version: &'static str,
    pub config: &'a SolverConfig,
    pub seed: u64,
    pub threads: usize,
    pub optimizer: Option<&'a str>,
    pub grid: &'a [f64],
    pub started: String,
    pub finished: String,
    pub input_sha256: String,
    pub outputs: Vec<String>,
}

impl Manifest<'_> {
    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
