//! Artifact writers: CSV tables, minimal SVG line plots, checksums, and the
//! run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// A columnar table destined for one CSV file (and one companion SVG).
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    /// Column-major data; all columns share a length.
    pub columns: Vec<Vec<f64>>,
    /// Render the companion plot with a log y axis.
    pub log_y: bool,
}

impl Table {
    pub fn new(name: &str, headers: &[&str], columns: Vec<Vec<f64>>) -> Self {
        assert_eq!(headers.len(), columns.len());
        Self {
            name: name.to_string(),
            headers: headers.iter().map(|s| s.to_string()).collect(),
            columns,
            log_y: false,
        }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.headers.join(",");
        out.push('\n');
        let rows = self.columns.first().map_or(0, Vec::len);
        for r in 0..rows {
            for (c, col) in self.columns.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                // 17 significant digits round-trip f64 exactly
                let _ = write!(out, "{:.16e}", col[r]);
            }
            out.push('\n');
        }
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Parse a CSV produced by [`Table::to_csv`] (header row + float cells).
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let headers: Vec<String> = lines
        .next()
        .context("empty CSV")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != headers.len() {
            anyhow::bail!(
                "row {} has {} cells, header has {}",
                i + 2,
                cells.len(),
                headers.len()
            );
        }
        for (col, cell) in columns.iter_mut().zip(cells) {
            col.push(
                cell.trim()
                    .parse::<f64>()
                    .with_context(|| format!("row {}", i + 2))?,
            );
        }
    }
    Ok((headers, columns))
}

const PLOT_W: f64 = 800.0;
const PLOT_H: f64 = 500.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Minimal line plot: first column is the x axis, every other column is one
/// series. Log-scale y drops non-positive points.
pub fn svg_line_plot(headers: &[String], columns: &[Vec<f64>], log_y: bool, title: &str) -> String {
    let xs = &columns[0];
    let transform = |v: f64| -> Option<f64> {
        if log_y {
            (v > 0.0).then(|| v.log10())
        } else {
            Some(v)
        }
    };
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for col in &columns[1..] {
        for &v in col {
            if let Some(t) = transform(v) {
                ymin = ymin.min(t);
                ymax = ymax.max(t);
            }
        }
    }
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if !ymin.is_finite() || !ymax.is_finite() {
        ymin = 0.0;
        ymax = 1.0;
    }
    if ymax - ymin < 1e-300 {
        ymax = ymin + 1.0;
    }
    let xspan = if xmax > xmin { xmax - xmin } else { 1.0 };
    let sx = |x: f64| MARGIN + (x - xmin) / xspan * (PLOT_W - 2.0 * MARGIN);
    let sy = |y: f64| PLOT_H - MARGIN - (y - ymin) / (ymax - ymin) * (PLOT_H - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" viewBox=\"0 0 {PLOT_W} {PLOT_H}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{PLOT_W}\" height=\"{PLOT_H}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        PLOT_W - 2.0 * MARGIN,
        PLOT_H - 2.0 * MARGIN
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"25\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\">{}</text>",
        PLOT_W / 2.0,
        title
    );
    let ylabel = |v: f64| {
        if log_y {
            format!("1e{v:.2}")
        } else {
            format!("{v:.4}")
        }
    };
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">{}</text>",
        MARGIN - 5.0,
        PLOT_H - MARGIN,
        ylabel(ymin)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">{}</text>",
        MARGIN - 5.0,
        MARGIN + 4.0,
        ylabel(ymax)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{MARGIN}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{xmin:.4}</text>",
        PLOT_H - MARGIN + 15.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">{xmax:.4}</text>",
        PLOT_W - MARGIN,
        PLOT_H - MARGIN + 15.0
    );
    for (k, col) in columns[1..].iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut points = String::new();
        for (&x, &v) in xs.iter().zip(col) {
            if let Some(t) = transform(v) {
                let _ = write!(points, "{:.3},{:.3} ", sx(x), sy(t));
            }
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            points.trim_end()
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" fill=\"{color}\">{}</text>",
            PLOT_W - MARGIN + 5.0,
            MARGIN + 14.0 * k as f64,
            headers[k + 1]
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Serialize)]
pub struct TaskStatus {
    pub task: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub rng_algorithm: String,
    pub experiment: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub wall_clock_seconds: f64,
    pub status: Vec<TaskStatus>,
    pub outputs: Vec<OutputRecord>,
    pub fits: Vec<serde_json::Value>,
    pub metrics: serde_json::Map<String, serde_json::Value>,
}

/// Write the tables (CSV + SVG each), collect checksums, and return the
/// output records. Writing is serialized and alphabetical in table order.
pub fn write_tables(dir: &Path, tables: &[Table]) -> Result<Vec<OutputRecord>> {
    std::fs::create_dir_all(dir)?;
    let mut records = Vec::new();
    for t in tables {
        let csv = t.to_csv();
        let csv_path: PathBuf = dir.join(format!("{}.csv", t.name));
        std::fs::write(&csv_path, &csv).with_context(|| format!("writing {csv_path:?}"))?;
        records.push(OutputRecord {
            file: format!("{}.csv", t.name),
            sha256: sha256_hex(csv.as_bytes()),
        });
        let svg = svg_line_plot(&t.headers, &t.columns, t.log_y, &t.name);
        let svg_path = dir.join(format!("{}.svg", t.name));
        std::fs::write(&svg_path, &svg).with_context(|| format!("writing {svg_path:?}"))?;
        records.push(OutputRecord {
            file: format!("{}.svg", t.name),
            sha256: sha256_hex(svg.as_bytes()),
        });
    }
    Ok(records)
}
