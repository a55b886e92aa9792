//! Static SVG line plots of trajectory and monitor CSVs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// Two coordinate columns against each other (default `x0`, `x1`).
    XyProjection,
    /// Columns against `tau` (default: the first `psi:` column, else `pp`).
    MonitorVsTau,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

fn malformed(path: &Path, reason: impl Into<String>) -> CliError {
    CliError::Csv {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).map_err(|e| malformed(path, e.to_string()))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| malformed(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.first().map(String::as_str) != Some("tau") {
        return Err(malformed(path, "first column must be `tau`"));
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| malformed(path, e.to_string()))?;
        let row = record
            .iter()
            .map(|c| match c.trim() {
                "" => Ok(None),
                s => s.parse::<f64>().map(Some),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| malformed(path, format!("row {}: {e}", i + 1)))?;
        if !row[0].is_some_and(f64::is_finite) {
            return Err(malformed(path, format!("row {}: tau must be a finite number", i + 1)));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(malformed(path, "no data rows"));
    }
    if rows.windows(2).any(|w| w[1][0] <= w[0][0]) {
        return Err(malformed(path, "tau is not strictly increasing"));
    }
    Ok(Table { header, rows })
}

/// Maps data ranges onto the plot box; a flat range is centred.
struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Axis {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if hi > lo {
            Axis { lo, hi }
        } else {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 1e-3 };
            Axis { lo: lo - pad, hi: lo + pad }
        }
    }

    fn map(&self, v: f64, from: f64, to: f64) -> f64 {
        from + (v - self.lo) / (self.hi - self.lo) * (to - from)
    }
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Series in row order, skipping rows where either value is missing.
fn series(table: &Table, kind: PlotKind, columns: &[String]) -> std::result::Result<(String, Vec<Series>), String> {
    let index = |name: &str| table.column(name).ok_or_else(|| format!("no column `{name}`"));
    let pairs = |xi: usize, yi: usize| -> Vec<(f64, f64)> {
        table
            .rows
            .iter()
            .filter_map(|r| Some((r[xi]?, r[yi]?)))
            .collect()
    };
    match kind {
        PlotKind::XyProjection => {
            let (a, b) = match columns {
                [] => ("x0", "x1"),
                [a, b] => (a.as_str(), b.as_str()),
                _ => return Err("xy-projection takes exactly two columns".into()),
            };
            let s = Series {
                label: format!("{b} vs {a}"),
                points: pairs(index(a)?, index(b)?),
            };
            Ok((a.to_string(), vec![s]))
        }
        PlotKind::MonitorVsTau => {
            let names: Vec<String> = if columns.is_empty() {
                let default = table
                    .header
                    .iter()
                    .find(|h| h.starts_with("psi:"))
                    .cloned()
                    .unwrap_or_else(|| "pp".into());
                vec![default]
            } else {
                columns.to_vec()
            };
            let out = names
                .iter()
                .map(|n| Ok(Series { label: n.clone(), points: pairs(0, index(n)?) }))
                .collect::<std::result::Result<Vec<_>, String>>()?;
            Ok(("tau".into(), out))
        }
    }
}

pub fn render(x_label: &str, series: &[Series]) -> String {
    let xs = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let ys = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN / 2.0, MARGIN / 2.0, HEIGHT - MARGIN);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    let text = |svg: &mut String, x: f64, y: f64, anchor: &str, s: &str| {
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        );
    };
    text(&mut svg, left, bottom + 16.0, "start", &format!("{:.6e}", xs.lo));
    text(&mut svg, right, bottom + 16.0, "end", &format!("{:.6e}", xs.hi));
    text(&mut svg, (left + right) / 2.0, bottom + 36.0, "middle", x_label);
    text(&mut svg, left - 4.0, bottom, "end", &format!("{:.3e}", ys.lo));
    text(&mut svg, left - 4.0, top + 10.0, "end", &format!("{:.3e}", ys.hi));
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", xs.map(x, left, right), ys.map(y, bottom, top)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" data-label="{}" points="{}"/>"#,
            escape(&s.label),
            pts.join(" ")
        );
        text(&mut svg, right - 4.0, top + 14.0 * (k + 1) as f64, "end", &s.label);
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn plot(csv_path: &Path, kind: PlotKind, columns: &[String], out: &PathBuf) -> Result<()> {
    let table = read_table(csv_path)?;
    let (x_label, series) = series(&table, kind, columns).map_err(|e| malformed(csv_path, e))?;
    if series.iter().any(|s| s.points.is_empty()) {
        return Err(malformed(csv_path, "a plotted column has no values"));
    }
    std::fs::write(out, render(&x_label, &series)).map_err(CliError::io(out))
}
