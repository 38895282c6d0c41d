//! Minimal SVG line charts for the CSV files this crate writes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#000000", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Which CSV schema a file follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    /// `config,t,prob,loss,derivative,f`: one series per config.
    Curves,
    /// `z,g_dc,g_default,lower,upper[,z_min]`: four series.
    Rates,
    /// `epoch,train_loss,test_accuracy,theta_norm,min_normalized_margin`.
    Trace,
}

struct Table {
    header: Vec<String>,
    rows: Vec<(u64, Vec<String>)>,
}

fn read_table(text: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Format {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Format {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(Table { header, rows })
}

impl Table {
    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format {
                line: 1,
                message: format!("missing column `{name}`"),
            })
    }
}

fn parse_cell(cell: &str, line: u64) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>().map(Some).map_err(|_| Error::Format {
        line,
        message: format!("`{cell}` is not a number"),
    })
}

/// Builds a chart from CSV text. `column` picks the y column for `curves`
/// (default `prob`) and `trace` (default `test_accuracy`); `rates` always
/// plots its four rate columns.
pub fn chart_from_csv(text: &str, kind: PlotKind, column: Option<&str>) -> Result<Chart> {
    let table = read_table(text)?;
    match kind {
        PlotKind::Curves => {
            let cfg = table.column("config")?;
            let x = table.column("t")?;
            let ycol = column.unwrap_or("prob");
            let y = table.column(ycol)?;
            let mut order: Vec<String> = Vec::new();
            let mut by_config: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for (line, row) in &table.rows {
                let (Some(xv), Some(yv)) = (parse_cell(&row[x], *line)?, parse_cell(&row[y], *line)?)
                else {
                    continue;
                };
                let name = row[cfg].clone();
                if !by_config.contains_key(&name) {
                    order.push(name.clone());
                }
                by_config.entry(name).or_default().push((xv, yv));
            }
            Ok(Chart {
                title: format!("DC loss shapes: {ycol}"),
                x_label: "margin t".into(),
                y_label: ycol.into(),
                series: order
                    .into_iter()
                    .map(|name| Series {
                        points: by_config.remove(&name).unwrap_or_default(),
                        name,
                    })
                    .collect(),
            })
        }
        PlotKind::Rates => {
            let x = table.column("z")?;
            let names = ["g_dc", "g_default", "lower", "upper"];
            let cols = names
                .iter()
                .map(|n| table.column(n))
                .collect::<Result<Vec<_>>>()?;
            let mut series: Vec<Series> = names
                .iter()
                .map(|n| Series {
                    name: (*n).into(),
                    points: Vec::new(),
                })
                .collect();
            for (line, row) in &table.rows {
                let Some(xv) = parse_cell(&row[x], *line)? else {
                    continue;
                };
                for (s, &c) in series.iter_mut().zip(&cols) {
                    if let Some(yv) = parse_cell(&row[c], *line)? {
                        s.points.push((xv, yv));
                    }
                }
            }
            Ok(Chart {
                title: "Convergence rate and bounds".into(),
                x_label: "z = ln t".into(),
                y_label: "rate".into(),
                series,
            })
        }
        PlotKind::Trace => {
            let x = table.column("epoch")?;
            let ycol = column.unwrap_or("test_accuracy");
            let y = table.column(ycol)?;
            let mut points = Vec::new();
            for (line, row) in &table.rows {
                if let (Some(xv), Some(yv)) = (parse_cell(&row[x], *line)?, parse_cell(&row[y], *line)?) {
                    points.push((xv, yv));
                }
            }
            Ok(Chart {
                title: format!("Training trace: {ycol}"),
                x_label: "epoch".into(),
                y_label: ycol.into(),
                series: vec![Series {
                    name: ycol.into(),
                    points,
                }],
            })
        }
    }
}

fn bounds(chart: &Chart) -> ((f64, f64), (f64, f64)) {
    let pts = chart
        .series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
    let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        xr = (xr.0.min(x), xr.1.max(x));
        yr = (yr.0.min(y), yr.1.max(y));
    }
    let widen = |(lo, hi): (f64, f64)| {
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 * (1.0 + lo.abs()) {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    (widen(xr), widen(yr))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Renders a standalone SVG 1.1 document. Output depends only on the chart.
pub fn render_svg(chart: &Chart) -> String {
    let ((x0, x1), (y0, y1)) = bounds(chart);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&chart.title)
    );

    // axes
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1"><line x1="{LEFT:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}"/><line x1="{LEFT:.1}" y1="{TOP:.1}" x2="{LEFT:.1}" y2="{:.1}"/></g>"#,
        TOP + ph,
        LEFT + pw,
        TOP + ph,
        TOP + ph
    );
    for k in 0..TICKS {
        let f = k as f64 / (TICKS - 1) as f64;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{LEFT:.1}" y2="{py:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    );

    for (i, series) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(&series.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn plot_file(input: &Path, kind: PlotKind, column: Option<&str>, output: &Path) -> Result<()> {
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let chart = chart_from_csv(&text, kind, column)?;
    std::fs::write(output, render_svg(&chart)).map_err(|e| Error::io(output, e))
}
