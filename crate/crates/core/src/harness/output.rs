//! Result tables: CSV emission and parsing, plus static SVG line charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};

pub const CSV_HEADER: [&str; 7] = [
    "method",
    "x",
    "accuracy",
    "stderr",
    "final_true_reward",
    "used_units",
    "degradation",
];

/// One aggregated point of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    /// Budget `N`, horizon `T` or swept parameter value.
    pub x: f64,
    pub accuracy: f64,
    pub stderr: f64,
    pub final_true_reward: f64,
    pub used_units: f64,
    pub degradation: f64,
}

/// Formats `v` with 9 significant digits, `%g` style.
pub fn format_g9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Rounds `v` to the value its 9-digit rendering parses back to.
pub fn round_g9(v: f64) -> f64 {
    format_g9(v).parse().expect("formatted float parses")
}

/// Rows in emission order: by method, then x.
pub fn sorted_rows(rows: &[ResultRow]) -> Vec<ResultRow> {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.x.total_cmp(&b.x)));
    rows
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(argument("no result rows to emit"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Protocol(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in sorted_rows(rows) {
        w.write_record([
            r.method.clone(),
            format_g9(r.x),
            format_g9(r.accuracy),
            format_g9(r.stderr),
            format_g9(r.final_true_reward),
            format_g9(r.used_units),
            format_g9(r.degradation),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Protocol(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_results(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Protocol(format!("csv: {e}")))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Protocol(format!("unexpected results header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Protocol(format!("csv: {e}")))?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| Error::Protocol(format!("column {} is not a number: {:?}", CSV_HEADER[i], &rec[i])))
        };
        rows.push(ResultRow {
            method: rec[0].to_string(),
            x: num(1)?,
            accuracy: num(2)?,
            stderr: num(3)?,
            final_true_reward: num(4)?,
            used_units: num(5)?,
            degradation: num(6)?,
        });
    }
    Ok(rows)
}

/// Self-contained SVG chart of accuracy against x, one line per method.
/// Distinct x values are spaced evenly.
pub fn accuracy_chart(rows: &[ResultRow], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 56.0;
    const COLORS: [&str; 8] = [
        "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
    ];

    let mut xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let lo = rows.iter().map(|r| r.accuracy).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.accuracy).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi - lo < 1e-9 { (lo - 0.05, hi + 0.05) } else { (lo, hi) };
    let px = |x: f64| {
        let i = xs.iter().position(|&v| v == x).unwrap_or(0) as f64;
        PAD + i * (W - 2.0 * PAD) / (xs.len().max(2) - 1) as f64
    };
    let py = |y: f64| H - PAD - (y - lo) / (hi - lo) * (H - 2.0 * PAD);

    let mut by_method: BTreeMap<&str, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        by_method.entry(r.method.as_str()).or_default().push(r);
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    for &x in &xs {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            px(x),
            H - PAD + 18.0,
            format_g9(x)
        );
    }
    for (y, label) in [(lo, lo), (hi, hi)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            PAD - 6.0,
            py(y) + 4.0,
            label
        );
    }
    for (i, (method, pts)) in by_method.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts = pts.clone();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
        let path: Vec<String> = pts.iter().map(|r| format!("{:.1},{:.1}", px(r.x), py(r.accuracy))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        let ly = PAD + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly:.1}" fill="{color}">{}</text>"#,
            W - PAD + 4.0 - 120.0,
            escape(method)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `results.csv` and, when `chart_title` is given, `results.svg`.
pub fn emit_results(rows: &[ResultRow], dir: &Path, chart_title: Option<&str>) -> Result<Vec<PathBuf>> {
    let csv = rows_to_csv(rows)?;
    fs::create_dir_all(dir)?;
    let csv_path = dir.join("results.csv");
    fs::write(&csv_path, csv)?;
    let mut written = vec![csv_path];
    if let Some(title) = chart_title {
        let svg_path = dir.join("results.svg");
        fs::write(&svg_path, accuracy_chart(rows, title))?;
        written.push(svg_path);
    }
    Ok(written)
}
