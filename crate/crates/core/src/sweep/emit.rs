//! CSV, gnuplot and SVG output for sweeps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

use super::{SweepResult, SweepRow};

pub const CSV_HEADER: [&str; 7] = [
    "theta_rad",
    "upper_bits",
    "lower_bits",
    "rsc_bits",
    "rpre_bits",
    "seed",
    "evals_total",
];

const SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Gnuplot,
    Svg,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "gnuplot" => Ok(OutputFormat::Gnuplot),
            "svg" => Ok(OutputFormat::Svg),
            _ => Err(Error::Config(format!("unknown format '{s}' (expected csv, gnuplot or svg)"))),
        }
    }
}

/// `x` to 12 significant digits, shortest of fixed or exponent notation,
/// trailing zeros trimmed.
pub(crate) fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mantissa.to_string()), exp)
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

pub fn to_csv_string(result: &SweepResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Argument(format!("CSV encoding failed: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &result.rows {
        w.write_record([
            format_sig(r.theta),
            opt(r.upper),
            opt(r.lower),
            opt(r.r_sc),
            opt(r.r_pre),
            r.seed.to_string(),
            r.evals_total.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Argument(format!("CSV encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is ASCII"))
}

/// Reads rows written by [`to_csv_string`]; optimizer metadata beyond the
/// CSV columns is left empty.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let bad = |msg: String| Error::Config(format!("malformed sweep CSV: {msg}"));
    let header = rd.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let num = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| bad(format!("'{s}' is not a number")))
        }
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        rows.push(SweepRow {
            theta: num(&rec[0])?.ok_or_else(|| bad("missing angle".into()))?,
            upper: num(&rec[1])?,
            lower: num(&rec[2])?,
            r_sc: num(&rec[3])?,
            r_pre: num(&rec[4])?,
            seed: rec[5].parse().map_err(|_| bad(format!("bad seed '{}'", &rec[5])))?,
            evals_total: rec[6].parse().map_err(|_| bad(format!("bad evaluation count '{}'", &rec[6])))?,
            meta: Vec::new(),
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

type Column = (&'static str, usize, fn(&SweepRow) -> Option<f64>);

const CURVES: [Column; 4] = [
    ("upper bound", 2, |r| r.upper),
    ("lower bound", 3, |r| r.lower),
    ("superposition", 4, |r| r.r_sc),
    ("precoding", 5, |r| r.r_pre),
];

fn present(result: &SweepResult) -> Vec<Column> {
    CURVES
        .into_iter()
        .filter(|(_, _, get)| result.rows.iter().any(|r| get(r).is_some()))
        .collect()
}

/// Gnuplot script plotting the CSV at `csv_path`.
pub fn render_gnuplot(result: &SweepResult, csv_path: &Path) -> String {
    let mut s = String::new();
    let csv = csv_path.display().to_string().replace('"', "\\\"");
    let _ = writeln!(s, "set datafile separator \",\"");
    let _ = writeln!(s, "set datafile missing \"\"");
    let _ = writeln!(s, "set title \"{}\"", result.topology.kind);
    let _ = writeln!(s, "set xlabel \"angle between H1 and H2 (rad)\"");
    let _ = writeln!(s, "set ylabel \"rate (bits/s/Hz)\"");
    let _ = writeln!(s, "set xrange [0:pi]");
    let _ = writeln!(s, "set key bottom left");
    let plots: Vec<String> = present(result)
        .iter()
        .enumerate()
        .map(|(i, (name, col, _))| {
            let src = if i == 0 { format!("\"{csv}\"") } else { "\"\"".to_string() };
            format!("{src} using 1:{col} skip 1 with linespoints title \"{name}\"")
        })
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// One polyline per quantity, angle on the abscissa over `[0, π]`.
pub fn render_svg(result: &SweepResult) -> String {
    let curves = present(result);
    let values: Vec<f64> = curves
        .iter()
        .flat_map(|(_, _, get)| result.rows.iter().filter_map(get))
        .collect();
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let x = |t: f64| MARGIN + t / std::f64::consts::PI * (SVG_W - 2.0 * MARGIN);
    let y = |v: f64| SVG_H - MARGIN - (v - lo) / (hi - lo) * (SVG_H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (x(0.0), x(std::f64::consts::PI), y(lo), y(hi));
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" stroke="black" fill="none"/>"#
    );
    for (k, label) in ["0", "π/4", "π/2", "3π/4", "π"].iter().enumerate() {
        let tx = x(k as f64 * std::f64::consts::FRAC_PI_4);
        let _ = writeln!(
            s,
            r#"<line x1="{tx:.2}" y1="{y0:.2}" x2="{tx:.2}" y2="{:.2}" stroke="black"/><text x="{tx:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            y0 + 5.0,
            y0 + 20.0
        );
    }
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let ty = y(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ty:.2}" x2="{x0:.2}" y2="{ty:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            ty + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">angle between H1 and H2 (rad)</text>"#,
        (x0 + x1) / 2.0,
        SVG_H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">rate (bits/s/Hz)</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for (i, (name, _, get)) in curves.iter().enumerate() {
        let pts: Vec<String> = result
            .rows
            .iter()
            .filter_map(|r| get(r).map(|v| format!("{:.2},{:.2}", x(r.theta), y(v))))
            .collect();
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(
            s,
            r#"<polyline data-quantity="{name}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"/><text x="{:.2}" y="{:.2}">{name}</text>"#,
            x1 - 140.0,
            x1 - 115.0,
            x1 - 110.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `result` to `path` and returns every file written. The gnuplot
/// format writes the script to `path` and the data next to it with a `.csv`
/// extension.
pub fn emit(result: &SweepResult, format: OutputFormat, path: &Path) -> Result<Vec<PathBuf>> {
    match format {
        OutputFormat::Csv => {
            write(path, &to_csv_string(result)?)?;
            Ok(vec![path.to_path_buf()])
        }
        OutputFormat::Gnuplot => {
            let csv = path.with_extension("csv");
            if csv == path {
                return Err(Error::Config(format!(
                    "gnuplot script path {} collides with its data file",
                    path.display()
                )));
            }
            write(&csv, &to_csv_string(result)?)?;
            let name = csv.file_name().map(PathBuf::from).unwrap_or_else(|| csv.clone());
            write(path, &render_gnuplot(result, &name))?;
            Ok(vec![csv, path.to_path_buf()])
        }
        OutputFormat::Svg => {
            write(path, &render_svg(result))?;
            Ok(vec![path.to_path_buf()])
        }
    }
}
