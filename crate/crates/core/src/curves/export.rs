use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curves::curve::{CurvePoint, RiskCurve};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 6] = ["percentile", "feature_value", "mean_risk", "std", "p10", "p90"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveFormat {
    Csv,
    Svg,
}

impl CurveFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            CurveFormat::Csv => "csv",
            CurveFormat::Svg => "svg",
        }
    }
}

/// Values are written in shortest round-trip form, so re-reading is exact.
pub fn write_curve_csv<W: Write>(curve: &RiskCurve, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for p in &curve.points {
        w.write_record([
            p.percentile.to_string(),
            p.feature_value.to_string(),
            p.mean_risk.to_string(),
            p.std.to_string(),
            p.p10.to_string(),
            p.p90.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_curve_csv<R: Read>(reader: R) -> Result<Vec<CurvePoint>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::InvalidDataset(format!("unexpected curve header {header:?}")));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Self-contained SVG: mean risk line over a shaded 10th–90th percentile band.
pub fn render_svg(curve: &RiskCurve) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let xs = curve.points.iter().map(|p| p.feature_value);
    let (x_min, x_max) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let sx = |x: f64| {
        if x_max > x_min {
            LEFT + (x - x_min) / (x_max - x_min) * plot_w
        } else {
            LEFT + plot_w / 2.0
        }
    };
    let sy = |y: f64| TOP + (1.0 - y.clamp(0.0, 1.0)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">Feature risk curve: {}</text>"#,
        WIDTH / 2.0,
        escape(&curve.feature)
    );

    // gridlines and y ticks
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for i in 0..=4 {
        let v = x_min + (x_max - x_min) * i as f64 / 4.0;
        let x = sx(v);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            format_tick(v)
        );
    }

    if !curve.points.is_empty() {
        let upper = curve.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.feature_value), sy(p.p90)));
        let lower = curve.points.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.feature_value), sy(p.p10)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            svg,
            r##"<polygon id="band" points="{}" fill="#4a90d9" fill-opacity="0.25" stroke="none"/>"##,
            band.join(" ")
        );
        let mean: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.feature_value), sy(p.mean_risk)))
            .collect();
        let _ = writeln!(
            svg,
            r##"<polyline id="mean-risk" points="{}" fill="none" stroke="#1f4e8c" stroke-width="2"/>"##,
            mean.join(" ")
        );
    }

    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}" stroke="black"/>"#,
        TOP + plot_h
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 18.0,
        escape(&curve.feature)
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18,{:.2}) rotate(-90)" text-anchor="middle">Predicted risk (mean, 10th–90th percentile band)</text>"#,
        TOP + plot_h / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

pub fn export_curve(curve: &RiskCurve, format: CurveFormat, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut file = std::io::BufWriter::new(file);
    match format {
        CurveFormat::Csv => write_curve_csv(curve, &mut file)?,
        CurveFormat::Svg => file
            .write_all(render_svg(curve).as_bytes())
            .map_err(|e| Error::io(path, e))?,
    }
    file.flush().map_err(|e| Error::io(path, e))
}
