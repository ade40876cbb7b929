//! Transformation plots: quantifications against the original categories, as SVG and as
//! plain tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::data::ColumnKind;
use crate::error::{Error, Result};
use crate::model::{FittedModel, Method, QuantificationSet};

/// Grid size of the dense spline curve.
pub const CURVE_POINTS: usize = 100;

const WIDTH: f64 = 420.0;
const HEIGHT: f64 = 320.0;
const LEFT: f64 = 56.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 34.0;
const BOTTOM: f64 = 80.0;

/// One plotted category.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub label: String,
    pub x: f64,
    pub quantification: f64,
}

/// Categories in encoding order. Unordered categories are equally spaced; all other kinds sit
/// at their category value (the rank for ordered labels, the number for numeric data).
pub fn plot_points(q: &QuantificationSet) -> Vec<PlotPoint> {
    q.labels
        .iter()
        .enumerate()
        .map(|(c, label)| PlotPoint {
            label: label.clone(),
            x: if q.kind == ColumnKind::UnorderedCategorical {
                (c + 1) as f64
            } else {
                q.values[c]
            },
            quantification: q.v[c],
        })
        .collect()
}

/// Standardized spline transform sampled on an even grid over the observed range, for spline
/// levels only.
pub fn spline_curve(q: &QuantificationSet, points: usize) -> Option<Vec<(f64, f64)>> {
    let spline = q.spline.as_ref()?;
    let lo = q.values.first().copied()?;
    let hi = q.values.last().copied()?;
    let steps = points.max(2) - 1;
    Some(
        (0..=steps)
            .map(|i| {
                let x = if i == steps { hi } else { lo + (hi - lo) * i as f64 / steps as f64 };
                (x, q.standardization.apply(spline.eval(x)))
            })
            .collect(),
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-9);
    let raw = span / 4.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

/// Render one variable's panel. `stamp` becomes a leading comment when given.
pub fn render_svg(q: &QuantificationSet, beta: f64, stamp: Option<&str>) -> String {
    let points = plot_points(q);
    let curve = spline_curve(q, CURVE_POINTS);

    let ys = points
        .iter()
        .map(|p| p.quantification)
        .chain(curve.iter().flatten().map(|&(_, y)| y));
    let (mut y_lo, mut y_hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let pad = ((y_hi - y_lo) * 0.08).max(0.1);
    y_lo -= pad;
    y_hi += pad;
    let x_lo = points.first().map_or(0.0, |p| p.x);
    let x_hi = points.last().map_or(1.0, |p| p.x);
    let x_pad = ((x_hi - x_lo) * 0.06).max(0.3);
    let (x_lo, x_hi) = (x_lo - x_pad, x_hi + x_pad);

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    if let Some(stamp) = stamp {
        let _ = writeln!(s, "<!-- {} -->", escape(stamp).replace("--", "- -"));
    }
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">{} ({})</text>",
        WIDTH / 2.0,
        escape(&q.name),
        q.spec.level.as_str()
    );
    let _ = writeln!(
        s,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>"
    );

    for t in ticks(y_lo, y_hi) {
        let y = sy(t);
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{LEFT}\" y2=\"{y:.1}\" stroke=\"black\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            LEFT - 4.0,
            LEFT - 6.0,
            y + 4.0,
            format_tick(t)
        );
    }
    if y_lo < 0.0 && y_hi > 0.0 {
        let y = sy(0.0);
        let _ = writeln!(
            s,
            "<line x1=\"{LEFT}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#bbbbbb\" stroke-dasharray=\"3,3\"/>",
            LEFT + pw
        );
    }

    // Thin the category labels so they do not collide.
    let every = points.len().div_ceil(14).max(1);
    let base = TOP + ph;
    for (i, p) in points.iter().enumerate() {
        if i % every != 0 && i + 1 != points.len() {
            continue;
        }
        let x = sx(p.x);
        let _ = writeln!(
            s,
            "<line x1=\"{x:.1}\" y1=\"{base:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/><text transform=\"translate({x:.1},{:.1}) rotate(-45)\" text-anchor=\"end\">{}</text>",
            base + 4.0,
            base + 14.0,
            escape(&p.label)
        );
    }

    let path_of = |xy: &mut dyn Iterator<Item = (f64, f64)>| {
        xy.map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let line = match &curve {
        Some(c) => path_of(&mut c.iter().copied()),
        None => path_of(&mut points.iter().map(|p| (p.x, p.quantification))),
    };
    let _ = writeln!(s, "<polyline points=\"{line}\" fill=\"none\" stroke=\"#1f4e9a\" stroke-width=\"1.5\"/>");
    for p in &points {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f4e9a\"/>",
            sx(p.x),
            sy(p.quantification)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\">\u{3b2} = {beta:.2}</text>",
        LEFT + pw / 2.0,
        HEIGHT - 8.0
    );
    s.push_str("</svg>\n");
    s
}

fn format_tick(t: f64) -> String {
    let r = (t * 1000.0).round() / 1000.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

/// File stem for a variable: its position and a filesystem-safe name.
fn stem(index: usize, name: &str) -> String {
    let safe: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{:02}_{safe}", index + 1)
}

/// Write `<stem>.svg`, `<stem>_points.csv` and, for splines, `<stem>_curve.csv` for every
/// variable of an optimal-scaling model. Returns the written paths.
pub fn write_plots(model: &FittedModel, dir: &Path, stamp: Option<&str>) -> Result<Vec<PathBuf>> {
    if model.method == Method::DummyLogistic {
        return Err(Error::Artifact(
            "dummy-coded models have no quantifications to plot".into(),
        ));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |path: PathBuf, body: String| -> Result<()> {
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for (k, (q, &beta)) in model.quantifications.iter().zip(&model.beta).enumerate() {
        let stem = stem(k, &q.name);
        put(dir.join(format!("{stem}.svg")), render_svg(q, beta, stamp))?;

        let mut pts = String::from("variable,category_label,x,quantification\n");
        for p in plot_points(q) {
            let _ = writeln!(
                pts,
                "{},{},{},{}",
                crate::eval::csv_field(&q.name),
                crate::eval::csv_field(&p.label),
                p.x,
                p.quantification
            );
        }
        put(dir.join(format!("{stem}_points.csv")), pts)?;

        if let Some(curve) = spline_curve(q, CURVE_POINTS) {
            let mut c = String::from("variable,x,quantification\n");
            for (x, y) in curve {
                let _ = writeln!(c, "{},{x},{y}", crate::eval::csv_field(&q.name));
            }
            put(dir.join(format!("{stem}_curve.csv")), c)?;
        }
    }
    Ok(written)
}
