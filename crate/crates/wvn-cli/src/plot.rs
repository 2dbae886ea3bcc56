//! Standalone SVG line and scatter plots.

use std::path::Path;

use anyhow::{bail, Context, Result};
use svg::node::element::path::Data;
use svg::node::element::{Circle, Group, Line, Path as SvgPath, Rectangle, Text};
use svg::Document;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Line,
    Scatter,
    LogLog,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    /// Polylines; a break between pieces is not connected.
    pub pieces: Vec<Vec<(f64, f64)>>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            pieces: vec![points],
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Vertical reference lines `(x, label)`.
    pub markers: Vec<(f64, String)>,
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        return format!("{v:.1e}");
    }
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 * (1.0 + lo.abs()) {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.04 * (hi - lo);
        Self {
            lo: lo - pad,
            hi: hi + pad,
            log,
        }
    }

    fn unit(&self, v: f64) -> Option<f64> {
        let v = if self.log { v.log10() } else { v };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        (0..=5)
            .map(|i| {
                let t = i as f64 / 5.0;
                let v = self.lo + t * (self.hi - self.lo);
                let label = if self.log { format!("1e{v:.2}") } else { fmt_tick(v) };
                (t, label)
            })
            .collect()
    }
}

/// Writes `plot` to `path`. Every series must contain at least one point.
pub fn emit_plot(plot: &Plot, kind: PlotKind, path: &Path) -> Result<()> {
    if plot.series.is_empty() || plot.series.iter().all(|s| s.pieces.iter().all(Vec::is_empty)) {
        bail!("plot `{}` has no data", plot.title);
    }
    let log = kind == PlotKind::LogLog;
    let points = || plot.series.iter().flat_map(|s| s.pieces.iter().flatten());
    let xa = Axis::fit(points().map(|p| p.0).chain(plot.markers.iter().map(|m| m.0)), log);
    let ya = Axis::fit(points().map(|p| p.1), log);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |u: f64| LEFT + u * pw;
    let py = |u: f64| TOP + (1.0 - u) * ph;

    let mut doc = Document::new()
        .set("viewBox", (0, 0, WIDTH, HEIGHT))
        .set("width", WIDTH)
        .set("height", HEIGHT)
        .set("font-family", "sans-serif")
        .set("font-size", 12)
        .add(Rectangle::new().set("width", WIDTH).set("height", HEIGHT).set("fill", "white"))
        .add(
            Rectangle::new()
                .set("x", LEFT)
                .set("y", TOP)
                .set("width", pw)
                .set("height", ph)
                .set("fill", "none")
                .set("stroke", "black"),
        )
        .add(
            Text::new(plot.title.clone())
                .set("x", LEFT + 0.5 * pw)
                .set("y", 0.6 * TOP)
                .set("text-anchor", "middle")
                .set("font-size", 15),
        )
        .add(
            Text::new(plot.x_label.clone())
                .set("x", LEFT + 0.5 * pw)
                .set("y", HEIGHT - 15.0)
                .set("text-anchor", "middle"),
        )
        .add(
            Text::new(plot.y_label.clone())
                .set("transform", format!("translate(18 {}) rotate(-90)", TOP + 0.5 * ph))
                .set("text-anchor", "middle"),
        );

    let mut grid = Group::new().set("stroke", "#dddddd");
    let mut labels = Group::new();
    for (t, label) in xa.ticks() {
        grid = grid.add(Line::new().set("x1", px(t)).set("x2", px(t)).set("y1", TOP).set("y2", TOP + ph));
        labels = labels.add(
            Text::new(label)
                .set("x", px(t))
                .set("y", TOP + ph + 18.0)
                .set("text-anchor", "middle"),
        );
    }
    for (t, label) in ya.ticks() {
        grid = grid.add(Line::new().set("x1", LEFT).set("x2", LEFT + pw).set("y1", py(t)).set("y2", py(t)));
        labels = labels.add(
            Text::new(label)
                .set("x", LEFT - 6.0)
                .set("y", py(t) + 4.0)
                .set("text-anchor", "end"),
        );
    }
    doc = doc.add(grid).add(labels);

    for (x, label) in &plot.markers {
        let Some(u) = xa.unit(*x) else { continue };
        doc = doc
            .add(
                Line::new()
                    .set("x1", px(u))
                    .set("x2", px(u))
                    .set("y1", TOP)
                    .set("y2", TOP + ph)
                    .set("stroke", "#555555")
                    .set("stroke-dasharray", "4 3"),
            )
            .add(
                Text::new(label.clone())
                    .set("x", px(u) + 3.0)
                    .set("y", TOP + 12.0)
                    .set("font-size", 11),
            );
    }

    for (i, s) in plot.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut g = Group::new().set("stroke", color).set("fill", "none");
        for piece in &s.pieces {
            let pts: Vec<(f64, f64)> = piece
                .iter()
                .filter_map(|&(x, y)| Some((px(xa.unit(x)?), py(ya.unit(y)?))))
                .collect();
            if kind == PlotKind::Scatter || pts.len() == 1 {
                for (x, y) in pts {
                    g = g.add(Circle::new().set("cx", x).set("cy", y).set("r", 1.6).set("fill", color));
                }
            } else if let Some((&first, rest)) = pts.split_first() {
                let data = rest.iter().fold(Data::new().move_to(first), |d, &p| d.line_to(p));
                g = g.add(SvgPath::new().set("d", data).set("stroke-width", 1.5));
            }
        }
        let ly = TOP + 16.0 * i as f64 + 8.0;
        doc = doc.add(g).add(
            Line::new()
                .set("x1", LEFT + pw + 12.0)
                .set("x2", LEFT + pw + 32.0)
                .set("y1", ly)
                .set("y2", ly)
                .set("stroke", color)
                .set("stroke-width", 2),
        );
        doc = doc.add(Text::new(s.label.clone()).set("x", LEFT + pw + 38.0).set("y", ly + 4.0));
    }
    svg::save(path, &doc).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_standalone_svg() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.svg");
        let plot = Plot {
            title: "t".into(),
            x_label: "energy (lattice units)".into(),
            y_label: "y".into(),
            series: vec![Series::new("s", vec![(0.0, 1.0), (1.0, 2.0)])],
            markers: vec![(0.5, "E".into())],
        };
        emit_plot(&plot, PlotKind::Line, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("<svg") && text.contains("energy (lattice units)"));
        assert!(!text.contains("href"));
    }

    #[test]
    fn empty_series_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let plot = Plot {
            series: vec![Series::new("s", vec![])],
            ..Default::default()
        };
        assert!(emit_plot(&plot, PlotKind::Line, &dir.path().join("b.svg")).is_err());
    }
}
