//! Minimal deterministic SVG line plots.

use std::fmt::Write;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Optional `(low, high)` per point, drawn as a shaded band.
    pub band: Option<Vec<(f64, f64)>>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            band: None,
        }
    }

    pub fn with_band(mut self, band: Vec<(f64, f64)>) -> Self {
        self.band = Some(band);
        self
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
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
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo == hi {
            let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        (0..=4)
            .map(|i| {
                let t = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                let value = if self.log { 10f64.powf(t) } else { t };
                (i as f64 / 4.0, format!("{value:.3}"))
            })
            .collect()
    }
}

fn usable(p: (f64, f64), spec: &PlotSpec) -> bool {
    p.0.is_finite() && p.1.is_finite() && (!spec.log_x || p.0 > 0.0) && (!spec.log_y || p.1 > 0.0)
}

/// Renders the series as a self-contained SVG document. Points that cannot be
/// drawn (non-finite, or nonpositive on a log axis) are dropped and counted in
/// the legend.
pub fn emit_plot(series: &[Series], spec: &PlotSpec) -> Result<String, CliError> {
    if series.is_empty() {
        return Err(CliError::Plot("no series to plot".into()));
    }
    let kept: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().copied().filter(|&p| usable(p, spec)).collect())
        .collect();
    let band_points = series.iter().flat_map(|s| {
        s.points.iter().zip(s.band.iter().flatten()).flat_map(|(&(x, _), &(lo, hi))| [(x, lo), (x, hi)])
    });
    let all: Vec<(f64, f64)> = kept
        .iter()
        .flatten()
        .copied()
        .chain(band_points.filter(|&p| usable(p, spec)))
        .collect();
    if all.is_empty() {
        return Err(CliError::Plot("every point is non-finite".into()));
    }
    let xa = Axis::fit(all.iter().map(|p| p.0), spec.log_x);
    let ya = Axis::fit(all.iter().map(|p| p.1), spec.log_y);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |x: f64| LEFT + xa.frac(x) * pw;
    let py = |y: f64| TOP + (1.0 - ya.frac(y)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&spec.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (f, label) in xa.ticks() {
        let x = LEFT + f * pw;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0
        );
    }
    for (f, label) in ya.ticks() {
        let y = TOP + (1.0 - f) * ph;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let log_note = |on: bool| if on { " (log)" } else { "" };
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        escape(&spec.x_label),
        log_note(spec.log_x)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&spec.y_label),
        log_note(spec.log_y)
    );

    for (idx, (ser, pts)) in series.iter().zip(&kept).enumerate() {
        let color = COLORS[idx % COLORS.len()];
        if let Some(band) = &ser.band {
            let edge: Vec<(f64, f64, f64)> = ser
                .points
                .iter()
                .zip(band)
                .map(|(&(x, _), &(lo, hi))| (x, lo, hi))
                .filter(|&(x, lo, hi)| usable((x, lo), spec) && usable((x, hi), spec))
                .collect();
            if edge.len() >= 2 {
                let mut poly = String::new();
                for &(x, _, hi) in &edge {
                    let _ = write!(poly, "{:.2},{:.2} ", px(x), py(hi));
                }
                for &(x, lo, _) in edge.iter().rev() {
                    let _ = write!(poly, "{:.2},{:.2} ", px(x), py(lo));
                }
                let _ = writeln!(
                    s,
                    r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                    poly.trim_end()
                );
            }
        }
        if pts.len() >= 2 {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y));
        }
        let dropped = ser.points.len() - pts.len();
        let mut label = escape(&ser.label);
        if dropped > 0 {
            let _ = write!(label, " ({dropped} dropped)");
        }
        let ly = TOP + 10.0 + 18.0 * idx as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{label}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_has_one_marker() {
        let svg = emit_plot(&[Series::new("p", vec![(1.0, 2.0)])], &PlotSpec::default()).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn empty_set_is_an_error() {
        assert!(emit_plot(&[], &PlotSpec::default()).is_err());
    }

    #[test]
    fn non_finite_points_are_dropped_and_counted() {
        let s = Series::new("a<b", vec![(0.0, 1.0), (1.0, f64::INFINITY), (2.0, 3.0)]);
        let svg = emit_plot(&[s], &PlotSpec::default()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("a&lt;b (1 dropped)"));
    }

    #[test]
    fn output_is_deterministic() {
        let spec = PlotSpec {
            title: "t".into(),
            log_x: true,
            log_y: true,
            ..Default::default()
        };
        let s = vec![
            Series::new("N=64", vec![(1.0, 0.5), (2.0, 0.25)]).with_band(vec![(0.4, 0.6), (0.2, 0.3)]),
            Series::new("N=256", vec![(1.0, 0.4), (4.0, 0.1)]),
        ];
        assert_eq!(emit_plot(&s, &spec).unwrap(), emit_plot(&s, &spec).unwrap());
    }
}
