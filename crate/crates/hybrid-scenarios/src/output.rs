//! CSV and SVG writers.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, ScenarioError};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV text with a header row; every cell is already formatted.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| ScenarioError::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { name: name.into(), points }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Slope drawn through the first point of the first series (log-log only).
    pub reference_slope: Option<f64>,
}

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 480.0;
pub const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Data-to-pixel mapping of a plot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub log_x: bool,
    pub log_y: bool,
}

impl Frame {
    fn axis(v: f64, log: bool) -> f64 {
        if log {
            v.log10()
        } else {
            v
        }
    }

    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let (x0, x1) = (Self::axis(self.x_range.0, self.log_x), Self::axis(self.x_range.1, self.log_x));
        let (y0, y1) = (Self::axis(self.y_range.0, self.log_y), Self::axis(self.y_range.1, self.log_y));
        let fx = (Self::axis(x, self.log_x) - x0) / (x1 - x0);
        let fy = (Self::axis(y, self.log_y) - y0) / (y1 - y0);
        (MARGIN + fx * (WIDTH - 2.0 * MARGIN), HEIGHT - MARGIN - fy * (HEIGHT - 2.0 * MARGIN))
    }
}

impl LinePlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        LinePlot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
            reference_slope: None,
        }
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn usable(&self, p: &(f64, f64)) -> bool {
        p.0.is_finite() && p.1.is_finite() && (!self.log_x || p.0 > 0.0) && (!self.log_y || p.1 > 0.0)
    }

    pub fn frame(&self) -> Frame {
        let pts: Vec<(f64, f64)> = self.series.iter().flat_map(|s| s.points.iter().copied()).filter(|p| self.usable(p)).collect();
        let span = |vals: Vec<f64>, log: bool| -> (f64, f64) {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                return if log { (1.0, 10.0) } else { (0.0, 1.0) };
            }
            if hi > lo {
                (lo, hi)
            } else if log {
                (lo / 10f64.sqrt(), lo * 10f64.sqrt())
            } else {
                (lo - 0.5, lo + 0.5)
            }
        };
        Frame {
            x_range: span(pts.iter().map(|p| p.0).collect(), self.log_x),
            y_range: span(pts.iter().map(|p| p.1).collect(), self.log_y),
            log_x: self.log_x,
            log_y: self.log_y,
        }
    }

    /// Endpoints of the slope reference line, in data coordinates.
    pub fn reference_line(&self) -> Option<((f64, f64), (f64, f64))> {
        let s = self.reference_slope?;
        if !(self.log_x && self.log_y) {
            return None;
        }
        let &(x0, y0) = self.series.first()?.points.iter().find(|p| self.usable(p))?;
        let fr = self.frame();
        let (xa, xb) = fr.x_range;
        Some(((xa, y0 * (xa / x0).powf(s)), (xb, y0 * (xb / x0).powf(s))))
    }

    pub fn to_svg(&self) -> String {
        let fr = self.frame();
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let (inner_w, inner_h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        let _ = writeln!(s, r#"<rect x="{MARGIN}" y="{MARGIN}" width="{inner_w}" height="{inner_h}" fill="none" stroke="black"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, MARGIN / 2.0, esc(&self.title));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            esc(&self.y_label)
        );
        for (v, anchor, px, py) in [
            (fr.x_range.0, "start", MARGIN, HEIGHT - MARGIN + 16.0),
            (fr.x_range.1, "end", WIDTH - MARGIN, HEIGHT - MARGIN + 16.0),
            (fr.y_range.0, "end", MARGIN - 4.0, HEIGHT - MARGIN),
            (fr.y_range.1, "end", MARGIN - 4.0, MARGIN + 4.0),
        ] {
            let _ = writeln!(s, r#"<text x="{px}" y="{py}" text-anchor="{anchor}">{v:.3e}</text>"#);
        }
        for (k, series) in self.series.iter().enumerate() {
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|p| self.usable(p))
                .map(|&(x, y)| {
                    let (px, py) = fr.map(x, y);
                    format!("{px:.3},{py:.3}")
                })
                .collect();
            let color = COLORS[k % COLORS.len()];
            if !pts.is_empty() {
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
            }
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                WIDTH - MARGIN - 120.0,
                MARGIN + 16.0 * (k + 1) as f64,
                esc(&series.name)
            );
        }
        if let (Some(((xa, ya), (xb, yb))), Some(slope)) = (self.reference_line(), self.reference_slope) {
            let (pa, pb) = (fr.map(xa, ya), fr.map(xb, yb));
            let _ = writeln!(
                s,
                r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="gray" stroke-dasharray="6 4"/>"#,
                pa.0, pa.1, pb.0, pb.1
            );
            let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" fill="gray">slope {slope}</text>"#, pb.0 - 70.0, pb.1 - 6.0);
        }
        s.push_str("</svg>\n");
        s
    }
}

fn esc(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.5e-300, -7.0, 0.0] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            assert_eq!(s.trim_start_matches('-').split('e').next().unwrap().replace('.', "").len(), 17);
        }
    }

    #[test]
    fn empty_plot_has_axes_only() {
        let svg = LinePlot::new("t", "x", "y").to_svg();
        assert!(svg.contains("<rect"));
        assert!(!svg.contains("<polyline"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn two_points_make_one_segment() {
        let svg = LinePlot::new("t", "x", "y").with_series(Series::new("a", vec![(0.0, 0.0), (1.0, 2.0)])).to_svg();
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let pts = line.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
        assert_eq!(pts.split(' ').count(), 2);
        assert!(pts.starts_with(&format!("{MARGIN:.3},{:.3}", HEIGHT - MARGIN)));
        assert!(pts.ends_with(&format!("{:.3},{MARGIN:.3}", WIDTH - MARGIN)));
    }

    #[test]
    fn reference_slope_endpoints() {
        let plot = LinePlot {
            reference_slope: Some(2.0),
            ..LinePlot::new("e", "h", "E").log_log().with_series(Series::new("E", vec![(0.1, 1e-2), (0.01, 1e-4)]))
        };
        let ((xa, ya), (xb, yb)) = plot.reference_line().unwrap();
        assert_eq!((xa, xb), (0.01, 0.1));
        assert!((ya - 1e-4).abs() < 1e-18 && (yb - 1e-2).abs() < 1e-16);
        let fr = plot.frame();
        let (pa, pb) = (fr.map(xa, ya), fr.map(xb, yb));
        assert!((pa.0 - MARGIN).abs() < 1e-9 && (pa.1 - (HEIGHT - MARGIN)).abs() < 1e-9);
        assert!((pb.0 - (WIDTH - MARGIN)).abs() < 1e-9 && (pb.1 - MARGIN).abs() < 1e-9);
        let svg = plot.to_svg();
        assert!(svg.contains(&format!(r#"x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}""#, pa.0, pa.1, pb.0, pb.1)));
    }

    #[test]
    fn csv_layout() {
        let t = csv_text(&["a", "b"], &[vec![fmt17(1.0), fmt17(2.0)]]);
        assert_eq!(t, "a,b\n1.0000000000000000e0,2.0000000000000000e0\n");
    }
}
