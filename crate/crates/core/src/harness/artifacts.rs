//! Static SVG plots: 2D level-set overlays and 1D curves.

use std::fmt::Write as _;

use crate::field::{Ball, Grid};
use crate::perimeter::{Competitor, LevelSet};

const SIZE: f64 = 600.0;

struct View {
    lo: [f64; 2],
    scale: f64,
}

impl View {
    fn of_grid(g: &Grid) -> Self {
        let span = (g.hi(0) - g.lo()[0]).max(g.hi(1) - g.lo()[1]);
        Self { lo: [g.lo()[0], g.lo()[1]], scale: SIZE / span }
    }

    fn x(&self, v: f64) -> f64 {
        (v - self.lo[0]) * self.scale
    }

    fn y(&self, v: f64) -> f64 {
        SIZE - (v - self.lo[1]) * self.scale
    }
}

fn polyline(out: &mut String, v: &View, s: &LevelSet, colour: &str, width: f64) {
    for c in &s.chains {
        let mut pts = String::new();
        for &k in &c.vertices {
            let p = s.vertices[k];
            let _ = write!(pts, "{:.3},{:.3} ", v.x(p[0]), v.y(p[1]));
        }
        if c.closed {
            if let Some(&k) = c.vertices.first() {
                let p = s.vertices[k];
                let _ = write!(pts, "{:.3},{:.3}", v.x(p[0]), v.y(p[1]));
            }
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="{width}"/>"#,
            pts.trim_end()
        );
    }
}

/// Zero set of w (black), the ball (blue) and up to `max_competitors`
/// competitor surfaces (red, thin).
pub fn overlay_svg(grid: &Grid, e: &LevelSet, ball: &Ball, competitors: &[Competitor], max_competitors: usize) -> String {
    let v = View::of_grid(grid);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white" stroke="gray"/>"#);
    let _ = writeln!(
        s,
        r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="steelblue" stroke-dasharray="4 3"/>"#,
        v.x(ball.center[0]),
        v.y(ball.center[1]),
        ball.radius * v.scale
    );
    for c in competitors.iter().filter(|c| c.region.is_some()).take(max_competitors) {
        polyline(&mut s, &v, &c.surface, "crimson", 0.5);
    }
    polyline(&mut s, &v, e, "black", 1.5);
    s.push_str("</svg>\n");
    s
}

/// Line plot of `(x, y)` samples.
pub fn curve_svg(points: &[(f64, f64)], title: &str) -> String {
    let (x0, x1) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (w, h, pad) = (SIZE, 0.6 * SIZE, 30.0);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0).max(f64::MIN_POSITIVE) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0).max(f64::MIN_POSITIVE) * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white" stroke="gray"/>"#);
    let _ = writeln!(s, r#"<text x="{pad}" y="20" font-size="14">{title}</text>"#);
    let pts: Vec<String> = points.iter().map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y))).collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="black"/>"#, pts.join(" "));
    s.push_str("</svg>\n");
    s
}
