//! Discrete calibration certificate for one competitor.
//!
//! `X` is the bilinear interpolant of the finite-difference gradient of `w`.
//! It is continuous across cells, so `∫_Ω div X = ∮_∂Ω X·n` holds exactly for
//! it; the volume side integrates the cellwise-linear `div X` over the clipped
//! region and the surface side splits every edge at grid lines and applies
//! two-point Gauss, both exact for these polynomials.

use super::competitor::Competitor;
use super::levelset::LevelSet;
use crate::error::{Error, Result};
use crate::field::{gradient, laplacian, Ball, Grid, Point, ScalarField, VectorField};

#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceCertificate {
    pub pass: bool,
    /// `E Δ F` is empty.
    pub trivial: bool,
    /// `+1` region outside E, `−1` inside.
    pub side: i8,
    /// (i) region nodes failing the same rule as the sign certificate.
    pub sign_failures: Vec<usize>,
    pub sign_checked: usize,
    /// (ii) `∫_Ω div X` and `∮_∂Ω X·n`.
    pub volume: f64,
    pub flux: f64,
    pub relative_residual: f64,
    /// (iii) `max |X·ν_E − |X||` over facets of ∂E in the ball.
    pub boundary_max: f64,
    pub tolerance: f64,
}

pub const DIVERGENCE_TOLERANCE: f64 = 1e-2;

/// Checks (i)–(iii) with sign tolerance `tolerance` (use `10h`).
pub fn divergence_certificate(
    w: &ScalarField,
    e: &LevelSet,
    f: &Competitor,
    ball: &Ball,
    tolerance: f64,
) -> Result<DivergenceCertificate> {
    let g = w.grid();
    if g.dim() != 2 || e.dim != 2 {
        return Err(Error::Unsupported("divergence certificate is implemented in 2D only".into()));
    }
    let x = gradient(w);
    let boundary_max = e
        .facets
        .iter()
        .filter(|fc| ball.contains(&fc.centroid))
        .filter_map(|fc| {
            let xv = x.interpolate(&fc.centroid)?;
            let dotp = xv[0] * fc.normal[0] + xv[1] * fc.normal[1];
            Some((dotp - (xv[0] * xv[0] + xv[1] * xv[1]).sqrt()).abs())
        })
        .fold(0.0, f64::max);
    let Some(poly) = &f.region else {
        return Ok(DivergenceCertificate {
            pass: boundary_max <= tolerance,
            trivial: true,
            side: 0,
            sign_failures: Vec::new(),
            sign_checked: 0,
            volume: 0.0,
            flux: 0.0,
            relative_residual: 0.0,
            boundary_max,
            tolerance,
        });
    };
    if poly.iter().any(|p| !g.contains(p)) {
        return Err(Error::Domain("competitor region leaves the grid".into()));
    }
    let lap = laplacian(w);
    let mut sign_failures = Vec::new();
    let mut sign_checked = 0;
    for i in g.nodes_in_ball(ball) {
        let p = g.point(i);
        if g.is_boundary(i) || !inside(poly, &p) {
            continue;
        }
        sign_checked += 1;
        if !crate::diffeo::sign_ok(w.get(i), lap.get(i), tolerance) {
            sign_failures.push(i);
        }
    }
    let volume = volume_integral(g, &x, poly);
    let flux = flux_integral(g, &x, poly);
    let scale = volume.abs().max(flux.abs());
    let relative_residual = if scale > 0.0 { (volume - flux).abs() / scale } else { 0.0 };
    let pass = sign_failures.is_empty() && relative_residual <= DIVERGENCE_TOLERANCE && boundary_max <= tolerance;
    Ok(DivergenceCertificate {
        pass,
        trivial: false,
        side: f.side,
        sign_failures,
        sign_checked,
        volume,
        flux,
        relative_residual,
        boundary_max,
        tolerance,
    })
}

/// Even-odd point-in-polygon.
pub(crate) fn inside(poly: &[Point], p: &Point) -> bool {
    let n = poly.len();
    let mut c = false;
    for k in 0..n {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let xc = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < xc {
                c = !c;
            }
        }
    }
    c
}

/// Sutherland–Hodgman clip of `poly` against the box `[x0, x1] × [y0, y1]`.
fn clip_box(poly: &[Point], x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<Point> {
    let mut out = poly.to_vec();
    let planes: [(usize, f64, bool); 4] = [(0, x0, true), (0, x1, false), (1, y0, true), (1, y1, false)];
    for (axis, c, keep_above) in planes {
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        let ins = |p: &Point| if keep_above { p[axis] >= c } else { p[axis] <= c };
        let n = input.len();
        for k in 0..n {
            let (cur, prev) = (input[k], input[(k + n - 1) % n]);
            let cross = |a: &Point, b: &Point| {
                let t = (c - a[axis]) / (b[axis] - a[axis]);
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), 0.0]
            };
            match (ins(&cur), ins(&prev)) {
                (true, true) => out.push(cur),
                (true, false) => {
                    out.push(cross(&prev, &cur));
                    out.push(cur);
                }
                (false, true) => out.push(cross(&prev, &cur)),
                (false, false) => {}
            }
        }
    }
    out
}

/// `(∫1, ∫x, ∫y)` over a polygon by Green's theorem (signed).
fn moments(poly: &[Point]) -> (f64, f64, f64) {
    let n = poly.len();
    let (mut a, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (p, q) = (poly[k], poly[(k + 1) % n]);
        let cr = p[0] * q[1] - q[0] * p[1];
        a += cr;
        sx += (p[0] + q[0]) * cr;
        sy += (p[1] + q[1]) * cr;
    }
    (a / 2.0, sx / 6.0, sy / 6.0)
}

fn volume_integral(g: &Grid, x: &VectorField, poly: &[Point]) -> f64 {
    let h = g.h();
    let (lo0, lo1) = (g.lo()[0], g.lo()[1]);
    let bx = poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p[0]), b.max(p[0])));
    let by = poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p[1]), b.max(p[1])));
    let cell = |v: f64, lo: f64, n: usize| (((v - lo) / h).floor().max(0.0) as usize).min(n - 2);
    let (i0, i1) = (cell(bx.0, lo0, g.shape()[0]), cell(bx.1, lo0, g.shape()[0]));
    let (j0, j1) = (cell(by.0, lo1, g.shape()[1]), cell(by.1, lo1, g.shape()[1]));
    let mut total = 0.0;
    for i in i0..=i1 {
        for j in j0..=j1 {
            let (x0, y0) = (lo0 + i as f64 * h, lo1 + j as f64 * h);
            let q = clip_box(poly, x0, x0 + h, y0, y0 + h);
            if q.len() < 3 {
                continue;
            }
            let (a, sx, sy) = moments(&q);
            let n = |di: usize, dj: usize| g.index([i + di, j + dj, 0]);
            let xx = |k: usize| x.comps[0][k];
            let yy = |k: usize| x.comps[1][k];
            // div X = c0 + cs·s + ct·t in local coordinates s, t ∈ [0, 1]
            let (x00, x10, x01, x11) = (xx(n(0, 0)), xx(n(1, 0)), xx(n(0, 1)), xx(n(1, 1)));
            let (y00, y10, y01, y11) = (yy(n(0, 0)), yy(n(1, 0)), yy(n(0, 1)), yy(n(1, 1)));
            let c0 = ((x10 - x00) + (y01 - y00)) / h;
            let ct = ((x11 - x01) - (x10 - x00)) / h;
            let cs = ((y11 - y10) - (y01 - y00)) / h;
            let is = (sx - x0 * a) / h;
            let it = (sy - y0 * a) / h;
            total += c0 * a + cs * is + ct * it;
        }
    }
    total
}

fn flux_integral(g: &Grid, x: &VectorField, poly: &[Point]) -> f64 {
    const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];
    let h = g.h();
    let n = poly.len();
    let mut total = 0.0;
    for k in 0..n {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if len == 0.0 {
            continue;
        }
        let normal = [d[1] / len, -d[0] / len];
        let mut ts = vec![0.0, 1.0];
        for axis in 0..2 {
            if d[axis] == 0.0 {
                continue;
            }
            let (lo, hi) = (a[axis].min(b[axis]), a[axis].max(b[axis]));
            let first = ((lo - g.lo()[axis]) / h).ceil() as i64;
            let last = ((hi - g.lo()[axis]) / h).floor() as i64;
            for m in first..=last {
                let c = g.lo()[axis] + m as f64 * h;
                let t = (c - a[axis]) / d[axis];
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        for w in ts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 <= t0 {
                continue;
            }
            let piece = (t1 - t0) * len;
            // evaluate inside the piece's own cell
            let mid = 0.5 * (t0 + t1);
            let cell = [a[0] + mid * d[0], a[1] + mid * d[1], 0.0];
            for gq in GAUSS2 {
                let t = t0 + gq * (t1 - t0);
                let p = [a[0] + t * d[0], a[1] + t * d[1], 0.0];
                let v = bilinear_in_cell(g, x, &cell, &p);
                total += 0.5 * piece * (v[0] * normal[0] + v[1] * normal[1]);
            }
        }
    }
    total
}

/// Bilinear interpolant of `x` from the cell containing `anchor`, evaluated at `p`.
fn bilinear_in_cell(g: &Grid, x: &VectorField, anchor: &Point, p: &Point) -> [f64; 2] {
    let h = g.h();
    let ci = |v: f64, lo: f64, n: usize| (((v - lo) / h).floor().max(0.0) as usize).min(n - 2);
    let i = ci(anchor[0], g.lo()[0], g.shape()[0]);
    let j = ci(anchor[1], g.lo()[1], g.shape()[1]);
    let s = (p[0] - (g.lo()[0] + i as f64 * h)) / h;
    let t = (p[1] - (g.lo()[1] + j as f64 * h)) / h;
    let idx = |di: usize, dj: usize| g.index([i + di, j + dj, 0]);
    let mut out = [0.0; 2];
    for (c, o) in out.iter_mut().enumerate() {
        let v = &x.comps[c];
        *o = v[idx(0, 0)] * (1.0 - s) * (1.0 - t) + v[idx(1, 0)] * s * (1.0 - t) + v[idx(0, 1)] * (1.0 - s) * t + v[idx(1, 1)] * s * t;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_helpers() {
        let sq = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(inside(&sq, &[0.5, 0.5, 0.0]));
        assert!(!inside(&sq, &[1.5, 0.5, 0.0]));
        let (a, sx, sy) = moments(&sq);
        assert!((a - 1.0).abs() < 1e-15 && (sx - 0.5).abs() < 1e-15 && (sy - 0.5).abs() < 1e-15);
        let c = clip_box(&sq, 0.25, 0.75, -1.0, 0.5);
        assert!((moments(&c).0 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn divergence_theorem_is_exact_for_the_interpolant() {
        let g = Grid::cube(2, -1.0, 1.0, 0.1).unwrap();
        let w = ScalarField::from_fn(&g, "w", crate::field::Provenance::Analytic, |p| {
            (1.3 * p[0]).sin() * (0.7 * p[1]).cosh() + p[0] * p[1] * p[1]
        })
        .unwrap();
        let x = gradient(&w);
        // a nonconvex polygon with edges crossing many cells
        let poly = vec![[-0.63, -0.41, 0.0], [0.52, -0.55, 0.0], [0.11, 0.07, 0.0], [0.71, 0.66, 0.0], [-0.48, 0.38, 0.0]];
        let (v, f) = (volume_integral(&g, &x, &poly), flux_integral(&g, &x, &poly));
        assert!((v - f).abs() <= 1e-12 * v.abs().max(1.0), "{v} vs {f}");
    }
}
