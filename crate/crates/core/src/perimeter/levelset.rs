//! Extraction of `{w = level}`: marching squares in 2D, marching tetrahedra
//! (Kuhn split of each cube) in 3D, linear interpolation along edges.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::{dist2, dot, norm, sub, Grid, Point, ScalarField};

/// Segment (2D, two vertices) or triangle (3D, three vertices).
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub vertices: Vec<usize>,
    pub centroid: Point,
    /// Unit normal pointing from `{w < level}` into `{w > level}`.
    pub normal: Point,
    /// Length in 2D, area in 3D.
    pub measure: f64,
}

/// Vertex chain of a 2D level set, oriented so that the right-hand normal of
/// every segment points into `{w > level}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub vertices: Vec<usize>,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelSet {
    pub dim: usize,
    pub level: f64,
    pub vertices: Vec<Point>,
    pub facets: Vec<Facet>,
    /// Empty in 3D.
    pub chains: Vec<Chain>,
}

/// Right-hand normal of the segment `a → b`.
pub(crate) fn right_normal(a: &Point, b: &Point) -> (Point, f64) {
    let d = sub(b, a);
    let len = norm(&d);
    ([d[1] / len, -d[0] / len, 0.0], len)
}

fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

impl LevelSet {
    /// 2D level set built from chains; facets follow the chain order.
    pub(crate) fn from_chains(level: f64, vertices: Vec<Point>, chains: Vec<Chain>) -> Self {
        let mut facets = Vec::new();
        for c in &chains {
            let n = c.vertices.len();
            let edges = if c.closed { n } else { n.saturating_sub(1) };
            for k in 0..edges {
                let (i, j) = (c.vertices[k], c.vertices[(k + 1) % n]);
                let (a, b) = (&vertices[i], &vertices[j]);
                let (normal, len) = right_normal(a, b);
                if !(len > 0.0) {
                    continue;
                }
                facets.push(Facet {
                    vertices: vec![i, j],
                    centroid: [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.0],
                    normal,
                    measure: len,
                });
            }
        }
        LevelSet { dim: 2, level, vertices, facets, chains }
    }

    pub fn total_measure(&self) -> f64 {
        self.facets.iter().map(|f| f.measure).sum()
    }

    /// Sum of facet measures with centroid in the ball.
    pub fn measure_in_ball(&self, ball: &crate::field::Ball) -> f64 {
        self.facets.iter().filter(|f| ball.contains(&f.centroid)).map(|f| f.measure).sum()
    }

    /// Every 2D chain either closes or has both ends on the boundary of `grid`.
    pub fn is_closed_or_boundary_terminated(&self, grid: &Grid) -> bool {
        let on_boundary = |p: &Point| {
            (0..grid.dim()).any(|a| {
                (p[a] - grid.lo()[a]).abs() <= 1e-9 * grid.h() || (p[a] - grid.hi(a)).abs() <= 1e-9 * grid.h()
            })
        };
        self.chains.iter().all(|c| {
            c.closed || (on_boundary(&self.vertices[c.vertices[0]]) && on_boundary(&self.vertices[*c.vertices.last().unwrap()]))
        })
    }

    /// Facet closest to `p` by centroid.
    pub fn nearest_facet(&self, p: &Point) -> Option<usize> {
        (0..self.facets.len()).min_by(|&a, &b| {
            dist2(&self.facets[a].centroid, p).total_cmp(&dist2(&self.facets[b].centroid, p))
        })
    }

    /// Minimal centroid-to-centroid distance to another level set.
    pub fn distance_to(&self, other: &LevelSet) -> f64 {
        let mut best = f64::INFINITY;
        for f in &self.facets {
            for g in &other.facets {
                best = best.min(dist2(&f.centroid, &g.centroid));
            }
        }
        best.sqrt()
    }

    /// `cx,cy,cz,nx,ny,nz,measure` per facet.
    pub fn facets_csv(&self) -> String {
        let mut s = String::from("cx,cy,cz,nx,ny,nz,measure\n");
        for f in &self.facets {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                f.centroid[0], f.centroid[1], f.centroid[2], f.normal[0], f.normal[1], f.normal[2], f.measure
            );
        }
        s
    }

    /// `index,x,y,z` per vertex.
    pub fn vertices_csv(&self) -> String {
        let mut s = String::from("index,x,y,z\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "{i},{:.16e},{:.16e},{:.16e}", v[0], v[1], v[2]);
        }
        s
    }
}

struct Builder<'a> {
    grid: &'a Grid,
    values: &'a [f64],
    level: f64,
    keys: HashMap<(usize, usize), usize>,
    vertices: Vec<Point>,
}

impl Builder<'_> {
    /// Vertex on the edge between nodes `i` (below) and `j` (at or above).
    fn vertex(&mut self, i: usize, j: usize) -> usize {
        let key = (i.min(j), i.max(j));
        if let Some(&v) = self.keys.get(&key) {
            return v;
        }
        let (a, b) = (self.values[i] - self.level, self.values[j] - self.level);
        let t = a / (a - b);
        let (p, q) = (self.grid.point(i), self.grid.point(j));
        let v = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])];
        self.vertices.push(v);
        self.keys.insert(key, self.vertices.len() - 1);
        self.vertices.len() - 1
    }

    fn above(&self, i: usize) -> bool {
        self.values[i] >= self.level
    }
}

/// `{w = level}` with normals pointing into `{w > level}`.
pub fn extract_level_set(w: &ScalarField, level: f64) -> Result<LevelSet> {
    let g = w.grid();
    let (lo, hi) = w.min_max();
    if !(level > lo && level < hi) {
        return Err(Error::LevelSet(format!("level {level} is not crossed (w in [{lo}, {hi}])")));
    }
    let mut b = Builder { grid: g, values: w.values(), level, keys: HashMap::new(), vertices: Vec::new() };
    match g.dim() {
        2 => Ok(marching_squares(&mut b)),
        3 => Ok(marching_tets(&mut b)),
        d => Err(Error::Unsupported(format!("level sets in dimension {d}"))),
    }
}

fn marching_squares(b: &mut Builder) -> LevelSet {
    let g = b.grid;
    let (n0, n1) = (g.shape()[0], g.shape()[1]);
    let mut segments: Vec<(usize, usize)> = Vec::new();
    for i in 0..n0 - 1 {
        for j in 0..n1 - 1 {
            // counterclockwise corners
            let c = [g.index([i, j, 0]), g.index([i + 1, j, 0]), g.index([i + 1, j + 1, 0]), g.index([i, j + 1, 0])];
            let up: Vec<bool> = c.iter().map(|&k| b.above(k)).collect();
            let crossings: Vec<usize> = (0..4).filter(|&e| up[e] != up[(e + 1) % 4]).collect();
            let edge_vertex = |b: &mut Builder, e: usize| {
                let (p, q) = (c[e], c[(e + 1) % 4]);
                if b.above(p) {
                    b.vertex(q, p)
                } else {
                    b.vertex(p, q)
                }
            };
            match crossings.len() {
                2 => {
                    let (v0, v1) = (edge_vertex(b, crossings[0]), edge_vertex(b, crossings[1]));
                    segments.push((v0, v1));
                }
                4 => {
                    let centre = c.iter().map(|&k| b.values[k]).sum::<f64>() / 4.0;
                    let verts: Vec<usize> = (0..4).map(|e| edge_vertex(b, e)).collect();
                    // pair edges around the corners that are separated from the centre
                    let centre_up = centre >= b.level;
                    if up[0] != centre_up {
                        segments.push((verts[3], verts[0]));
                        segments.push((verts[1], verts[2]));
                    } else {
                        segments.push((verts[0], verts[1]));
                        segments.push((verts[2], verts[3]));
                    }
                }
                _ => {}
            }
        }
    }
    let chains = chain_segments(b, &segments);
    LevelSet::from_chains(b.level, std::mem::take(&mut b.vertices), chains)
}

fn chain_segments(b: &Builder, segments: &[(usize, usize)]) -> Vec<Chain> {
    let nv = b.vertices.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (s, &(p, q)) in segments.iter().enumerate() {
        if p != q {
            adj[p].push(s);
            adj[q].push(s);
        }
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();
    let other = |s: usize, v: usize| if segments[s].0 == v { segments[s].1 } else { segments[s].0 };
    let walk = |start: usize, used: &mut Vec<bool>| -> Option<Chain> {
        let s0 = *adj[start].iter().find(|&&s| !used[s])?;
        let mut verts = vec![start];
        let mut s = s0;
        let mut v = start;
        loop {
            used[s] = true;
            v = other(s, v);
            if v == start {
                return Some(Chain { vertices: verts, closed: true });
            }
            verts.push(v);
            match adj[v].iter().find(|&&t| !used[t]) {
                Some(&t) => s = t,
                None => return Some(Chain { vertices: verts, closed: false }),
            }
        }
    };
    // open chains start at degree-one vertices
    for v in 0..nv {
        if adj[v].len() == 1 && !used[adj[v][0]] {
            if let Some(c) = walk(v, &mut used) {
                chains.push(c);
            }
        }
    }
    for v in 0..nv {
        while adj[v].iter().any(|&s| !used[s]) {
            match walk(v, &mut used) {
                Some(c) => chains.push(c),
                None => break,
            }
        }
    }
    for c in &mut chains {
        orient_chain(b, c);
    }
    chains
}

/// Reverse the chain if its right-hand normals point into `{w < level}`.
fn orient_chain(b: &Builder, c: &mut Chain) {
    let n = c.vertices.len();
    if n < 2 {
        return;
    }
    let mut score = 0.0;
    let edges = if c.closed { n } else { n - 1 };
    for k in 0..edges {
        let (p, q) = (&b.vertices[c.vertices[k]], &b.vertices[c.vertices[(k + 1) % n]]);
        let (nrm, len) = right_normal(p, q);
        if !(len > 0.0) {
            continue;
        }
        let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.0];
        let probe = 0.25 * b.grid.h();
        let plus = b.grid.interpolate(b.values, &[mid[0] + probe * nrm[0], mid[1] + probe * nrm[1], 0.0]);
        let minus = b.grid.interpolate(b.values, &[mid[0] - probe * nrm[0], mid[1] - probe * nrm[1], 0.0]);
        if let (Some(a), Some(m)) = (plus, minus) {
            score += (a - m).signum() * len;
        }
    }
    if score < 0.0 {
        c.vertices.reverse();
    }
}

/// Kuhn decomposition: each tetrahedron follows a monotone path 0 → 7.
const KUHN: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn marching_tets(b: &mut Builder) -> LevelSet {
    let g = b.grid;
    let sh = g.shape().to_vec();
    let mut facets = Vec::new();
    for i in 0..sh[0] - 1 {
        for j in 0..sh[1] - 1 {
            for k in 0..sh[2] - 1 {
                for perm in KUHN {
                    let mut m = [i, j, k];
                    let mut tet = [g.index(m); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        m[axis] += 1;
                        tet[s + 1] = g.index(m);
                    }
                    tet_facets(b, &tet, &mut facets);
                }
            }
        }
    }
    LevelSet { dim: 3, level: b.level, vertices: std::mem::take(&mut b.vertices), facets, chains: Vec::new() }
}

fn tet_facets(b: &mut Builder, tet: &[usize; 4], out: &mut Vec<Facet>) {
    let (below, above): (Vec<usize>, Vec<usize>) = tet.iter().partition(|&&n| !b.above(n));
    if below.is_empty() || above.is_empty() {
        return;
    }
    let tris: Vec<[usize; 3]> = match (below.len(), above.len()) {
        (1, 3) => vec![[b.vertex(below[0], above[0]), b.vertex(below[0], above[1]), b.vertex(below[0], above[2])]],
        (3, 1) => vec![[b.vertex(below[0], above[0]), b.vertex(below[1], above[0]), b.vertex(below[2], above[0])]],
        _ => {
            let q = [
                b.vertex(below[0], above[0]),
                b.vertex(below[0], above[1]),
                b.vertex(below[1], above[1]),
                b.vertex(below[1], above[0]),
            ];
            vec![[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
        }
    };
    let up_centre = {
        let pts: Vec<Point> = above.iter().map(|&n| b.grid.point(n)).collect();
        let k = pts.len() as f64;
        [
            pts.iter().map(|p| p[0]).sum::<f64>() / k,
            pts.iter().map(|p| p[1]).sum::<f64>() / k,
            pts.iter().map(|p| p[2]).sum::<f64>() / k,
        ]
    };
    for t in tris {
        let (p, q, r) = (b.vertices[t[0]], b.vertices[t[1]], b.vertices[t[2]]);
        let c = cross(&sub(&q, &p), &sub(&r, &p));
        let area2 = norm(&c);
        if !(area2 > 0.0) {
            continue;
        }
        let centroid = [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0, (p[2] + q[2] + r[2]) / 3.0];
        let mut nrm = [c[0] / area2, c[1] / area2, c[2] / area2];
        let mut verts = vec![t[0], t[1], t[2]];
        if dot(&nrm, &sub(&up_centre, &centroid)) < 0.0 {
            nrm = [-nrm[0], -nrm[1], -nrm[2]];
            verts.swap(1, 2);
        }
        out.push(Facet { vertices: verts, centroid, normal: nrm, measure: 0.5 * area2 });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Ball, Provenance};

    fn field(g: &Grid, f: impl Fn(&Point) -> f64) -> ScalarField {
        ScalarField::from_fn(g, "w", Provenance::Analytic, f).unwrap()
    }

    /// Length of the line `a·x + b = 0` inside `[0, 1]²` (Liang–Barsky clip).
    fn clipped_length(a: [f64; 2], b: f64) -> f64 {
        let p0 = [-b * a[0], -b * a[1]];
        let d = [-a[1], a[0]];
        let (mut t0, mut t1) = (-10.0f64, 10.0f64);
        for ax in 0..2 {
            if d[ax].abs() < 1e-15 {
                continue;
            }
            let (ta, tb) = ((0.0 - p0[ax]) / d[ax], (1.0 - p0[ax]) / d[ax]);
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
        (t1 - t0).max(0.0)
    }

    #[test]
    fn planar_line_geometry() {
        let h = 1.0 / 64.0;
        let g = Grid::cube(2, 0.0, 1.0, h).unwrap();
        let t = 0.35f64;
        let a = [t.cos(), t.sin()];
        let off = -0.6;
        let w = field(&g, |p| p[0] * a[0] + p[1] * a[1] + off);
        let s = extract_level_set(&w, 0.0).unwrap();
        let exact = clipped_length(a, off);
        assert!((s.total_measure() - exact).abs() <= 5.0 * h, "{} vs {exact}", s.total_measure());
        for v in &s.vertices {
            assert!((v[0] * a[0] + v[1] * a[1] + off).abs() <= h * h);
        }
        for f in &s.facets {
            assert!((norm(&f.normal) - 1.0).abs() < 1e-10);
            assert!((f.normal[0] - a[0]).abs() + (f.normal[1] - a[1]).abs() <= 10.0 * h);
        }
        assert_eq!(s.chains.len(), 1);
        assert!(s.is_closed_or_boundary_terminated(&g));
    }

    #[test]
    fn circle_converges_first_order_or_better() {
        let mut errs = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let g = Grid::cube(2, -2.0, 2.0, h).unwrap();
            let w = field(&g, |p| (p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0);
            let s = extract_level_set(&w, 0.0).unwrap();
            let err = (s.total_measure() - std::f64::consts::TAU).abs();
            assert!(err <= 10.0 * h);
            assert_eq!(s.chains.len(), 1);
            assert!(s.chains[0].closed);
            // outward normals
            for f in &s.facets {
                assert!(dot(&f.normal, &f.centroid) > 0.0);
            }
            errs.push(err);
        }
        assert!(errs[2] < errs[0] / 2.0);
        let g = Grid::cube(2, -2.0, 2.0, 1.0 / 32.0).unwrap();
        let w = field(&g, |p| (p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0);
        let s = extract_level_set(&w, 0.0).unwrap();
        let ball = Ball::new(&[1.0, 0.0], 0.5).unwrap();
        assert!(s.measure_in_ball(&ball) > 0.9 && s.measure_in_ball(&ball) < 1.1);
    }

    #[test]
    fn saddle_cells_and_errors() {
        let g = Grid::cube(2, -1.0, 1.0, 0.125).unwrap();
        let w = field(&g, |p| p[0] * p[1] + 0.01);
        let s = extract_level_set(&w, 0.0).unwrap();
        assert!(s.is_closed_or_boundary_terminated(&g));
        assert!(s.chains.len() == 2);
        assert!(extract_level_set(&w, 5.0).is_err());
    }

    #[test]
    fn sphere_area() {
        let h = 1.0 / 16.0;
        let g = Grid::cube(3, -1.5, 1.5, h).unwrap();
        let w = field(&g, |p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0);
        let s = extract_level_set(&w, 0.0).unwrap();
        let exact = 4.0 * std::f64::consts::PI;
        assert!((s.total_measure() - exact).abs() < 0.05 * exact, "{}", s.total_measure());
        for f in &s.facets {
            assert!((norm(&f.normal) - 1.0).abs() < 1e-10);
            assert!(dot(&f.normal, &f.centroid) > 0.0);
        }
        let plane = field(&g, |p| p[2] - 0.01);
        let s = extract_level_set(&plane, 0.0).unwrap();
        assert!((s.total_measure() - 9.0).abs() < 1e-9);
        assert!(s.facets.iter().all(|f| (f.normal[2] - 1.0).abs() < 1e-12));
    }
}
