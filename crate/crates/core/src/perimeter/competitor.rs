use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::levelset::{Chain, Facet, LevelSet};
use crate::error::{Error, Result};
use crate::field::{dist2, dot, norm, sub, Ball, Point};

/// Seeded family of graph perturbations.
#[derive(Clone, Debug, PartialEq)]
pub struct CompetitorSpec {
    /// Number of random bumps.
    pub count: usize,
    pub seed: u64,
    /// Bump amplitudes, as fractions of the ball radius.
    pub amplitude: (f64, f64),
    pub include_zero: bool,
    /// 2D only.
    pub include_chord: bool,
}

impl Default for CompetitorSpec {
    fn default() -> Self {
        Self { count: 100, seed: 1, amplitude: (0.02, 0.3), include_zero: true, include_chord: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Perturbation {
    Zero,
    /// `η(ξ) = a (1 − |ξ − ξ₀|²/ρ²)³₊` along the normal of the tangent plane.
    Bump { offset: Point, radius: f64, amplitude: f64 },
    /// Straight segment between two vertices of the chain.
    Chord { from: usize, to: usize },
}

impl Perturbation {
    pub fn describe(&self) -> String {
        match self {
            Perturbation::Zero => "zero".into(),
            Perturbation::Bump { offset, radius, amplitude } => format!(
                "bump offset=({:.6},{:.6},{:.6}) radius={radius:.6} amplitude={amplitude:.6}",
                offset[0], offset[1], offset[2]
            ),
            Perturbation::Chord { from, to } => format!("chord {from}-{to}"),
        }
    }
}

/// Competitor F with `E Δ F` inside the 0.9-sub-ball of `ball`.
#[derive(Clone, Debug)]
pub struct Competitor {
    pub surface: LevelSet,
    pub ball: Ball,
    pub perturbation: Perturbation,
    /// 2D polygon bounding `E Δ F`, counterclockwise; `None` when empty.
    pub region: Option<Vec<Point>>,
    /// `+1` for `F ⊃ E` (region outside E), `−1` for `F ⊂ E`, `0` for no change.
    pub side: i8,
}

/// Local frame of E at the point nearest to the ball centre.
struct Frame {
    origin: Point,
    normal: Point,
    tangents: Vec<Point>,
}

impl Frame {
    fn tangent_coords(&self, x: &Point) -> Point {
        let d = sub(x, &self.origin);
        let mut c = [0.0; 3];
        for (k, t) in self.tangents.iter().enumerate() {
            c[k] = dot(&d, t);
        }
        c
    }

    fn height(&self, x: &Point) -> f64 {
        dot(&sub(x, &self.origin), &self.normal)
    }
}

fn frame(e: &LevelSet, ball: &Ball) -> Result<Frame> {
    let k = e.nearest_facet(&ball.center).ok_or_else(|| Error::LevelSet("level set has no facets".into()))?;
    let f = &e.facets[k];
    if dist2(&f.centroid, &ball.center) >= (0.5 * ball.radius).powi(2) {
        return Err(Error::LevelSet(format!(
            "level set does not cross the ball (nearest facet at distance {})",
            dist2(&f.centroid, &ball.center).sqrt()
        )));
    }
    let n = f.normal;
    // foot of the perpendicular from the centre onto the facet plane
    let h = dot(&sub(&ball.center, &f.centroid), &n);
    let origin = [ball.center[0] - h * n[0], ball.center[1] - h * n[1], ball.center[2] - h * n[2]];
    let tangents = if e.dim == 2 {
        vec![[-n[1], n[0], 0.0]]
    } else {
        let pick = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let d = dot(&pick, &n);
        let t1 = sub(&pick, &[d * n[0], d * n[1], d * n[2]]);
        let l = norm(&t1);
        let t1 = [t1[0] / l, t1[1] / l, t1[2] / l];
        let t2 = [n[1] * t1[2] - n[2] * t1[1], n[2] * t1[0] - n[0] * t1[2], n[0] * t1[1] - n[1] * t1[0]];
        vec![t1, t2]
    };
    Ok(Frame { origin, normal: n, tangents })
}

fn bump(xi: &Point, offset: &Point, radius: f64, amplitude: f64) -> f64 {
    let r2 = dist2(xi, offset) / (radius * radius);
    if r2 >= 1.0 {
        0.0
    } else {
        amplitude * (1.0 - r2).powi(3)
    }
}

fn rebuild_3d(e: &LevelSet, vertices: Vec<Point>) -> LevelSet {
    let facets = e
        .facets
        .iter()
        .map(|f| {
            let (p, q, r) = (vertices[f.vertices[0]], vertices[f.vertices[1]], vertices[f.vertices[2]]);
            let (a, b) = (sub(&q, &p), sub(&r, &p));
            let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
            let l = norm(&c);
            Facet {
                vertices: f.vertices.clone(),
                centroid: [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0, (p[2] + q[2] + r[2]) / 3.0],
                normal: [c[0] / l, c[1] / l, c[2] / l],
                measure: 0.5 * l,
            }
        })
        .collect();
    LevelSet { dim: 3, level: e.level, vertices, facets, chains: Vec::new() }
}

fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n).map(|k| {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        a[0] * b[1] - b[0] * a[1]
    })
    .sum::<f64>()
        * 0.5
}

/// Orientation rule: E chains have `{w > level}` on their right, so a region
/// traced along E and closed by F is counterclockwise exactly when it lies on
/// the `{w < level}` side, i.e. inside E.
fn region_from_paths(e_path: Vec<Point>, f_path_back: Vec<Point>) -> (Option<Vec<Point>>, i8) {
    let mut poly = e_path;
    poly.extend(f_path_back);
    let a = signed_area(&poly);
    if a.abs() < 1e-14 {
        return (None, 0);
    }
    if a > 0.0 {
        (Some(poly), -1)
    } else {
        poly.reverse();
        (Some(poly), 1)
    }
}

impl Competitor {
    fn zero(e: &LevelSet, ball: &Ball) -> Self {
        Competitor { surface: e.clone(), ball: ball.clone(), perturbation: Perturbation::Zero, region: None, side: 0 }
    }

    fn bump(e: &LevelSet, ball: &Ball, fr: &Frame, offset: Point, radius: f64, amplitude: f64) -> Option<Self> {
        let sub_ball = ball.scaled(0.9);
        let mut verts = e.vertices.clone();
        let mut moved = vec![false; verts.len()];
        for (i, v) in e.vertices.iter().enumerate() {
            if fr.height(v).abs() > radius {
                continue;
            }
            let eta = bump(&fr.tangent_coords(v), &offset, radius, amplitude);
            if eta == 0.0 {
                continue;
            }
            let nv = [v[0] + eta * fr.normal[0], v[1] + eta * fr.normal[1], v[2] + eta * fr.normal[2]];
            if !sub_ball.contains(v) || !sub_ball.contains(&nv) {
                return None;
            }
            verts[i] = nv;
            moved[i] = true;
        }
        if !moved.iter().any(|&m| m) {
            return None;
        }
        let perturbation = Perturbation::Bump { offset, radius, amplitude };
        if e.dim == 3 {
            let side = if amplitude > 0.0 { 1 } else { -1 };
            return Some(Competitor { surface: rebuild_3d(e, verts), ball: ball.clone(), perturbation, region: None, side });
        }
        // the moved vertices must form one contiguous run of one open chain
        let mut region = None;
        let mut side = 0;
        for c in &e.chains {
            let idx: Vec<usize> = (0..c.vertices.len()).filter(|&k| moved[c.vertices[k]]).collect();
            if idx.is_empty() {
                continue;
            }
            let (k0, k1) = (idx[0], idx[idx.len() - 1]);
            if region.is_some() || k1 - k0 + 1 != idx.len() || k0 == 0 || k1 + 1 >= c.vertices.len() {
                return None;
            }
            let e_path: Vec<Point> = (k0 - 1..=k1 + 1).map(|k| e.vertices[c.vertices[k]]).collect();
            let f_back: Vec<Point> = (k0..=k1).rev().map(|k| verts[c.vertices[k]]).collect();
            let (r, s) = region_from_paths(e_path, f_back);
            region = r;
            side = s;
        }
        let surface = LevelSet::from_chains(e.level, verts, e.chains.clone());
        Some(Competitor { surface, ball: ball.clone(), perturbation, region, side })
    }

    fn chord(e: &LevelSet, ball: &Ball, fr: &Frame, half: f64) -> Option<Self> {
        let sub_ball = ball.scaled(0.9);
        let (ci, c) = e.chains.iter().enumerate().find(|(_, c)| {
            c.vertices.iter().any(|&v| dist2(&e.vertices[v], &fr.origin) < (0.5 * half).powi(2))
        })?;
        let coord = |k: usize| fr.tangent_coords(&e.vertices[c.vertices[k]])[0];
        let near = |target: f64| {
            (0..c.vertices.len())
                .filter(|&k| sub_ball.contains(&e.vertices[c.vertices[k]]))
                .min_by(|&a, &b| (coord(a) - target).abs().total_cmp(&(coord(b) - target).abs()))
        };
        let (a, b) = (near(-half)?, near(half)?);
        let (ka, kb) = (a.min(b), a.max(b));
        if kb < ka + 2 {
            return None;
        }
        let mut chains = e.chains.clone();
        let mut nv: Vec<usize> = c.vertices[..=ka].to_vec();
        nv.extend_from_slice(&c.vertices[kb..]);
        chains[ci] = Chain { vertices: nv, closed: c.closed };
        let e_path: Vec<Point> = (ka..=kb).map(|k| e.vertices[c.vertices[k]]).collect();
        let (region, side) = region_from_paths(e_path, Vec::new());
        let surface = LevelSet::from_chains(e.level, e.vertices.clone(), chains);
        Some(Competitor {
            surface,
            ball: ball.clone(),
            perturbation: Perturbation::Chord { from: c.vertices[ka], to: c.vertices[kb] },
            region,
            side,
        })
    }
}

/// Zero perturbation, optional 2D chord, and `spec.count` seeded bumps.
pub fn generate_competitors(e: &LevelSet, ball: &Ball, spec: &CompetitorSpec) -> Result<Vec<Competitor>> {
    let (amin, amax) = spec.amplitude;
    if !(amin > 0.0 && amin <= amax && amax < 0.9) {
        return Err(Error::Config(format!("amplitude range ({amin}, {amax}) must satisfy 0 < min <= max < 0.9")));
    }
    let fr = frame(e, ball)?;
    let r = ball.radius;
    let avail = 0.9 * r - norm(&sub(&fr.origin, &ball.center));
    let mut out = Vec::new();
    if spec.include_zero {
        out.push(Competitor::zero(e, ball));
    }
    if spec.include_chord && e.dim == 2 {
        if let Some(c) = Competitor::chord(e, ball, &fr, 0.5 * avail) {
            out.push(c);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ntan = fr.tangents.len();
    let mut made = 0;
    let mut attempts = 0;
    while made < spec.count {
        attempts += 1;
        if attempts > 100 * spec.count.max(1) {
            return Err(Error::LevelSet(format!("could only place {made} of {} competitors in the ball", spec.count)));
        }
        let mag = rng.random_range(amin..=amax) * r;
        let amplitude = if rng.random_bool(0.5) { mag } else { -mag };
        let mut offset = [0.0; 3];
        for o in offset.iter_mut().take(ntan) {
            *o = rng.random_range(-0.3..0.3) * avail;
        }
        let room = avail - norm(&offset) - mag;
        if room <= 0.1 * avail {
            continue;
        }
        let radius = rng.random_range(0.5..1.0) * room;
        if let Some(c) = Competitor::bump(e, ball, &fr, offset, radius, amplitude) {
            out.push(c);
            made += 1;
        }
    }
    Ok(out)
}
