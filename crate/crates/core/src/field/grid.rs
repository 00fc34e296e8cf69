use crate::error::{Error, Result};

/// A point in up to three dimensions; unused trailing coordinates are zero.
pub type Point = [f64; 3];

pub(crate) const MIN_NODES: usize = 8;

/// Uniform isotropic grid in 1, 2 or 3 dimensions.
///
/// Nodes are stored row-major: axis 0 is the slowest index.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    shape: [usize; 3],
    lo: [f64; 3],
    h: f64,
}

impl Grid {
    pub fn new(dim: usize, shape: &[usize], lo: &[f64], h: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Grid(format!("dimension {dim} not in 1..=3")));
        }
        if shape.len() != dim || lo.len() != dim {
            return Err(Error::Grid(format!(
                "expected {dim} node counts and origins, got {} and {}",
                shape.len(),
                lo.len()
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Grid(format!("spacing must be positive, got {h}")));
        }
        let mut s = [1usize; 3];
        let mut o = [0.0; 3];
        for a in 0..dim {
            if shape[a] < MIN_NODES {
                return Err(Error::Grid(format!(
                    "axis {a} has {} nodes, need at least {MIN_NODES}",
                    shape[a]
                )));
            }
            if !lo[a].is_finite() {
                return Err(Error::Grid(format!("axis {a} origin is not finite")));
            }
            s[a] = shape[a];
            o[a] = lo[a];
        }
        Ok(Self { dim, shape: s, lo: o, h })
    }

    /// Grid spanning `[lo[a], hi[a]]` on every axis; each extent must be an
    /// integer multiple of `h`.
    pub fn from_extents(dim: usize, lo: &[f64], hi: &[f64], h: f64) -> Result<Self> {
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::Grid("extent arrays do not match dimension".into()));
        }
        let mut shape = Vec::with_capacity(dim);
        for a in 0..dim {
            let cells = (hi[a] - lo[a]) / h;
            let n = cells.round();
            if !(cells > 0.0) || (cells - n).abs() > 1e-8 * n.max(1.0) {
                return Err(Error::Grid(format!(
                    "extent [{}, {}] on axis {a} is not a multiple of h = {h}",
                    lo[a], hi[a]
                )));
            }
            shape.push(n as usize + 1);
        }
        Self::new(dim, &shape, lo, h)
    }

    /// Hypercube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64, h: f64) -> Result<Self> {
        Self::from_extents(dim, &vec![lo; dim], &vec![hi; dim], h)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.lo[axis] + (self.shape[axis] - 1) as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    pub fn index(&self, m: [usize; 3]) -> usize {
        (m[0] * self.shape[1] + m[1]) * self.shape[2] + m[2]
    }

    pub fn multi(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.shape[2];
        let r = idx / self.shape[2];
        [r / self.shape[1], r % self.shape[1], k]
    }

    pub fn point(&self, idx: usize) -> Point {
        let m = self.multi(idx);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.lo[a] + m[a] as f64 * self.h;
        }
        p
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let m = self.multi(idx);
        (0..self.dim).any(|a| m[a] == 0 || m[a] == self.shape[a] - 1)
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        self.interior_with_margin(1)
    }

    /// Nodes at least `margin` index steps away from every face.
    pub fn interior_with_margin(&self, margin: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| {
            let m = self.multi(i);
            (0..self.dim).all(|a| m[a] >= margin && m[a] + margin < self.shape[a])
        })
    }

    /// Nodes at distance at most `radius` from `center`.
    pub fn nodes_in_ball(&self, ball: &Ball) -> Vec<usize> {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            if a < self.dim {
                let n = (self.shape[a] - 1) as f64;
                let l = ((ball.center[a] - ball.radius - self.lo[a]) / self.h).floor();
                let u = ((ball.center[a] + ball.radius - self.lo[a]) / self.h).ceil();
                if u < 0.0 || l > n {
                    return Vec::new();
                }
                lo[a] = l.max(0.0) as usize;
                hi[a] = u.min(n) as usize;
            }
        }
        let mut out = Vec::new();
        let r2 = ball.radius * ball.radius;
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    let idx = self.index([i, j, k]);
                    if dist2(&self.point(idx), &ball.center) <= r2 {
                        out.push(idx);
                    }
                }
            }
        }
        out
    }

    /// Cell origin and fractional offsets for multilinear interpolation.
    pub(crate) fn locate(&self, p: &Point) -> Option<([usize; 3], [f64; 3])> {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..self.dim {
            let x = (p[a] - self.lo[a]) / self.h;
            let n = self.shape[a] - 1;
            if !(x >= -1e-9 && x <= n as f64 + 1e-9) {
                return None;
            }
            let x = x.clamp(0.0, n as f64);
            let i = (x.floor() as usize).min(n - 1);
            base[a] = i;
            frac[a] = x - i as f64;
        }
        Some((base, frac))
    }

    /// Multilinear interpolation of nodal `values` at `p`.
    pub fn interpolate(&self, values: &[f64], p: &Point) -> Option<f64> {
        let (base, frac) = self.locate(p)?;
        let corners = 1usize << self.dim;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut m = base;
            let mut w = 1.0;
            for a in 0..self.dim {
                if (c >> a) & 1 == 1 {
                    m[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            acc += w * values[self.index(m)];
        }
        Some(acc)
    }

    /// Whether the closed box `[lo, hi]` of the grid contains `p`.
    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|a| p[a] >= self.lo[a] - 1e-12 && p[a] <= self.hi(a) + 1e-12)
    }
}

pub(crate) fn dist2(a: &Point, b: &Point) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum()
}

pub(crate) fn norm(a: &Point) -> f64 {
    dist2(a, &[0.0; 3]).sqrt()
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn to_point(v: &[f64]) -> Point {
    let mut p = [0.0; 3];
    for (d, s) in p.iter_mut().zip(v) {
        *d = *s;
    }
    p
}

/// Closed ball `{x : |x − center| ≤ radius}`, realized on grids as a node subset.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: &[f64], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center: to_point(center), radius })
    }

    pub fn contains(&self, p: &Point) -> bool {
        dist2(p, &self.center) <= self.radius * self.radius
    }

    /// Concentric ball with radius scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Ball {
        Ball { center: self.center, radius: self.radius * factor }
    }
}

/// Closed interval of u-values used to select band nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Domain(format!("band [{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    /// `{|u| ≤ 1 − delta}`.
    pub fn symmetric(half_width: f64) -> Self {
        Self { lo: -half_width, hi: half_width }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = Grid::new(3, &[8, 9, 10], &[0.0, 0.0, 0.0], 0.1).unwrap();
        for idx in [0, 5, 77, g.len() - 1] {
            assert_eq!(g.index(g.multi(idx)), idx);
        }
        assert_eq!(g.stride(0), 90);
        assert_eq!(g.stride(2), 1);
    }

    #[test]
    fn rejects_small_or_inconsistent() {
        assert!(Grid::new(2, &[7, 10], &[0.0, 0.0], 0.1).is_err());
        assert!(Grid::cube(2, 0.0, 1.0, 0.3).is_err());
        assert!(Grid::new(2, &[8, 8], &[0.0, 0.0], 0.0).is_err());
        let g = Grid::cube(2, 0.0, 1.0, 0.125).unwrap();
        assert_eq!(g.shape(), &[9, 9]);
        assert!((g.hi(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_exact_on_bilinear() {
        let g = Grid::cube(2, -1.0, 1.0, 0.25).unwrap();
        let vals: Vec<f64> = (0..g.len())
            .map(|i| {
                let p = g.point(i);
                1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1]
            })
            .collect();
        let p = [0.31, -0.77, 0.0];
        let v = g.interpolate(&vals, &p).unwrap();
        assert!((v - (1.0 + 0.62 + 0.77 - 0.5 * 0.31 * 0.77)).abs() < 1e-13);
        assert!(g.interpolate(&vals, &[1.5, 0.0, 0.0]).is_none());
    }

    #[test]
    fn ball_nodes() {
        let g = Grid::cube(2, -1.0, 1.0, 0.125).unwrap();
        let b = Ball::new(&[0.0, 0.0], 0.3).unwrap();
        let nodes = g.nodes_in_ball(&b);
        let brute: Vec<usize> = (0..g.len()).filter(|&i| b.contains(&g.point(i))).collect();
        assert_eq!(nodes, brute);
        let far = Ball::new(&[5.0, 5.0], 0.3).unwrap();
        assert!(g.nodes_in_ball(&far).is_empty());
    }
}
