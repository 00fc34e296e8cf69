use super::{Grid, Point, ScalarField};

/// First derivative along `axis`: central in the interior, second-order
/// one-sided at the two ends.
pub(crate) fn d1(grid: &Grid, v: &[f64], axis: usize) -> Vec<f64> {
    let n = grid.shape()[axis];
    let st = grid.stride(axis);
    let inv = 1.0 / (2.0 * grid.h());
    let mut out = vec![0.0; v.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let i = (idx / st) % n;
        *o = if i == 0 {
            (-3.0 * v[idx] + 4.0 * v[idx + st] - v[idx + 2 * st]) * inv
        } else if i == n - 1 {
            (3.0 * v[idx] - 4.0 * v[idx - st] + v[idx - 2 * st]) * inv
        } else {
            (v[idx + st] - v[idx - st]) * inv
        };
    }
    out
}

/// Second derivative along `axis`: three-point in the interior, four-point
/// one-sided at the ends.
pub(crate) fn d2(grid: &Grid, v: &[f64], axis: usize) -> Vec<f64> {
    let n = grid.shape()[axis];
    let st = grid.stride(axis);
    let inv = 1.0 / (grid.h() * grid.h());
    let mut out = vec![0.0; v.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let i = (idx / st) % n;
        *o = if i == 0 {
            (2.0 * v[idx] - 5.0 * v[idx + st] + 4.0 * v[idx + 2 * st] - v[idx + 3 * st]) * inv
        } else if i == n - 1 {
            (2.0 * v[idx] - 5.0 * v[idx - st] + 4.0 * v[idx - 2 * st] - v[idx - 3 * st]) * inv
        } else {
            (v[idx + st] - 2.0 * v[idx] + v[idx - st]) * inv
        };
    }
    out
}

/// One component per axis.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Grid,
    pub comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn at(&self, idx: usize) -> Point {
        let mut p = [0.0; 3];
        for (a, c) in self.comps.iter().enumerate() {
            p[a] = c[idx];
        }
        p
    }

    pub fn norm_sq_at(&self, idx: usize) -> f64 {
        self.comps.iter().map(|c| c[idx] * c[idx]).sum()
    }

    /// Pointwise Euclidean norm.
    pub fn norm(&self) -> ScalarField {
        let v = (0..self.grid.len()).map(|i| self.norm_sq_at(i).sqrt()).collect();
        ScalarField::derived(&self.grid, v, "norm")
    }

    pub fn norm_sq(&self) -> ScalarField {
        let v = (0..self.grid.len()).map(|i| self.norm_sq_at(i)).collect();
        ScalarField::derived(&self.grid, v, "norm_sq")
    }

    /// Multilinear interpolation of every component.
    pub fn interpolate(&self, p: &Point) -> Option<Point> {
        let mut out = [0.0; 3];
        for (a, c) in self.comps.iter().enumerate() {
            out[a] = self.grid.interpolate(c, p)?;
        }
        Some(out)
    }
}

/// Full `dim × dim` Hessian per node, symmetric by construction.
#[derive(Clone, Debug)]
pub struct HessianField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl HessianField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn entry(&self, idx: usize, a: usize, b: usize) -> f64 {
        self.comps[a * self.grid.dim() + b][idx]
    }

    pub fn frobenius_sq_at(&self, idx: usize) -> f64 {
        self.comps.iter().map(|c| c[idx] * c[idx]).sum()
    }

    pub fn frobenius(&self) -> ScalarField {
        let v = (0..self.grid.len()).map(|i| self.frobenius_sq_at(i).sqrt()).collect();
        ScalarField::derived(&self.grid, v, "hessian_frobenius")
    }

    /// `∇²u · v` at a node.
    pub fn apply(&self, idx: usize, v: &Point) -> Point {
        let d = self.grid.dim();
        let mut out = [0.0; 3];
        for a in 0..d {
            out[a] = (0..d).map(|b| self.entry(idx, a, b) * v[b]).sum();
        }
        out
    }
}

pub fn gradient(u: &ScalarField) -> VectorField {
    let g = u.grid();
    let comps = (0..g.dim()).map(|a| d1(g, u.values(), a)).collect();
    VectorField { grid: g.clone(), comps }
}

pub fn hessian(u: &ScalarField) -> HessianField {
    let g = u.grid();
    let d = g.dim();
    let mut comps = vec![Vec::new(); d * d];
    let first: Vec<Vec<f64>> = (0..d).map(|a| d1(g, u.values(), a)).collect();
    for a in 0..d {
        comps[a * d + a] = d2(g, u.values(), a);
        for b in (a + 1)..d {
            let m = d1(g, &first[b], a);
            comps[b * d + a] = m.clone();
            comps[a * d + b] = m;
        }
    }
    HessianField { grid: g.clone(), comps }
}

/// Jacobian of a sampled gradient, `∂_a (∇u)_b`, by the same first-difference
/// stencil. Interior entries are symmetric up to rounding; this is the
/// Hessian consistent with differentiating `|∇u|` by [`gradient`].
pub(crate) fn jacobian(grad: &VectorField) -> HessianField {
    let g = &grad.grid;
    let d = g.dim();
    let mut comps = vec![Vec::new(); d * d];
    for a in 0..d {
        for b in 0..d {
            comps[a * d + b] = d1(g, &grad.comps[b], a);
        }
    }
    HessianField { grid: g.clone(), comps }
}

pub fn laplacian(u: &ScalarField) -> ScalarField {
    let g = u.grid();
    let mut acc = vec![0.0; g.len()];
    for a in 0..g.dim() {
        for (s, v) in acc.iter_mut().zip(d2(g, u.values(), a)) {
            *s += v;
        }
    }
    ScalarField::derived(g, acc, "laplacian")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Provenance;

    fn field(g: &Grid, f: impl Fn(&Point) -> f64) -> ScalarField {
        ScalarField::from_fn(g, "t", Provenance::Analytic, f).unwrap()
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let g = Grid::cube(2, 0.0, 1.0, 0.125).unwrap();
        let u = field(&g, |_| 3.5);
        assert!(gradient(&u).norm().interior_max_abs() < 1e-12);
        assert!(laplacian(&u).values().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn gradient_exact_on_affine_everywhere() {
        let g = Grid::cube(3, -1.0, 1.0, 0.25).unwrap();
        let u = field(&g, |p| 0.3 * p[0] - 1.7 * p[1] + 2.0 * p[2] + 0.5);
        let gr = gradient(&u);
        for i in 0..g.len() {
            let v = gr.at(i);
            assert!((v[0] - 0.3).abs() < 1e-12 && (v[1] + 1.7).abs() < 1e-12 && (v[2] - 2.0).abs() < 1e-12);
        }
        assert!(hessian(&u).frobenius().values().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn hessian_exact_on_quadratics() {
        let g = Grid::cube(2, -1.0, 1.0, 0.125).unwrap();
        let u = field(&g, |p| 0.5 * (p[0] * p[0] + p[1] * p[1]) + 0.25 * p[0] * p[1]);
        let hs = hessian(&u);
        let lap = laplacian(&u);
        for i in 0..g.len() {
            assert!((hs.entry(i, 0, 0) - 1.0).abs() < 1e-10);
            assert!((hs.entry(i, 1, 1) - 1.0).abs() < 1e-10);
            assert!((hs.entry(i, 0, 1) - 0.25).abs() < 1e-10);
            assert_eq!(hs.entry(i, 0, 1), hs.entry(i, 1, 0));
            assert!((lap.get(i) - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn laplacian_of_half_norm_squared_is_dimension() {
        for dim in 1..=3 {
            let g = Grid::cube(dim, -1.0, 1.0, 0.25).unwrap();
            let u = field(&g, |p| 0.5 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
            let lap = laplacian(&u);
            for i in g.interior() {
                assert!((lap.get(i) - dim as f64).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn second_order_convergence_on_smooth_field() {
        let err = |h: f64| {
            let g = Grid::cube(2, 0.0, 1.0, h).unwrap();
            let u = field(&g, |p| (2.0 * p[0]).sin() * (1.5 * p[1]).cos());
            let lap = laplacian(&u);
            g.interior()
                .map(|i| {
                    let p = g.point(i);
                    (lap.get(i) + 6.25 * (2.0 * p[0]).sin() * (1.5 * p[1]).cos()).abs()
                })
                .fold(0.0, f64::max)
        };
        let order = (err(1.0 / 16.0) / err(1.0 / 32.0)).log2();
        assert!((1.8..2.2).contains(&order), "order {order}");
    }
}
