use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{gradient, Point, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightKind {
    /// `e^{u²/2θ₀²}|∇u|`
    ExpTheta,
    /// `(1 − u²)^{−α}|∇u|`
    PowerAlpha,
    /// `|∇w|`
    GradW,
    /// `1`
    Unit,
}

impl WeightKind {
    pub const ALL: [WeightKind; 4] = [WeightKind::ExpTheta, WeightKind::PowerAlpha, WeightKind::GradW, WeightKind::Unit];

    pub fn as_str(&self) -> &'static str {
        match self {
            WeightKind::ExpTheta => "exp_theta",
            WeightKind::PowerAlpha => "power_alpha",
            WeightKind::GradW => "grad_w",
            WeightKind::Unit => "unit",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exp_theta" => Ok(WeightKind::ExpTheta),
            "power_alpha" => Ok(WeightKind::PowerAlpha),
            "grad_w" => Ok(WeightKind::GradW),
            "unit" => Ok(WeightKind::Unit),
            other => Err(Error::Config(format!("unknown weight kind `{other}`"))),
        }
    }

    /// Weights coming from the local theorem need `r < d₀/2`.
    pub fn is_local(&self) -> bool {
        matches!(self, WeightKind::ExpTheta | WeightKind::GradW)
    }
}

/// Isotropic integrand `G(x, p) = g(x)|p|`.
#[derive(Clone, Debug)]
pub struct DensityWeight {
    pub kind: WeightKind,
    /// Nodal density `g` before rescaling; `None` for the unit weight.
    pub density: Option<ScalarField>,
    u: Option<ScalarField>,
    grad_norm: Option<ScalarField>,
    pub theta0: Option<f64>,
    pub alpha: Option<f64>,
    pub rescale: f64,
    /// `r_max = d₀/2` for the local kinds.
    pub r_max: Option<f64>,
}

impl DensityWeight {
    pub fn unit() -> Self {
        Self { kind: WeightKind::Unit, density: None, u: None, grad_norm: None, theta0: None, alpha: None, rescale: 1.0, r_max: None }
    }

    pub fn exp_theta(u: &ScalarField, theta0: f64) -> Result<Self> {
        if !(theta0 > 0.0) {
            return Err(Error::Domain(format!("theta0 must be positive, got {theta0}")));
        }
        let gn = gradient(u).norm();
        let vals = (0..u.grid().len()).map(|i| (u.get(i).powi(2) / (2.0 * theta0 * theta0)).exp() * gn.get(i)).collect();
        let density = ScalarField::new(u.grid().clone(), vals, "g_exp_theta", crate::field::Provenance::Derived)
            .map_err(|_| Error::Domain("exp_theta density overflows; theta0 too small for the field range".into()))?;
        Ok(Self {
            kind: WeightKind::ExpTheta,
            density: Some(density),
            u: Some(u.clone()),
            grad_norm: Some(gn),
            theta0: Some(theta0),
            alpha: None,
            rescale: 1.0,
            r_max: None,
        })
    }

    /// Nodes with `|u| ≥ 1` get an infinite-free placeholder of zero in the
    /// nodal field and are rejected when evaluated at a facet.
    pub fn power_alpha(u: &ScalarField, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        let gn = gradient(u).norm();
        let vals = (0..u.grid().len())
            .map(|i| {
                let v = u.get(i);
                if v.abs() < 1.0 {
                    ((1.0 - v) * (1.0 + v)).powf(-alpha) * gn.get(i)
                } else {
                    0.0
                }
            })
            .collect();
        let density = ScalarField::new(u.grid().clone(), vals, "g_power_alpha", crate::field::Provenance::Derived)
            .map_err(|_| Error::Domain("power_alpha density overflows".into()))?;
        Ok(Self {
            kind: WeightKind::PowerAlpha,
            density: Some(density),
            u: Some(u.clone()),
            grad_norm: Some(gn),
            theta0: None,
            alpha: Some(alpha),
            rescale: 1.0,
            r_max: None,
        })
    }

    pub fn grad_w(w: &ScalarField) -> Self {
        let mut g = gradient(w).norm();
        g.name = "g_grad_w".into();
        Self { kind: WeightKind::GradW, density: Some(g), u: None, grad_norm: None, theta0: None, alpha: None, rescale: 1.0, r_max: None }
    }

    pub fn with_rescale(mut self, factor: f64) -> Self {
        self.rescale = factor;
        self
    }

    pub fn with_radius_guard(mut self, r_max: f64) -> Self {
        self.r_max = Some(r_max);
        self
    }

    /// Density at `p` (multilinear interpolation), or `None` where undefined.
    pub fn try_density(&self, p: &Point) -> Option<f64> {
        let raw = match self.kind {
            WeightKind::Unit => 1.0,
            WeightKind::GradW => {
                let g = self.density.as_ref()?;
                g.interpolate(p)?
            }
            WeightKind::ExpTheta => {
                let (u, gn) = (self.u.as_ref()?.interpolate(p)?, self.grad_norm.as_ref()?.interpolate(p)?);
                let t = self.theta0?;
                (u * u / (2.0 * t * t)).exp() * gn
            }
            WeightKind::PowerAlpha => {
                let (u, gn) = (self.u.as_ref()?.interpolate(p)?, self.grad_norm.as_ref()?.interpolate(p)?);
                if !(u.abs() < 1.0) {
                    return None;
                }
                ((1.0 - u) * (1.0 + u)).powf(-self.alpha?) * gn
            }
        };
        let v = raw * self.rescale;
        v.is_finite().then_some(v)
    }

    /// `G(x, p) = g(x)|p|`.
    pub fn integrand(&self, x: &Point, p: &Point) -> Option<f64> {
        Some(self.try_density(x)? * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
    }

    /// Nodal density after rescaling.
    fn node_density(&self, i: usize) -> f64 {
        self.rescale * self.density.as_ref().map_or(1.0, |g| g.get(i))
    }
}

/// Findings for the four integrand conditions on a node set.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrandReport {
    /// (a) max relative `|G(x, a p) − a G(x, p)|` over random samples.
    pub homogeneity_error: f64,
    pub homogeneity_samples: usize,
    /// (b) `μ₀ = min g` over the nodes.
    pub mu0: f64,
    /// (c) `1/μ₀`, the global factor that makes `min g = 1`.
    pub rescale_factor: f64,
    /// (c) holds without rescaling.
    pub convex_without_rescale: bool,
    /// (d) `max |G − A|` and the derivative differences, after rescaling.
    pub lambda: f64,
    pub lambda_terms: [f64; 4],
}

/// Checks (a)–(d) for `G = g(x)|p|` on `nodes`. The report is computed for
/// the weight as given; `rescale_factor` is what would make `min g = 1`.
pub fn check_integrand_conditions(weight: &DensityWeight, nodes: &[usize], seed: u64) -> Result<IntegrandReport> {
    if nodes.is_empty() {
        return Err(Error::EmptyRegion("integrand band has no nodes".into()));
    }
    let mu0 = nodes.iter().map(|&i| weight.node_density(i)).fold(f64::INFINITY, f64::min);
    if !(mu0 > 0.0) {
        return Err(Error::Domain(format!("density is not positive on the band (min {mu0})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const SAMPLES: usize = 100;
    let mut homogeneity_error = 0.0f64;
    let points: Vec<Point> = match &weight.density {
        Some(g) => nodes.iter().map(|&i| g.grid().point(i)).collect(),
        None => vec![[0.0; 3]],
    };
    for _ in 0..SAMPLES {
        let x = points[rng.random_range(0..points.len())];
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let a: f64 = rng.random_range(0.01..100.0);
        let ap = [a * p[0], a * p[1], a * p[2]];
        let (Some(lhs), Some(rhs)) = (weight.integrand(&x, &ap), weight.integrand(&x, &p)) else {
            return Err(Error::Domain(format!("density undefined at {x:?}")));
        };
        let rhs = a * rhs;
        homogeneity_error = homogeneity_error.max((lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE));
    }
    // (d): with G − A = (g − 1)|p|, every p-derivative is bounded by |g − 1|
    // on the unit sphere, so the x-derivatives of g carry the rest.
    let mut terms = [0.0f64; 4];
    if let Some(g) = &weight.density {
        let grid = g.grid();
        let s = weight.rescale;
        let vals: Vec<f64> = g.values().iter().map(|v| v * s).collect();
        let d1: Vec<Vec<f64>> = (0..grid.dim()).map(|a| crate::field::d1(grid, &vals, a)).collect();
        let d2: Vec<Vec<f64>> = (0..grid.dim()).map(|a| crate::field::d1(grid, &d1[a], a)).collect();
        let d3: Vec<Vec<f64>> = (0..grid.dim()).map(|a| crate::field::d1(grid, &d2[a], a)).collect();
        let inner = |i: usize| {
            let m = grid.multi(i);
            (0..grid.dim()).all(|a| m[a] >= 3 && m[a] + 3 < grid.shape()[a])
        };
        for &i in nodes {
            terms[0] = terms[0].max((vals[i] - 1.0).abs());
            if inner(i) {
                for a in 0..grid.dim() {
                    terms[1] = terms[1].max(d1[a][i].abs());
                    terms[2] = terms[2].max(d2[a][i].abs());
                    terms[3] = terms[3].max(d3[a][i].abs());
                }
            }
        }
    } else {
        terms[0] = (weight.rescale - 1.0).abs();
    }
    let lambda = terms.iter().copied().fold(0.0, f64::max);
    Ok(IntegrandReport {
        homogeneity_error,
        homogeneity_samples: SAMPLES,
        mu0,
        rescale_factor: 1.0 / mu0,
        convex_without_rescale: mu0 >= 1.0,
        lambda,
        lambda_terms: terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Band, Grid, Provenance};

    fn front() -> ScalarField {
        let g = Grid::cube(2, -2.0, 2.0, 1.0 / 32.0).unwrap();
        ScalarField::from_fn(&g, "u", Provenance::Analytic, |p| ((0.6 * p[0] + 0.8 * p[1]) / 2f64.sqrt()).tanh()).unwrap()
    }

    #[test]
    fn unit_weight_is_area() {
        let r = check_integrand_conditions(&DensityWeight::unit(), &[0], 1).unwrap();
        assert_eq!(r.mu0, 1.0);
        assert_eq!(r.rescale_factor, 1.0);
        assert!(r.convex_without_rescale);
        assert_eq!(r.lambda, 0.0);
        assert!(r.homogeneity_error <= 1e-15);
    }

    #[test]
    fn rescale_and_homogeneity() {
        let u = front();
        let nodes = u.band_nodes(&Band::symmetric(0.9));
        for w in [DensityWeight::exp_theta(&u, 0.3).unwrap(), DensityWeight::power_alpha(&u, 2.0).unwrap(), DensityWeight::grad_w(&u)] {
            let r = check_integrand_conditions(&w, &nodes, 7).unwrap();
            assert!(r.homogeneity_error <= 1e-12);
            assert!(r.mu0 > 0.0 && r.mu0 < 1.0 && !r.convex_without_rescale);
            let scaled = w.clone().with_rescale(r.rescale_factor);
            let s = check_integrand_conditions(&scaled, &nodes, 7).unwrap();
            assert!((s.mu0 - 1.0).abs() <= 1e-12);
            assert!(s.lambda.is_finite() && s.lambda > 0.0);
        }
    }

    #[test]
    fn power_alpha_undefined_at_wells() {
        let g = Grid::cube(1, 0.0, 1.0, 0.125).unwrap();
        let u = ScalarField::from_fn(&g, "u", Provenance::Analytic, |p| p[0]).unwrap();
        let w = DensityWeight::power_alpha(&u, 2.0).unwrap();
        assert!(w.try_density(&[0.5, 0.0, 0.0]).is_some());
        assert!(w.try_density(&[1.0, 0.0, 0.0]).is_none());
        assert!(w.try_density(&[2.0, 0.0, 0.0]).is_none());
        assert!(WeightKind::parse("grad_w").unwrap().is_local());
        assert!(!WeightKind::PowerAlpha.is_local());
    }
}
