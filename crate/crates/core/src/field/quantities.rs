use super::calculus::{gradient, hessian, jacobian, laplacian, HessianField, VectorField};
use super::{Ball, Band, Point, ScalarField, STAT_MARGIN};
use crate::error::{Error, Result};
use crate::model1d::DoubleWellPotential;

/// Default threshold below which |∇u| counts as vanishing.
pub const DEFAULT_GRAD_FLOOR: f64 = 1e-8;

/// Max/mean of a residual over a node set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

impl ResidualStats {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut max = 0.0f64;
        let mut sum = 0.0;
        let mut count = 0usize;
        for v in values {
            let a = v.abs();
            max = max.max(a);
            sum += a;
            count += 1;
        }
        (count > 0).then(|| Self { max, mean: sum / count as f64, count })
    }
}

/// Derivative bundle shared by the pointwise quantities.
pub(crate) struct Derivatives {
    pub grad: VectorField,
    /// Three-point second differences on the diagonal.
    pub hess: HessianField,
    /// Jacobian of `grad`; pairs with `grad_gnorm` in Qsq.
    pub jac: HessianField,
    /// |∇u|
    pub gnorm: ScalarField,
    /// ∇|∇u| by differentiating the sampled |∇u|.
    pub grad_gnorm: VectorField,
}

impl Derivatives {
    pub fn of(u: &ScalarField) -> Self {
        let grad = gradient(u);
        let hess = hessian(u);
        let jac = jacobian(&grad);
        let gnorm = grad.norm();
        let grad_gnorm = gradient(&gnorm);
        Self { grad, hess, jac, gnorm, grad_gnorm }
    }

    pub fn qsq_at(&self, idx: usize, grad_floor: f64) -> f64 {
        let s = self.gnorm.get(idx);
        if s < grad_floor {
            return 0.0;
        }
        (self.jac.frobenius_sq_at(idx) - self.grad_gnorm.norm_sq_at(idx)) / (s * s)
    }

    pub fn qsq(&self, grad_floor: f64) -> ScalarField {
        let g = self.gnorm.grid();
        let v = (0..g.len()).map(|i| self.qsq_at(i, grad_floor)).collect();
        ScalarField::derived(g, v, "qsq")
    }
}

/// `(|∇²u|² − |∇|∇u||²)/|∇u|²` where `|∇u| ≥ grad_floor`, zero elsewhere.
///
/// Both `∇²u` and `∇|∇u|` are formed by applying the first-difference
/// gradient to a sampled field (`∇u` and `|∇u|` respectively). With matched
/// stencils the reverse triangle inequality gives `|∇|∇u|| ≤ |∇²u|` node by
/// node, so the discrete Qsq is never negative, and it vanishes exactly on
/// fronts aligned with a grid axis.
pub fn compute_qsq(u: &ScalarField, grad_floor: f64) -> ScalarField {
    Derivatives::of(u).qsq(grad_floor)
}

/// Residual of `Δ|∇u| = (Qsq + W″(u))|∇u|` over interior band nodes with
/// `|∇u| ≥ grad_floor`.
pub fn check_p_identity(
    u: &ScalarField,
    pot: &DoubleWellPotential,
    band: &Band,
    grad_floor: f64,
) -> Result<ResidualStats> {
    let d = Derivatives::of(u);
    let lap_p = laplacian(&d.gnorm);
    let g = u.grid();
    let res = g
        .interior_with_margin(STAT_MARGIN)
        .filter(|&i| band.contains(u.get(i)) && d.gnorm.get(i) >= grad_floor)
        .map(|i| {
            let p = d.gnorm.get(i);
            lap_p.get(i) - (d.qsq_at(i, grad_floor) + pot.wpp(u.get(i))) * p
        });
    ResidualStats::from_values(res)
        .ok_or_else(|| Error::EmptyRegion(format!("no interior nodes with u in [{}, {}]", band.lo, band.hi)))
}

/// `sup |∇u| / inf |∇u|` over interior nodes of the ball with u-value in `band`.
pub fn harnack_ratio(u: &ScalarField, ball: &Ball, band: &Band) -> Result<f64> {
    let gn = gradient(u).norm();
    let g = u.grid();
    let (lo, hi) = g
        .nodes_in_ball(ball)
        .into_iter()
        .filter(|&i| !g.is_boundary(i) && band.contains(u.get(i)))
        .map(|i| gn.get(i))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if lo > hi {
        return Err(Error::EmptyRegion("ball ∩ band has no interior nodes".into()));
    }
    Ok(if lo > 0.0 { hi / lo } else { f64::INFINITY })
}

/// `sup u − inf u` over the nodes of the ball.
pub fn oscillation(u: &ScalarField, ball: &Ball) -> Result<f64> {
    let nodes = u.grid().nodes_in_ball(ball);
    if nodes.is_empty() {
        return Err(Error::EmptyRegion("ball contains no grid nodes".into()));
    }
    let (lo, hi) = nodes
        .iter()
        .map(|&i| u.get(i))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    Ok(hi - lo)
}

/// One side-by-side comparison of an interior estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisEstimate {
    /// Axis pair; first-derivative rows repeat the axis.
    pub axes: (usize, usize),
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateCheck {
    pub pass: bool,
    pub margin: f64,
    pub first: Vec<AxisEstimate>,
    pub second: Vec<AxisEstimate>,
    /// Human-readable descriptions of violated rows.
    pub violations: Vec<String>,
}

/// Interior gradient estimate on the cube `D = {|x_i − x0_i| < r}`:
/// `|u_{x_i}(x0)| ≤ (n/r) sup_∂D |u| + (r/2) sup_D |Δu|`, and the same bound
/// applied to `u_{x_i}` for the second derivatives, with `Δu = W′(u)` and
/// `Δu_{x_i} = W″(u) u_{x_i}`.
pub fn interior_gradient_estimate_check(
    u: &ScalarField,
    pot: &DoubleWellPotential,
    x0: &[f64],
    r: f64,
) -> Result<EstimateCheck> {
    let g = u.grid();
    let n = g.dim();
    let x0 = super::to_point(x0);
    for a in 0..n {
        if x0[a] - r < g.lo()[a] - 1e-12 || x0[a] + r > g.hi(a) + 1e-12 {
            return Err(Error::Domain(format!("cube of half-width {r} exceeds the grid on axis {a}")));
        }
    }
    let cheb = |p: &Point| (0..n).map(|a| (p[a] - x0[a]).abs()).fold(0.0, f64::max);
    let cube: Vec<usize> = (0..g.len()).filter(|&i| cheb(&g.point(i)) <= r + 1e-12).collect();
    let shell: Vec<usize> = cube
        .iter()
        .copied()
        .filter(|&i| cheb(&g.point(i)) >= r - 0.5 * g.h())
        .collect();
    if shell.is_empty() {
        return Err(Error::EmptyRegion("cube boundary has no nodes".into()));
    }
    let grad = gradient(u);
    let hess = hessian(u);
    let sup = |nodes: &[usize], f: &dyn Fn(usize) -> f64| nodes.iter().map(|&i| f(i).abs()).fold(0.0, f64::max);

    let nf = n as f64;
    let sup_u = sup(&shell, &|i| u.get(i));
    let sup_lap = sup(&cube, &|i| pot.wp(u.get(i)));
    let mut first = Vec::new();
    let mut second = Vec::new();
    let mut violations = Vec::new();
    for i in 0..n {
        let lhs = g.interpolate(&grad.comps[i], &x0).unwrap_or(f64::NAN).abs();
        let rhs = nf / r * sup_u + 0.5 * r * sup_lap;
        if !(lhs <= rhs) {
            violations.push(format!("first derivative axis {i}: {lhs} > {rhs}"));
        }
        first.push(AxisEstimate { axes: (i, i), lhs, rhs });

        let comp = &grad.comps[i];
        let sup_ui = sup(&shell, &|k| comp[k]);
        let sup_lap_ui = sup(&cube, &|k| pot.wpp(u.get(k)) * comp[k]);
        let rhs2 = nf / r * sup_ui + 0.5 * r * sup_lap_ui;
        for j in 0..n {
            let hv: Vec<f64> = (0..g.len()).map(|k| hess.entry(k, j, i)).collect();
            let lhs2 = g.interpolate(&hv, &x0).unwrap_or(f64::NAN).abs();
            if !(lhs2 <= rhs2) {
                violations.push(format!("second derivative axes ({j}, {i}): {lhs2} > {rhs2}"));
            }
            second.push(AxisEstimate { axes: (j, i), lhs: lhs2, rhs: rhs2 });
        }
    }
    let margin = first
        .iter()
        .chain(second.iter())
        .map(|e| e.rhs - e.lhs)
        .fold(f64::INFINITY, f64::min);
    Ok(EstimateCheck { pass: violations.is_empty(), margin, first, second, violations })
}
