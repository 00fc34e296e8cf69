//! Pointwise inequality machinery: the Modica deficit, P-functions, the
//! gradient floor, the Hessian and Q assumptions, the operator `L` with its
//! right-hand side `J`, the two `|∇²u|²` identities and the stability form.

use crate::error::{Error, Result};
use crate::field::quantities::Derivatives;
use crate::field::{gradient, hessian, laplacian, Band, ResidualStats, ScalarField, STAT_MARGIN};
use crate::model1d::DoubleWellPotential;

/// `c₀ = min{1 − C₁, (C₁ + 2)/4}`; the second branch is active for `C₁ < 2/5`.
pub fn c0_from_c1(c1: f64) -> Result<f64> {
    if !(c1 > 0.0 && c1 < 1.0) {
        return Err(Error::Domain(format!("C1 must lie in (0, 1), got {c1}")));
    }
    Ok((1.0 - c1).min((c1 + 2.0) / 4.0))
}

/// `c₃ = 1 − C₂`.
pub fn c3_from_c2(c2: f64) -> Result<f64> {
    if !(c2 > 0.0 && c2 < 1.0) {
        return Err(Error::Domain(format!("C2 must lie in (0, 1), got {c2}")));
    }
    Ok(1.0 - c2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaMode {
    HessianBound,
    QBound,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alpha {
    /// Value used downstream.
    pub value: f64,
    /// `max{1/C₁, 4/(C₁+2)}`, reported next to `1/c₀` in Hessian mode.
    pub statement_value: Option<f64>,
}

impl Alpha {
    pub fn discrepancy(&self) -> bool {
        self.statement_value.is_some_and(|s| (s - self.value).abs() > 1e-12 * self.value.abs())
    }
}

/// Constants of the P-function arguments.
#[derive(Clone, Debug, PartialEq)]
pub struct PFunctionParams {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub theta0: Option<f64>,
    pub delta: f64,
}

impl PFunctionParams {
    pub fn new(c1: Option<f64>, c2: Option<f64>, theta0: Option<f64>, delta: f64) -> Result<Self> {
        if let Some(c) = c1 {
            c0_from_c1(c)?;
        }
        if let Some(c) = c2 {
            c3_from_c2(c)?;
        }
        if let Some(t) = theta0 {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Domain(format!("theta0 must be positive, got {t}")));
            }
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { c1, c2, theta0, delta })
    }

    pub fn c0(&self) -> Option<f64> {
        self.c1.map(|c| c0_from_c1(c).expect("validated"))
    }

    pub fn c3(&self) -> Option<f64> {
        self.c2.map(|c| c3_from_c2(c).expect("validated"))
    }

    /// `{|u| ≤ 1 − δ}`.
    pub fn band(&self) -> Band {
        Band::symmetric(1.0 - self.delta)
    }
}

/// Hessian mode returns `1/c₀` with the statement value attached; Q mode
/// returns `1/(1 − C₂)`.
pub fn alpha_exponent(params: &PFunctionParams, mode: AlphaMode) -> Result<Alpha> {
    match mode {
        AlphaMode::HessianBound => {
            let c1 = params.c1.ok_or_else(|| Error::Config("Hessian-bound alpha needs C1".into()))?;
            Ok(Alpha { value: 1.0 / c0_from_c1(c1)?, statement_value: Some((1.0 / c1).max(4.0 / (c1 + 2.0))) })
        }
        AlphaMode::QBound => {
            let c2 = params.c2.ok_or_else(|| Error::Config("Q-bound alpha needs C2".into()))?;
            Ok(Alpha { value: 1.0 / c3_from_c2(c2)?, statement_value: None })
        }
    }
}

/// `|∇u|² − 2W(u)` at every node.
pub fn modica_deficit(u: &ScalarField, pot: &DoubleWellPotential) -> ScalarField {
    let gs = gradient(u).norm_sq();
    let v = (0..u.grid().len()).map(|i| gs.get(i) - 2.0 * pot.w(u.get(i))).collect();
    let mut f = ScalarField::new(u.grid().clone(), v, "modica_deficit", crate::field::Provenance::Derived)
        .expect("finite inputs");
    f.notes.push(format!("from {}", u.name));
    f
}

/// Measured `θ₀ = inf |∇u|` over `{|u| ≤ 1 − δ}`.
pub fn gradient_floor(u: &ScalarField, delta: f64) -> Result<f64> {
    let band = Band::symmetric(1.0 - delta);
    let nodes = u.band_nodes(&band);
    if nodes.is_empty() {
        return Err(Error::EmptyRegion(format!("no nodes with |u| <= {}", 1.0 - delta)));
    }
    let gn = gradient(u).norm();
    Ok(nodes.iter().map(|&i| gn.get(i)).fold(f64::INFINITY, f64::min))
}

/// Result of a nodewise upper-bound check.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub pass: bool,
    /// Smallest constant for which the bound would hold on the checked nodes.
    pub empirical: f64,
    pub checked: usize,
    /// Nodes where the bound holds.
    pub holds: Vec<usize>,
    pub violations: usize,
    /// u-range of the violating nodes.
    pub violation_range: Option<(f64, f64)>,
}

impl BoundCheck {
    fn build(u: &ScalarField, rows: impl Iterator<Item = (usize, f64, f64)>, c: f64) -> Result<Self> {
        let mut empirical = 0.0f64;
        let mut checked = 0;
        let mut holds = Vec::new();
        let mut range: Option<(f64, f64)> = None;
        for (i, q, scale) in rows {
            checked += 1;
            empirical = empirical.max(q / scale);
            if q <= c * scale {
                holds.push(i);
            } else {
                let v = u.get(i);
                range = Some(range.map_or((v, v), |(a, b)| (a.min(v), b.max(v))));
            }
        }
        if checked == 0 {
            return Err(Error::EmptyRegion("no band nodes above the gradient floor".into()));
        }
        let violations = checked - holds.len();
        Ok(Self { pass: violations == 0, empirical, checked, holds, violations, violation_range: range })
    }

    /// Mask of nodes where the bound holds.
    pub fn mask(&self, len: usize) -> Vec<bool> {
        let mut m = vec![false; len];
        for &i in &self.holds {
            m[i] = true;
        }
        m
    }
}

/// `|∇²u| ≤ C₁|∇u|` (Frobenius norm) on band nodes with `|∇u| ≥ grad_floor`.
pub fn check_hessian_bound(u: &ScalarField, c1: f64, band: &Band, grad_floor: f64) -> Result<BoundCheck> {
    let hs = hessian(u).frobenius();
    let gn = gradient(u).norm();
    let rows = u
        .band_nodes(band)
        .into_iter()
        .filter(|&i| gn.get(i) >= grad_floor)
        .map(|i| (i, hs.get(i), gn.get(i)));
    BoundCheck::build(u, rows, c1)
}

/// Whether a Q bound reads `√Qsq` or `Qsq` on its left side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QMode {
    Q,
    Qsq,
}

impl QMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "q" | "Q" => Ok(QMode::Q),
            "qsq" | "Qsq" => Ok(QMode::Qsq),
            other => Err(Error::Config(format!("unknown Q interpretation `{other}`"))),
        }
    }

    fn apply(self, qsq: f64) -> f64 {
        match self {
            QMode::Q => qsq.max(0.0).sqrt(),
            QMode::Qsq => qsq,
        }
    }
}

/// `Q ≤ C₂(1 − u²)` with Q read per `mode`.
pub fn check_q_bound(u: &ScalarField, c2: f64, band: &Band, mode: QMode, grad_floor: f64) -> Result<BoundCheck> {
    let d = Derivatives::of(u);
    let rows = u
        .band_nodes(band)
        .into_iter()
        .filter(|&i| d.gnorm.get(i) >= grad_floor)
        .map(|i| {
            let v = u.get(i);
            (i, mode.apply(d.qsq_at(i, grad_floor)), (1.0 - v) * (1.0 + v))
        });
    BoundCheck::build(u, rows, c2)
}

/// `Q ≤ C₂ ((W′)² − 2WW″)/(2W)`, valid while `(W′)² − 2WW″ > 0` on the band.
pub fn general_q_bound(
    u: &ScalarField,
    pot: &DoubleWellPotential,
    c2: f64,
    band: &Band,
    mode: QMode,
    grad_floor: f64,
) -> Result<BoundCheck> {
    let nodes = u.band_nodes(band);
    let k = |v: f64| pot.wp(v).powi(2) - 2.0 * pot.w(v) * pot.wpp(v);
    let bad: Vec<f64> = nodes.iter().map(|&i| u.get(i)).filter(|&v| !(k(v) > 0.0)).collect();
    if !bad.is_empty() {
        let lo = bad.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = bad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::Domain(format!(
            "(W')^2 - 2 W W'' <= 0 for u in [{lo}, {hi}] ({} nodes)",
            bad.len()
        )));
    }
    let d = Derivatives::of(u);
    let rows = nodes.into_iter().filter(|&i| d.gnorm.get(i) >= grad_floor).map(|i| {
        let v = u.get(i);
        (i, mode.apply(d.qsq_at(i, grad_floor)), k(v) / (2.0 * pot.w(v)))
    });
    BoundCheck::build(u, rows, c2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PVariant {
    /// `c = c₀(C₁)`
    HessianBound { c1: f64 },
    /// `c = c₃(C₂)`
    QBound { c2: f64 },
}

impl PVariant {
    pub fn constant(&self) -> Result<f64> {
        match *self {
            PVariant::HessianBound { c1 } => c0_from_c1(c1),
            PVariant::QBound { c2 } => c3_from_c2(c2),
        }
    }
}

/// `2cW(u) − |∇u|²`, i.e. `c/2 (1 − u²)² − |∇u|²` for the canonical W.
pub fn p_function(u: &ScalarField, pot: &DoubleWellPotential, variant: PVariant) -> Result<ScalarField> {
    let c = variant.constant()?;
    Ok(p_with_constant(u, pot, c))
}

fn p_with_constant(u: &ScalarField, pot: &DoubleWellPotential, c: f64) -> ScalarField {
    let gs = gradient(u).norm_sq();
    let v = (0..u.grid().len()).map(|i| 2.0 * c * pot.w(u.get(i)) - gs.get(i)).collect();
    ScalarField::new(u.grid().clone(), v, "p", crate::field::Provenance::Derived).expect("finite inputs")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubharmonicCheck {
    pub pass: bool,
    pub min_laplacian: f64,
    pub checked: usize,
    /// `(node, ΔP)` below `−tolerance`.
    pub violations: Vec<(usize, f64)>,
}

/// Minimum of the discrete `ΔP` over masked statistic nodes.
pub fn check_subharmonic(p: &ScalarField, mask: &[bool], tolerance: f64) -> Result<SubharmonicCheck> {
    let lap = laplacian(p);
    let nodes: Vec<usize> = p.grid().interior_with_margin(STAT_MARGIN).filter(|&i| mask[i]).collect();
    if nodes.is_empty() {
        return Err(Error::EmptyRegion("subharmonic mask is empty".into()));
    }
    let min_laplacian = nodes.iter().map(|&i| lap.get(i)).fold(f64::INFINITY, f64::min);
    let violations: Vec<(usize, f64)> =
        nodes.iter().map(|&i| (i, lap.get(i))).filter(|&(_, v)| v < -tolerance).collect();
    Ok(SubharmonicCheck { pass: violations.is_empty(), min_laplacian, checked: nodes.len(), violations })
}

/// Both sides of `LP̃ = J` together with the coefficients.
#[derive(Clone, Debug)]
pub struct EllipticOperator {
    pub p_tilde: ScalarField,
    pub lp: ScalarField,
    pub j: ScalarField,
    /// `B_i` per axis.
    pub b: Vec<Vec<f64>>,
    pub c: ScalarField,
    /// `LP̃ − J`.
    pub residual: ScalarField,
    /// Statistic nodes with `|∇u| ≥ grad_floor`.
    pub nodes: Vec<usize>,
    /// Statistic nodes skipped for a vanishing gradient.
    pub excluded: usize,
}

impl EllipticOperator {
    pub fn residual_stats(&self) -> Option<ResidualStats> {
        ResidualStats::from_values(self.nodes.iter().map(|&i| self.residual.get(i)))
    }
}

/// Assembles `LP̃ = ΔP̃ + Σ Bᵢ P̃ᵢ + C P̃` from finite differences of `P̃` and,
/// independently, `J` from u, `|∇u|²` and Qsq, where
///
/// * `P̃ = 2cW(u) − |∇u|²`, `c = 1 − C₂`
/// * `Bᵢ = P̃ᵢ/(2|∇u|²) − 2cW′(u)uᵢ/|∇u|²`
/// * `C = min{2(c − 1)W″(u) − 2Qsq, 0}`
/// * `J = 2|∇u|²[(c − 1)W″(u) − Qsq − C/2] + 2c(1 − c)W′(u)² + 2cW(u)C`
pub fn elliptic_operator_l(
    u: &ScalarField,
    pot: &DoubleWellPotential,
    c2: f64,
    grad_floor: f64,
) -> Result<EllipticOperator> {
    let c = c3_from_c2(c2)?;
    let g = u.grid().clone();
    let n = g.len();
    let d = Derivatives::of(u);
    let p_tilde = p_with_constant(u, pot, c);
    let lap_p = laplacian(&p_tilde);
    let grad_p = gradient(&p_tilde);
    let mut b = vec![vec![0.0; n]; g.dim()];
    let mut lp = vec![0.0; n];
    let mut jv = vec![0.0; n];
    let mut cv = vec![0.0; n];
    let mut nodes = Vec::new();
    let mut excluded = 0;
    for i in 0..n {
        let v = u.get(i);
        let (w, wp, wpp) = (pot.w(v), pot.wp(v), pot.wpp(v));
        let qsq = d.qsq_at(i, grad_floor);
        let cc = (2.0 * (c - 1.0) * wpp - 2.0 * qsq).min(0.0);
        cv[i] = cc;
        let s = d.gnorm.get(i).powi(2);
        if d.gnorm.get(i) < grad_floor {
            if !g.is_boundary(i) {
                excluded += 1;
            }
            continue;
        }
        let mut drift = 0.0;
        for a in 0..g.dim() {
            let pa = grad_p.comps[a][i];
            let ba = pa / (2.0 * s) - 2.0 * c * wp * d.grad.comps[a][i] / s;
            b[a][i] = ba;
            drift += ba * pa;
        }
        lp[i] = lap_p.get(i) + drift + cc * p_tilde.get(i);
        jv[i] = 2.0 * s * ((c - 1.0) * wpp - qsq - 0.5 * cc) + 2.0 * c * (1.0 - c) * wp * wp + 2.0 * c * w * cc;
    }
    let stat: Vec<bool> = {
        let mut m = vec![false; n];
        for i in g.interior_with_margin(STAT_MARGIN) {
            m[i] = true;
        }
        m
    };
    for i in 0..n {
        if stat[i] && d.gnorm.get(i) >= grad_floor {
            nodes.push(i);
        }
    }
    excluded = excluded.min(n);
    let excluded_stat = (0..n).filter(|&i| stat[i] && d.gnorm.get(i) < grad_floor).count();
    let _ = excluded;
    let residual: Vec<f64> = (0..n).map(|i| lp[i] - jv[i]).collect();
    let mk = |v: Vec<f64>, name: &str| ScalarField::new(g.clone(), v, name, crate::field::Provenance::Derived);
    Ok(EllipticOperator {
        p_tilde,
        lp: mk(lp, "lp")?,
        j: mk(jv, "j")?,
        b,
        c: mk(cv, "c")?,
        residual: mk(residual, "lp_minus_j")?,
        nodes,
        excluded: excluded_stat,
    })
}

/// Residuals of the two `|∇²u|²` identities with Q read as Qsq:
///
/// 1. `|∇²u|² = Qsq|∇u|² + |∇|∇u||²` with the three-point Hessian on the left
/// 2. `|∇|∇u||² = (|∇P̃|² − 4cW′(u)∇u·∇P̃ + 4c²W′(u)²|∇u|²)/(4|∇u|²)`
///
/// The second one is an algebraic consequence of the definition of `P̃` and
/// holds for any smooth field, not only for solutions; on the grid both
/// residuals are O(h²).
pub fn identity_418(
    u: &ScalarField,
    pot: &DoubleWellPotential,
    c2: f64,
    band: &Band,
    grad_floor: f64,
) -> Result<(ResidualStats, ResidualStats)> {
    let c = c3_from_c2(c2)?;
    let d = Derivatives::of(u);
    let p = p_with_constant(u, pot, c);
    let gp = gradient(&p);
    let nodes: Vec<usize> = u.band_nodes(band).into_iter().filter(|&i| d.gnorm.get(i) >= grad_floor).collect();
    let first = nodes.iter().map(|&i| {
        let s = d.gnorm.get(i).powi(2);
        d.hess.frobenius_sq_at(i) - d.qsq_at(i, grad_floor) * s - d.grad_gnorm.norm_sq_at(i)
    });
    let first = ResidualStats::from_values(first).ok_or_else(|| Error::EmptyRegion("identity band is empty".into()))?;
    let second = nodes.iter().map(|&i| {
        let s = d.gnorm.get(i).powi(2);
        let wp = pot.wp(u.get(i));
        let dot: f64 = (0..u.grid().dim()).map(|a| d.grad.comps[a][i] * gp.comps[a][i]).sum();
        let rhs = (gp.norm_sq_at(i) - 4.0 * c * wp * dot + 4.0 * c * c * wp * wp * s) / (4.0 * s);
        d.grad_gnorm.norm_sq_at(i) - rhs
    });
    let second = ResidualStats::from_values(second).expect("same node set");
    Ok((first, second))
}

/// `(∫|∇ξ|²|∇u|², ∫Qsq ξ²|∇u|², lhs − rhs)` by node sums times `h^n`.
pub fn stability_form(u: &ScalarField, xi: &ScalarField, grad_floor: f64) -> Result<(f64, f64, f64)> {
    let g = u.grid();
    if xi.grid() != g {
        return Err(Error::Grid("test function lives on a different grid".into()));
    }
    let inner: Vec<bool> = {
        let mut m = vec![false; g.len()];
        for i in g.interior_with_margin(2) {
            m[i] = true;
        }
        m
    };
    if let Some(i) = (0..g.len()).find(|&i| !inner[i] && xi.get(i) != 0.0) {
        return Err(Error::Unsupported(format!(
            "test function must vanish on a two-node margin; node {i} has {}",
            xi.get(i)
        )));
    }
    let d = Derivatives::of(u);
    let gx = gradient(xi);
    let hn = g.h().powi(g.dim() as i32);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..g.len() {
        let s = d.gnorm.get(i).powi(2);
        lhs += gx.norm_sq_at(i) * s;
        rhs += d.qsq_at(i, grad_floor) * xi.get(i).powi(2) * s;
    }
    Ok((lhs * hn, rhs * hn, (lhs - rhs) * hn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{compute_qsq, Grid, Provenance, DEFAULT_GRAD_FLOOR};
    use crate::model1d::{planar_solution, solve_profile, HeteroclinicProfile};
    use proptest::prelude::*;

    const FLOOR: f64 = DEFAULT_GRAD_FLOOR;

    fn canonical() -> DoubleWellPotential {
        DoubleWellPotential::canonical()
    }

    fn profile() -> HeteroclinicProfile {
        solve_profile(&canonical(), 12.0, 1e-3).unwrap()
    }

    fn front(h: f64, deg: f64) -> ScalarField {
        let g = Grid::cube(2, -2.0, 2.0, h).unwrap();
        let t = deg.to_radians();
        planar_solution(&profile(), &[t.cos(), t.sin()], 0.05, &g).unwrap()
    }

    #[test]
    fn constants() {
        assert_eq!(c0_from_c1(0.5).unwrap(), 0.5);
        assert!((c0_from_c1(0.2).unwrap() - 0.55).abs() < 1e-15);
        assert!(c0_from_c1(1.0).is_err() && c0_from_c1(0.0).is_err());
        assert_eq!(c3_from_c2(0.25).unwrap(), 0.75);

        let p = PFunctionParams::new(Some(0.5), Some(0.5), None, 0.1).unwrap();
        let a = alpha_exponent(&p, AlphaMode::HessianBound).unwrap();
        assert_eq!(a.value, 2.0);
        assert_eq!(a.statement_value, Some(2.0));
        assert!(!a.discrepancy());
        assert_eq!(alpha_exponent(&p, AlphaMode::QBound).unwrap().value, 2.0);

        let p = PFunctionParams::new(Some(0.2), None, None, 0.1).unwrap();
        let a = alpha_exponent(&p, AlphaMode::HessianBound).unwrap();
        assert!((a.value - 1.0 / 0.55).abs() < 1e-12);
        assert_eq!(a.statement_value, Some(5.0));
        assert!(a.discrepancy());
        assert!(alpha_exponent(&p, AlphaMode::QBound).is_err());
        assert!(PFunctionParams::new(None, None, None, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn parameter_algebra(c1 in 1e-6f64..0.999_999, c2 in 1e-6f64..0.999_999) {
            let c0 = c0_from_c1(c1).unwrap();
            let c3 = c3_from_c2(c2).unwrap();
            prop_assert!(c0 > 0.0 && c0 < 1.0 && c3 > 0.0 && c3 < 1.0);
            let p = PFunctionParams::new(Some(c1), Some(c2), None, 0.1).unwrap();
            prop_assert!(alpha_exponent(&p, AlphaMode::HessianBound).unwrap().value >= 1.0);
            prop_assert!(alpha_exponent(&p, AlphaMode::QBound).unwrap().value >= 1.0);
            if c1 < 0.4 {
                prop_assert_eq!(c0, (c1 + 2.0) / 4.0);
            } else {
                prop_assert_eq!(c0, 1.0 - c1);
            }
        }
    }

    #[test]
    fn modica_on_front_and_zero_field() {
        let h = 1.0 / 64.0;
        let u = front(h, 20.0);
        let m = modica_deficit(&u, &canonical());
        assert!(m.interior_max_abs() <= 10.0 * h * h, "{}", m.interior_max_abs());
        let g = Grid::cube(2, 0.0, 1.0, 0.125).unwrap();
        let z = ScalarField::from_fn(&g, "0", Provenance::Analytic, |_| 0.0).unwrap();
        assert!(modica_deficit(&z, &canonical()).values().iter().all(|&v| v == -0.5));
    }

    #[test]
    fn gradient_floor_matches_first_integral() {
        let g = Grid::cube(2, -3.0, 3.0, 1.0 / 128.0).unwrap();
        let u = planar_solution(&profile(), &[1.0, 0.0], 0.05, &g).unwrap();
        let theta = gradient_floor(&u, 0.1).unwrap();
        // √(2W(0.9)) = (1 − 0.81)/√2; grid nodes sit slightly inside the band
        let exact = 0.19 / 2f64.sqrt();
        assert!(theta >= exact - 1e-4 && theta <= exact * 1.05, "{theta} vs {exact}");
        let wide = gradient_floor(&u, 0.99).unwrap();
        assert!((wide - 0.5f64.sqrt() * (1.0 - 1e-4)).abs() < 2e-3, "{wide}");
        assert!(gradient_floor(&u, 0.05).unwrap() <= theta);
        assert!(gradient_floor(&u, 0.9999999).is_err());
    }

    #[test]
    fn hessian_bound_empirical_constant() {
        let u = front(1.0 / 128.0, 20.0);
        let c = check_hessian_bound(&u, 0.9, &Band::symmetric(0.6), FLOOR).unwrap();
        let edge = u.band_nodes(&Band::symmetric(0.6)).iter().map(|&i| u.get(i).abs()).fold(0.0, f64::max);
        assert!((c.empirical - 2f64.sqrt() * edge).abs() < 0.01, "{}", c.empirical);
        assert!(c.pass);
        let c = check_hessian_bound(&u, 0.99, &Band::symmetric(0.9), FLOOR).unwrap();
        assert!(!c.pass && c.empirical > 1.25);
        let (lo, hi) = c.violation_range.unwrap();
        assert!(lo < -0.7 && hi > 0.7);

        let g = Grid::cube(2, 0.0, 1.0, 0.0625).unwrap();
        let lin = ScalarField::from_fn(&g, "l", Provenance::Analytic, |p| 0.2 * p[0] - 0.1 * p[1]).unwrap();
        let c = check_hessian_bound(&lin, 1e-6, &Band::symmetric(1.0), FLOOR).unwrap();
        assert!(c.pass && c.empirical < 1e-9);
    }

    #[test]
    fn q_bound_modes() {
        let u = front(1.0 / 64.0, 30.0);
        for mode in [QMode::Q, QMode::Qsq] {
            assert!(check_q_bound(&u, 1e-3, &Band::symmetric(0.9), mode, FLOOR).unwrap().pass);
            assert!(general_q_bound(&u, &canonical(), 1e-3, &Band::symmetric(0.9), mode, FLOOR).unwrap().pass);
        }
        // u = |x|²/2: Qsq = 1/|x|², at |x| = 1 the ratio to 1 − u² = 3/4 is 4/3
        let g = Grid::cube(2, -1.5, 1.5, 1.0 / 64.0).unwrap();
        let r = ScalarField::from_fn(&g, "r", Provenance::Analytic, |p| 0.5 * (p[0] * p[0] + p[1] * p[1])).unwrap();
        let band = Band::new(0.49, 0.51).unwrap();
        let c = check_q_bound(&r, 1.3, &band, QMode::Qsq, FLOOR).unwrap();
        assert!(!c.pass);
        assert!((c.empirical - 4.0 / 3.0).abs() < 0.05, "{}", c.empirical);
        assert!(check_q_bound(&r, 1.4, &band, QMode::Qsq, FLOOR).unwrap().pass);
    }

    #[test]
    fn general_q_bound_reduces_to_canonical() {
        let pot = canonical();
        let u: f64 = 0.3;
        let k = (pot.wp(u).powi(2) - 2.0 * pot.w(u) * pot.wpp(u)) / (2.0 * pot.w(u));
        assert!((k - (1.0 - u * u)).abs() < 1e-14);
        assert!(pot.wp(0.0).powi(2) - 2.0 * pot.w(0.0) * pot.wpp(0.0) == 0.5);
        // a potential whose precondition fails somewhere on the band
        let bumpy = DoubleWellPotential::factored("bumpy", vec![0.25, 0.0, 3.0, 0.0, -3.0]);
        let g = Grid::cube(1, -3.0, 3.0, 1.0 / 32.0).unwrap();
        let x = ScalarField::from_fn(&g, "x", Provenance::Analytic, |p| (p[0] / 3.5).tanh()).unwrap();
        assert!(general_q_bound(&x, &bumpy, 0.5, &Band::symmetric(0.9), QMode::Qsq, FLOOR).is_err());
    }

    #[test]
    fn p_function_on_front() {
        let h = 1.0 / 64.0;
        let u = front(h, 20.0);
        let p = p_function(&u, &canonical(), PVariant::HessianBound { c1: 0.5 }).unwrap();
        let g = u.grid();
        let i0 = (0..g.len()).min_by(|&a, &b| u.get(a).abs().total_cmp(&u.get(b).abs())).unwrap();
        let v = u.get(i0);
        assert!((p.get(i0) - (0.25 * (1.0 - v * v).powi(2) - 0.5 * (1.0 - v * v).powi(2))).abs() < 1e-3);
        for c in [0.1, 0.5, 0.9] {
            let p = p_function(&u, &canonical(), PVariant::QBound { c2: 1.0 - c }).unwrap();
            assert!(g.interior().all(|i| p.get(i) <= 10.0 * h * h));
        }
        let one = ScalarField::from_fn(g, "1", Provenance::Analytic, |_| 1.0).unwrap();
        let p1 = p_function(&one, &canonical(), PVariant::QBound { c2: 0.5 }).unwrap();
        assert!(p1.values().iter().all(|&v| v == 0.0));
        let s = check_subharmonic(&p1, &vec![true; g.len()], 1e-12).unwrap();
        assert!(s.pass && s.min_laplacian == 0.0);
    }

    #[test]
    fn subharmonic_where_the_argument_applies() {
        // C₁ < 2/5: the Hessian bound holds on |u| ≤ C₁/√2 and ΔP ≥ 0 there
        let h = 1.0 / 128.0;
        let u = front(h, 20.0);
        let c1 = 0.35;
        let hb = check_hessian_bound(&u, c1, &Band::symmetric(0.9), FLOOR).unwrap();
        let p = p_function(&u, &canonical(), PVariant::HessianBound { c1 }).unwrap();
        let s = check_subharmonic(&p, &hb.mask(u.grid().len()), 10.0 * h).unwrap();
        assert!(s.pass, "{}", s.min_laplacian);

        // C₁ ≥ 2/5 on the planar front: ΔP = (c₀ − 1)(1 − u²)²(5u² − 1) < 0 for
        // |u| > 1/√5 inside the admissible band; the check reports it
        let c1 = 0.85;
        let hb = check_hessian_bound(&u, c1, &Band::symmetric(0.6), FLOOR).unwrap();
        assert!(hb.pass);
        let p = p_function(&u, &canonical(), PVariant::HessianBound { c1 }).unwrap();
        let s = check_subharmonic(&p, &hb.mask(u.grid().len()), 10.0 * h).unwrap();
        let expect = (0.15 - 1.0) * (1.0f64 - 0.36).powi(2) * (5.0 * 0.36 - 1.0);
        assert!(!s.pass);
        assert!((s.min_laplacian - expect).abs() < 0.02, "{} vs {expect}", s.min_laplacian);
    }

    #[test]
    fn operator_identity_refines() {
        let pot = canonical();
        let mut prev = None;
        for h in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
            let u = front(h, 20.0);
            let l = elliptic_operator_l(&u, &pot, 0.5, FLOOR).unwrap();
            let r = l.residual_stats().unwrap();
            assert!(l.c.values().iter().all(|&c| c <= 0.0));
            let q = check_q_bound(&u, 0.5, &Band::symmetric(1.0), QMode::Qsq, FLOOR).unwrap();
            for &i in &q.holds {
                if l.nodes.contains(&i) {
                    assert!(l.j.get(i) >= -10.0 * h);
                }
            }
            if let Some(p) = prev {
                assert!(r.max < p, "{} !< {p}", r.max);
            }
            prev = Some(r.max);
        }
        assert!(prev.unwrap() <= 1e-2);
    }

    #[test]
    fn identities_on_front_and_non_solution() {
        let pot = canonical();
        let band = Band::symmetric(0.9);
        let (a1, b1) = identity_418(&front(1.0 / 32.0, 20.0), &pot, 0.5, &band, FLOOR).unwrap();
        let (a2, b2) = identity_418(&front(1.0 / 64.0, 20.0), &pot, 0.5, &band, FLOOR).unwrap();
        assert!(a2.max < a1.max / 3.0 && a2.max < 1e-4, "{a1:?} {a2:?}");
        // the discrete chain rule is only second-order accurate
        assert!(b2.max < b1.max / 3.0 && b2.max < 1e-4, "{b1:?} {b2:?}");

        // both identities are PDE-free
        let smooth = |h: f64| {
            let g = Grid::cube(2, -1.0, 1.0, h).unwrap();
            ScalarField::from_fn(&g, "s", Provenance::Analytic, |p| {
                0.4 * (1.3 * p[0] + 0.7 * p[1]).sin() + 0.1 * p[0] * p[1]
            })
            .unwrap()
        };
        let (a1, b1) = identity_418(&smooth(1.0 / 32.0), &pot, 0.5, &band, 0.1).unwrap();
        let (a2, b2) = identity_418(&smooth(1.0 / 64.0), &pot, 0.5, &band, 0.1).unwrap();
        assert!(a2.max < a1.max / 3.0 && a2.max < 1e-3, "{a1:?} {a2:?}");
        assert!(b2.max < b1.max / 3.0 && b2.max < 1e-2, "{b1:?} {b2:?}");
        let s = smooth(1.0 / 64.0);
        // while the operator identity needs the equation
        let l = elliptic_operator_l(&s, &pot, 0.5, FLOOR).unwrap();
        assert!(l.residual_stats().unwrap().max > 0.1);
    }

    #[test]
    fn stability_form_cases() {
        let u = front(1.0 / 32.0, 20.0);
        let g = u.grid();
        let zero = ScalarField::from_fn(g, "0", Provenance::Analytic, |_| 0.0).unwrap();
        assert_eq!(stability_form(&u, &zero, FLOOR).unwrap(), (0.0, 0.0, 0.0));
        let bump = ScalarField::from_fn(g, "xi", Provenance::Analytic, |p| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            if r2 < 1.0 { (1.0 - r2).powi(3) } else { 0.0 }
        })
        .unwrap();
        let (lhs, rhs, def) = stability_form(&u, &bump, FLOOR).unwrap();
        let q = compute_qsq(&u, FLOOR);
        let qmax = g.interior_with_margin(STAT_MARGIN).map(|i| q.get(i).abs()).fold(0.0, f64::max);
        assert!(qmax < 1e-6, "{qmax}");
        assert!(lhs > 0.05 && rhs.abs() < 1e-6 && def > 0.05);
        let edge = ScalarField::from_fn(g, "e", Provenance::Analytic, |p| p[0] + 2.0).unwrap();
        assert!(matches!(stability_form(&u, &edge, FLOOR), Err(Error::Unsupported(_))));
    }
}
