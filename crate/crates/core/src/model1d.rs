//! Double-well potentials, the one-dimensional heteroclinic profile and the
//! planar solutions `u(x) = g(x·a + b)` built from it.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::{norm, to_point, Grid, Provenance, ScalarField};
use crate::interp::{gauss4, hermite, locate, monotone_slopes};

/// Profiles stop where `|g| = 1 − WELL_GAP`.
pub const WELL_GAP: f64 = 1e-10;

/// A double-well potential with wells at ±1.
///
/// Stored as polynomial coefficients (ascending powers). When the polynomial
/// is divisible by `(1 − u²)²` the quotient `R` is kept as well and used for
/// evaluation, which keeps `W` and its ratio to `(1 − u²)²` accurate next to
/// the wells.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleWellPotential {
    name: String,
    coeffs: Vec<f64>,
    factor: Option<Vec<f64>>,
}

fn poly(c: &[f64], x: f64) -> (f64, f64, f64) {
    let (mut p, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for &a in c.iter().rev() {
        d2 = d2 * x + 2.0 * d1;
        d1 = d1 * x + p;
        p = p * x + a;
    }
    (p, d1, d2)
}

fn trim(mut c: Vec<f64>) -> Vec<f64> {
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    c
}

/// Quotient of `c` by `(1 − u²)²` when the remainder vanishes.
fn divide_by_wells(c: &[f64]) -> Option<Vec<f64>> {
    let scale = c.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if c.len() < 5 {
        return c.iter().all(|v| v.abs() <= 1e-12 * scale).then(|| vec![0.0]);
    }
    // descending long division by u⁴ − 2u² + 1
    let mut rem: Vec<f64> = c.iter().rev().copied().collect();
    let divisor = [1.0, 0.0, -2.0, 0.0, 1.0];
    let qlen = rem.len() - 4;
    let mut q = vec![0.0; qlen];
    for i in 0..qlen {
        let lead = rem[i];
        q[i] = lead;
        for (k, d) in divisor.iter().enumerate() {
            rem[i + k] -= lead * d;
        }
    }
    if rem[qlen..].iter().all(|v| v.abs() <= 1e-12 * scale) {
        q.reverse();
        Some(q)
    } else {
        None
    }
}

impl DoubleWellPotential {
    /// `W(u) = (1 − u²)²/4`.
    pub fn canonical() -> Self {
        Self::factored("canonical", vec![0.25])
    }

    /// `W(u) = (1 − u²)² R(u)` with `R` given by ascending coefficients.
    pub fn factored(name: &str, r: Vec<f64>) -> Self {
        let r = trim(r);
        let mut coeffs = vec![0.0; r.len() + 4];
        for (i, &a) in r.iter().enumerate() {
            coeffs[i] += a;
            coeffs[i + 2] -= 2.0 * a;
            coeffs[i + 4] += a;
        }
        Self { name: name.to_string(), coeffs: trim(coeffs), factor: Some(r) }
    }

    /// `W(u) = Σ c_k u^k`.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let coeffs = trim(if coeffs.is_empty() { vec![0.0] } else { coeffs });
        let factor = divide_by_wells(&coeffs);
        Self { name: "polynomial".into(), coeffs, factor }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "canonical" => Ok(Self::canonical()),
            other => Err(Error::Config(format!("unknown potential `{other}`"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_canonical(&self) -> bool {
        self.factor.as_deref() == Some(&[0.25][..])
    }

    fn eval(&self, u: f64) -> (f64, f64, f64) {
        match &self.factor {
            Some(r) => {
                let (rv, r1, r2) = poly(r, u);
                let q = (1.0 - u) * (1.0 + u);
                (
                    q * q * rv,
                    -4.0 * u * q * rv + q * q * r1,
                    -4.0 * (1.0 - 3.0 * u * u) * rv - 8.0 * u * q * r1 + q * q * r2,
                )
            }
            None => poly(&self.coeffs, u),
        }
    }

    pub fn w(&self, u: f64) -> f64 {
        self.eval(u).0
    }

    pub fn wp(&self, u: f64) -> f64 {
        self.eval(u).1
    }

    pub fn wpp(&self, u: f64) -> f64 {
        self.eval(u).2
    }

    /// `√(2W(s)) / (1 − s²)`, the profile slope divided by `1 − g²`.
    pub(crate) fn ratio(&self, s: f64) -> f64 {
        match &self.factor {
            Some(r) => (2.0 * poly(r, s).0).sqrt(),
            None => (2.0 * self.w(s)).sqrt() / ((1.0 - s) * (1.0 + s)),
        }
    }
}

/// Outcome of one clause of the hypothesis check.
#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub id: &'static str,
    pub pass: bool,
    pub detail: String,
    pub points: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    pub clauses: Vec<Clause>,
}

impl HypothesisReport {
    pub fn pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    /// The first failing clause as an error.
    pub fn require(&self) -> Result<()> {
        match self.clauses.iter().find(|c| !c.pass) {
            None => Ok(()),
            Some(c) => Err(Error::Hypothesis { clause: c.id.to_string(), points: c.points.clone() }),
        }
    }
}

const MAX_LISTED: usize = 16;

/// Evaluates every clause of the standing hypothesis on `samples + 1`
/// uniform points of `[−1, 1]`.
pub fn check_hypotheses_h(pot: &DoubleWellPotential, samples: usize) -> Result<HypothesisReport> {
    if samples < 100 {
        return Err(Error::Domain(format!("need at least 100 samples, got {samples}")));
    }
    let du = 2.0 / samples as f64;
    let interior: Vec<f64> = (1..samples).map(|k| -1.0 + k as f64 * du).collect();
    let mut clauses = Vec::new();

    let bad: Vec<f64> = interior.iter().copied().filter(|&u| !(pot.w(u) > 0.0)).collect();
    clauses.push(Clause {
        id: "W_positive",
        pass: bad.is_empty(),
        detail: format!("{} interior samples with W <= 0", bad.len()),
        points: bad.into_iter().take(MAX_LISTED).collect(),
    });

    let wells = [-1.0, 1.0];
    let mut well_clause = |id: &'static str, f: &dyn Fn(f64) -> f64, target: f64, tol: f64| {
        let bad: Vec<f64> = wells.iter().copied().filter(|&u| !((f(u) - target).abs() <= tol)).collect();
        let detail = format!("values {:?}, expected {target}", wells.map(f));
        clauses.push(Clause { id, pass: bad.is_empty(), detail, points: bad });
    };
    well_clause("W_zero_at_wells", &|u| pot.w(u), 0.0, 1e-12);
    well_clause("Wp_zero_at_wells", &|u| pot.wp(u), 0.0, 1e-10);
    well_clause("Wpp_two_at_wells", &|u| pot.wpp(u), 2.0, 1e-8);

    // Sign changes of W′ between consecutive nonzero samples.
    let mut changes = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for &u in &interior {
        let v = pot.wp(u);
        if v == 0.0 {
            continue;
        }
        if let Some((lu, lv)) = last {
            if lv.signum() != v.signum() {
                changes.push(0.5 * (lu + u));
            }
        }
        last = Some((u, v));
    }
    let centred = changes.len() == 1 && changes[0].abs() <= 2.0 * du;
    clauses.push(Clause {
        id: "Wp_single_critical",
        pass: centred,
        detail: format!("{} sign changes of W'", changes.len()),
        points: changes.into_iter().take(MAX_LISTED).collect(),
    });
    Ok(HypothesisReport { clauses })
}

/// `F(u) = W′(u)/u`, continued by `W″(0)` at the origin.
pub fn hadamard_factor(pot: &DoubleWellPotential, u: f64) -> Result<f64> {
    if !(u.abs() < 1.0) {
        return Err(Error::Domain(format!("hadamard factor needs |u| < 1, got {u}")));
    }
    Ok(if u == 0.0 { pot.wpp(0.0) } else { pot.wp(u) / u })
}

/// Tabulated heteroclinic `g″ = W′(g)`, `g(0) = 0`, on a uniform t-grid.
#[derive(Clone, Debug)]
pub struct HeteroclinicProfile {
    pub t_grid: Vec<f64>,
    pub g_values: Vec<f64>,
    pub gp_values: Vec<f64>,
    slopes: Vec<f64>,
    step: f64,
    potential: DoubleWellPotential,
}

/// Cumulative `t(σ) = ∫₀^σ dσ′ / ratio(tanh σ′)` along one direction.
fn time_along(pot: &DoubleWellPotential, sign: f64, n: usize, dsig: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let inv = |s: f64| 1.0 / pot.ratio(s.tanh());
    let mut sig = vec![0.0];
    let mut t = vec![0.0];
    for k in 0..n {
        let a = sign * k as f64 * dsig;
        let b = sign * (k + 1) as f64 * dsig;
        // the endpoint check catches zeros of W between Gauss nodes
        let piece = gauss4(a, b, inv);
        let end = inv(b);
        if !(piece.is_finite() && end.is_finite() && end > 0.0) {
            return Err(Error::Quadrature(format!("W vanishes or is negative near u = {}", b.tanh())));
        }
        sig.push(b);
        t.push(t[k] + piece);
    }
    Ok((sig, t))
}

/// Solves for the profile from the first integral `g′ = √(2W(g))`.
///
/// `t(g)` is integrated on the mesh `g = tanh σ` with uniform σ spacing (so
/// that the g-spacing shrinks like `1 − g²` towards the wells) up to
/// `|g| = 1 − WELL_GAP`, then inverted onto `t_j = j·step` with cubic
/// Hermite interpolation.
pub fn solve_profile(pot: &DoubleWellPotential, t_max: f64, step: f64) -> Result<HeteroclinicProfile> {
    if !(step > 0.0 && step <= 1e-2) {
        return Err(Error::Domain(format!("profile step must lie in (0, 0.01], got {step}")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Domain(format!("t_max must be positive, got {t_max}")));
    }
    check_hypotheses_h(pot, 2000)?.require()?;

    let sig_end = (1.0 - WELL_GAP).atanh();
    let dsig = (0.25 * step).min(1e-3);
    let n = (sig_end / dsig).ceil() as usize;
    let dsig = sig_end / n as f64;
    let (sig_neg, t_neg) = time_along(pot, -1.0, n, dsig)?;
    let (sig_pos, t_pos) = time_along(pot, 1.0, n, dsig)?;
    let sig: Vec<f64> = sig_neg.iter().rev().chain(sig_pos.iter().skip(1)).copied().collect();
    let ts: Vec<f64> = t_neg.iter().rev().chain(t_pos.iter().skip(1)).copied().collect();
    let dsig_dt: Vec<f64> = sig.iter().map(|s| pot.ratio(s.tanh())).collect();

    let nmax = (t_max / step).floor() as i64;
    let j_lo = (-nmax).max((ts[0] / step).ceil() as i64);
    let j_hi = nmax.min((ts[ts.len() - 1] / step).floor() as i64);
    let mut t_grid = Vec::with_capacity((j_hi - j_lo + 1) as usize);
    let mut g_values = Vec::with_capacity(t_grid.capacity());
    let mut gp_values = Vec::with_capacity(t_grid.capacity());
    for j in j_lo..=j_hi {
        let t = j as f64 * step;
        let k = locate(&ts, t).ok_or_else(|| Error::Quadrature(format!("t = {t} outside quadrature range")))?;
        let s = hermite(ts[k], ts[k + 1], sig[k], sig[k + 1], dsig_dt[k], dsig_dt[k + 1], t);
        let g = s.tanh();
        let sech = 1.0 / s.cosh();
        t_grid.push(t);
        g_values.push(g);
        gp_values.push(pot.ratio(g) * sech * sech);
    }
    let slopes = monotone_slopes(&t_grid, &g_values, &gp_values);
    let prof = HeteroclinicProfile { t_grid, g_values, gp_values, slopes, step, potential: pot.clone() };

    if let Some(k) = prof.g_values.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Quadrature(format!("profile not increasing at t = {}", prof.t_grid[k])));
    }
    let tol = 10.0 * step * step;
    let (eq, ode) = (prof.equipartition_residual(), prof.ode_residual());
    if eq > tol || ode > tol {
        return Err(Error::Quadrature(format!(
            "profile residuals {eq:e} (equipartition) / {ode:e} (ODE) exceed {tol:e}"
        )));
    }
    Ok(prof)
}

impl HeteroclinicProfile {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn potential(&self) -> &DoubleWellPotential {
        &self.potential
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t_grid[0], self.t_grid[self.t_grid.len() - 1])
    }

    /// `g(t)`, or `None` outside the tabulated range.
    pub fn try_g(&self, t: f64) -> Option<f64> {
        let k = locate(&self.t_grid, t)?;
        let x = &self.t_grid;
        Some(hermite(x[k], x[k + 1], self.g_values[k], self.g_values[k + 1], self.slopes[k], self.slopes[k + 1], t))
    }

    /// `g(t)` with ±1 beyond the table.
    pub fn g(&self, t: f64) -> f64 {
        self.try_g(t).unwrap_or(if t > 0.0 { 1.0 } else { -1.0 })
    }

    /// `g′(t) = √(2W(g(t)))`.
    pub fn gp(&self, t: f64) -> f64 {
        let g = self.g(t);
        let q = (1.0 - g) * (1.0 + g);
        self.potential.ratio(g) * q
    }

    /// Inverse `g⁻¹(v)` by bisection on the table, for `v` inside its range.
    pub fn inverse(&self, v: f64) -> Option<f64> {
        let (a, b) = self.t_range();
        if !(v >= self.g(a) && v <= self.g(b)) {
            return None;
        }
        let (mut lo, mut hi) = (a, b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.g(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// `max |g′² − 2W(g)|` over the nodes.
    pub fn equipartition_residual(&self) -> f64 {
        self.g_values
            .iter()
            .zip(&self.gp_values)
            .map(|(&g, &gp)| (gp * gp - 2.0 * self.potential.w(g)).abs())
            .fold(0.0, f64::max)
    }

    /// `max |δ²g/step² − W′(g)|` over interior nodes.
    pub fn ode_residual(&self) -> f64 {
        let g = &self.g_values;
        let h2 = self.step * self.step;
        (1..g.len().saturating_sub(1))
            .map(|j| ((g[j + 1] - 2.0 * g[j] + g[j - 1]) / h2 - self.potential.wp(g[j])).abs())
            .fold(0.0, f64::max)
    }

    /// Two-column CSV `t,g`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,g\n");
        for (t, g) in self.t_grid.iter().zip(&self.g_values) {
            let _ = writeln!(s, "{t:.16e},{g:.16e}");
        }
        s
    }
}

/// Samples `g(x·a + b)` on `grid`. Nodes whose argument leaves the profile
/// table get the well value and are counted in the field notes.
pub fn planar_solution(
    profile: &HeteroclinicProfile,
    direction: &[f64],
    offset: f64,
    grid: &Grid,
) -> Result<ScalarField> {
    if direction.len() != grid.dim() {
        return Err(Error::Domain(format!(
            "direction has {} components for a {}-dimensional grid",
            direction.len(),
            grid.dim()
        )));
    }
    let a = to_point(direction);
    if (norm(&a) - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("direction must be a unit vector, |a| = {}", norm(&a))));
    }
    let mut clamped = 0usize;
    let values = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            let t = p[0] * a[0] + p[1] * a[1] + p[2] * a[2] + offset;
            profile.try_g(t).unwrap_or_else(|| {
                clamped += 1;
                t.signum()
            })
        })
        .collect();
    let mut u = ScalarField::new(grid.clone(), values, "u", Provenance::Analytic)?;
    u.notes.push(format!("planar direction {direction:?} offset {offset}"));
    if clamped > 0 {
        u.notes.push(format!("clamped {clamped} nodes to the wells"));
    }
    Ok(u)
}
