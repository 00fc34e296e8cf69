//! Monotone diffeomorphisms `u = φ(w)`, the transformed field `w = φ⁻¹(u)`
//! and the sign certificate for `Δw`.
//!
//! Every table is parametrized by an internal variable `s`: `φ = s` for the
//! unbounded laws and `φ = tanh s` for the laws with `|φ| < 1`. Writing
//! `L = −ln φ′` as a function of `φ`, the pair `(L, t)` obeys
//!
//! ```text
//! dL/ds = ℓ(φ) dφ/ds,    dt/ds = e^L dφ/ds
//! ```
//!
//! which RK4 integrates outward from `s = 0`. The `t`-grid of the result is
//! nonuniform; it is dense where `φ′` is large and sparse in the tails.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::{gradient, laplacian, Point, ResidualStats, ScalarField};
use crate::interp::{gauss4, hermite, hermite_deriv, locate};
use crate::model1d::DoubleWellPotential;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffeoKind {
    /// `φ′ = exp(−φ²/(2θ₀²))`
    Eq311,
    /// `φ′ = (1 − φ²)^{1/c₀}`
    Eq414,
    /// `−φ″ = φ(φ′)²/(θ₀² h)` with `φ′(0) = 1`
    Remark32,
    /// `φ′ = exp(−B(φ))`, `B′ = φ(1 − φ²)/A(φ)`
    Remark42,
}

impl DiffeoKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiffeoKind::Eq311 => "eq311",
            DiffeoKind::Eq414 => "eq414",
            DiffeoKind::Remark32 => "remark32",
            DiffeoKind::Remark42 => "remark42",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "eq311" => Ok(DiffeoKind::Eq311),
            "eq414" => Ok(DiffeoKind::Eq414),
            "remark32" => Ok(DiffeoKind::Remark32),
            "remark42" => Ok(DiffeoKind::Remark42),
            other => Err(Error::Config(format!("unknown diffeomorphism kind `{other}`"))),
        }
    }

    /// Kinds whose sign argument is restricted to `{|u| < 1 − δ}`.
    pub fn band_limited(&self) -> bool {
        matches!(self, DiffeoKind::Eq311 | DiffeoKind::Remark32)
    }
}

/// `1/h` for the general-potential construction.
#[derive(Clone, Debug, PartialEq)]
pub enum InverseH {
    /// `1/h ≡ v`
    Constant(f64),
    /// `1/h = −F(φ) + m`, F the Hadamard factor of W
    HadamardMargin(f64),
}

impl InverseH {
    /// `const:v` or `hadamard:m`.
    pub fn parse(s: &str) -> Result<Self> {
        let (k, v) = s.split_once(':').ok_or_else(|| Error::Config(format!("bad h descriptor `{s}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("bad h descriptor `{s}`")))?;
        match k {
            "const" => Ok(InverseH::Constant(v)),
            "hadamard" => Ok(InverseH::HadamardMargin(v)),
            _ => Err(Error::Config(format!("bad h descriptor `{s}`"))),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InverseH::Constant(v) => format!("const:{v}"),
            InverseH::HadamardMargin(m) => format!("hadamard:{m}"),
        }
    }

    fn value(&self, pot: &DoubleWellPotential, phi: f64) -> f64 {
        match self {
            InverseH::Constant(v) => *v,
            InverseH::HadamardMargin(m) => m - factor(pot, phi),
        }
    }
}

fn factor(pot: &DoubleWellPotential, u: f64) -> f64 {
    if u == 0.0 {
        pot.wpp(0.0)
    } else {
        pot.wp(u) / u
    }
}

/// The coefficient A of the Q-bound construction, given through
/// `A(u)/(1 − u²)²`, which has to stay in `(0, 1/2)`.
#[derive(Clone, Debug, PartialEq)]
pub enum ADescriptor {
    /// `A = (c/2)(1 − u²)²`
    Scaled(f64),
    /// `A = (c/2)(1 − u²)²(1 + k u²)/(1 + k)`
    Tilted { c: f64, k: f64 },
}

impl ADescriptor {
    /// `scaled:c` or `tilted:c,k`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad A descriptor `{s}`"));
        let (k, v) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = v.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        match (k, nums.as_slice()) {
            ("scaled", [c]) => Ok(ADescriptor::Scaled(*c)),
            ("tilted", [c, k]) => Ok(ADescriptor::Tilted { c: *c, k: *k }),
            _ => Err(bad()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ADescriptor::Scaled(c) => format!("scaled:{c}"),
            ADescriptor::Tilted { c, k } => format!("tilted:{c},{k}"),
        }
    }

    /// `A(u)/(1 − u²)²`.
    pub fn ratio(&self, u: f64) -> f64 {
        match *self {
            ADescriptor::Scaled(c) => 0.5 * c,
            ADescriptor::Tilted { c, k } => 0.5 * c * (1.0 + k * u * u) / (1.0 + k),
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.ratio(u) * ((1.0 - u) * (1.0 + u)).powi(2)
    }
}

#[derive(Clone, Debug)]
enum Law {
    Gauss { theta0: f64 },
    Power { c0: f64 },
    General { theta0: f64, inv_h: InverseH, pot: DoubleWellPotential },
    Corridor { a: ADescriptor },
}

fn ln_cosh(s: f64) -> f64 {
    let a = s.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Law {
    fn bounded(&self) -> bool {
        matches!(self, Law::Power { .. } | Law::Corridor { .. })
    }

    fn phi(&self, s: f64) -> f64 {
        if self.bounded() {
            s.tanh()
        } else {
            s
        }
    }

    fn s_of(&self, phi: f64) -> Option<f64> {
        if self.bounded() {
            (phi.abs() < 1.0).then(|| phi.atanh())
        } else {
            Some(phi)
        }
    }

    /// `ln(dφ/ds)`.
    fn ln_phi_s(&self, s: f64) -> f64 {
        if self.bounded() {
            -2.0 * ln_cosh(s)
        } else {
            0.0
        }
    }

    /// `ℓ(φ) = dL/dφ = −φ″/φ′²`.
    fn ell(&self, phi: f64) -> f64 {
        match self {
            Law::Gauss { theta0 } => phi / (theta0 * theta0),
            Law::Power { c0 } => 2.0 * phi / (c0 * (1.0 - phi) * (1.0 + phi)),
            Law::General { theta0, inv_h, pot } => phi * inv_h.value(pot, phi) / (theta0 * theta0),
            Law::Corridor { a } => phi / (a.ratio(phi) * (1.0 - phi) * (1.0 + phi)),
        }
    }

    /// `dL/ds`, written so the bounded laws stay finite for large `|s|`.
    fn dl_ds(&self, s: f64) -> f64 {
        match self {
            Law::Gauss { .. } | Law::General { .. } => self.ell(s),
            Law::Power { c0 } => 2.0 * s.tanh() / c0,
            Law::Corridor { a } => {
                let p = s.tanh();
                p / a.ratio(p)
            }
        }
    }

    fn closed_l(&self, s: f64) -> Option<f64> {
        match self {
            Law::Gauss { theta0 } => Some(s * s / (2.0 * theta0 * theta0)),
            Law::Power { c0 } => Some(2.0 * ln_cosh(s) / c0),
            _ => None,
        }
    }

    fn dt_ds(&self, s: f64, l: f64) -> f64 {
        (l + self.ln_phi_s(s)).exp()
    }
}

/// Tabulated `t ↦ φ(t)` with `φ(0) = 0`, `φ′(0) = 1`.
#[derive(Clone, Debug)]
pub struct Diffeomorphism {
    pub t_grid: Vec<f64>,
    pub phi_values: Vec<f64>,
    pub phi_prime_values: Vec<f64>,
    pub kind: DiffeoKind,
    pub params: Vec<(String, String)>,
    law: Law,
    s_grid: Vec<f64>,
    l_values: Vec<f64>,
    dl_values: Vec<f64>,
    dt_values: Vec<f64>,
    step: f64,
}

const MAX_STEP: f64 = 0.05;
/// Bounded laws never integrate past this `|s|`; `tanh` is 1 in double precision there.
const S_BOUNDED: f64 = 19.0;

fn check_step(step: f64, t_max: f64) -> Result<()> {
    if !(step > 0.0 && step <= MAX_STEP) {
        return Err(Error::Diffeo(format!(
            "integration step {step} outside (0, {MAX_STEP}]; use a step of at most {MAX_STEP}"
        )));
    }
    if !(t_max > 0.0) {
        return Err(Error::Diffeo(format!("t_max must be positive, got {t_max}")));
    }
    Ok(())
}

fn check_theta0(theta0: f64) -> Result<()> {
    if !(theta0 > 0.0 && theta0 < std::f64::consts::FRAC_1_SQRT_2) {
        return Err(Error::Domain(format!("theta0 must lie in (0, 1/sqrt 2), got {theta0}")));
    }
    Ok(())
}

/// `φ′ = exp(−φ²/(2θ₀²))`. The table stops at `|φ| = 1` or `|t| = t_max`.
pub fn build_phi_311(theta0: f64, t_max: f64, step: f64) -> Result<Diffeomorphism> {
    check_theta0(theta0)?;
    check_step(step, t_max)?;
    Diffeomorphism::integrate(
        Law::Gauss { theta0 },
        DiffeoKind::Eq311,
        vec![("theta0".into(), format!("{theta0:?}"))],
        t_max,
        step,
    )
}

/// `φ′ = (1 − φ²)^{1/c₀}`.
pub fn build_phi_414(c0: f64, t_max: f64, step: f64) -> Result<Diffeomorphism> {
    if !(c0 > 0.0 && c0 <= 1.0) {
        return Err(Error::Domain(format!("c0 must lie in (0, 1], got {c0}")));
    }
    check_step(step, t_max)?;
    Diffeomorphism::integrate(Law::Power { c0 }, DiffeoKind::Eq414, vec![("c0".into(), format!("{c0:?}"))], t_max, step)
}

/// `−φ″ = φ(φ′)²/(θ₀² h(φ))`, `φ(0) = 0`, `φ′(0) = 1`. Admissibility
/// `1/h ≥ −F` is checked on `|φ| ≤ band`.
pub fn build_phi_remark32(
    pot: &DoubleWellPotential,
    theta0: f64,
    inv_h: &InverseH,
    band: f64,
    t_max: f64,
    step: f64,
) -> Result<Diffeomorphism> {
    check_theta0(theta0)?;
    check_step(step, t_max)?;
    if !(band > 0.0 && band < 1.0) {
        return Err(Error::Domain(format!("admissibility band must lie in (0, 1), got {band}")));
    }
    const SAMPLES: usize = 2000;
    for k in 0..=SAMPLES {
        let u = -band + 2.0 * band * k as f64 / SAMPLES as f64;
        let lhs = inv_h.value(pot, u);
        let rhs = -factor(pot, u);
        if lhs < rhs - 1e-12 {
            return Err(Error::Diffeo(format!(
                "inadmissible h: 1/h = {lhs} < -F = {rhs} at t = {u} for potential {}",
                pot.name()
            )));
        }
    }
    Diffeomorphism::integrate(
        Law::General { theta0, inv_h: inv_h.clone(), pot: pot.clone() },
        DiffeoKind::Remark32,
        vec![
            ("theta0".into(), format!("{theta0:?}")),
            ("inv_h".into(), inv_h.describe()),
            ("potential".into(), pot.name().to_string()),
        ],
        t_max,
        step,
    )
}

/// `φ′ = exp(−B(φ))`, `B′ = φ(1 − φ²)/A(φ)`, `B(0) = 0`.
pub fn build_phi_remark42(a: &ADescriptor, t_max: f64, step: f64) -> Result<Diffeomorphism> {
    check_step(step, t_max)?;
    const SAMPLES: usize = 4000;
    for k in 0..=SAMPLES {
        let u = -1.0 + 1e-6 + (2.0 - 2e-6) * k as f64 / SAMPLES as f64;
        let r = a.ratio(u);
        if !(r > 0.0 && r < 0.5) {
            return Err(Error::Diffeo(format!(
                "A leaves its corridor 0 < A < (1-u^2)^2/2 at u = {u} (A/(1-u^2)^2 = {r})"
            )));
        }
    }
    Diffeomorphism::integrate(
        Law::Corridor { a: a.clone() },
        DiffeoKind::Remark42,
        vec![("A".into(), a.describe())],
        t_max,
        step,
    )
}

impl Diffeomorphism {
    fn integrate(law: Law, kind: DiffeoKind, params: Vec<(String, String)>, t_max: f64, step: f64) -> Result<Self> {
        let (s_end, ds) = if law.bounded() {
            (S_BOUNDED, step)
        } else {
            let n = (1.0 / step).ceil();
            (1.0, 1.0 / n)
        };
        let half = |sign: f64| -> Vec<(f64, f64, f64)> {
            let mut out = vec![(0.0, 0.0, 0.0)];
            let (mut s, mut l, mut t) = (0.0f64, 0.0f64, 0.0f64);
            let h = sign * ds;
            let mut j = 0usize;
            let f = |s: f64, l: f64| -> (f64, f64) {
                let l = law.closed_l(s).unwrap_or(l);
                (law.dl_ds(s), law.dt_ds(s, l))
            };
            loop {
                let next = sign * (j + 1) as f64 * ds;
                if next.abs() > s_end + 1e-12 {
                    break;
                }
                let (k1l, k1t) = f(s, l);
                let (k2l, k2t) = f(s + 0.5 * h, l + 0.5 * h * k1l);
                let (k3l, k3t) = f(s + 0.5 * h, l + 0.5 * h * k2l);
                let (k4l, k4t) = f(next, l + h * k3l);
                let nl = law.closed_l(next).unwrap_or(l + h / 6.0 * (k1l + 2.0 * k2l + 2.0 * k3l + k4l));
                let nt = t + h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
                let p_now = law.phi(s);
                let p_next = law.phi(next);
                if !nt.is_finite() || !nl.is_finite() || nt.abs() > t_max || p_next.abs() >= 1.0 && law.bounded()
                {
                    break;
                }
                if (p_next - p_now) * sign <= 0.0 {
                    break;
                }
                s = next;
                j += 1;
                l = nl;
                t = nt;
                out.push((s, l, t));
            }
            out
        };
        let fwd = half(1.0);
        let bwd = half(-1.0);
        let rows: Vec<(f64, f64, f64)> = bwd.iter().rev().chain(fwd.iter().skip(1)).copied().collect();
        if rows.len() < 3 {
            return Err(Error::Diffeo("table is empty; t_max or step too small".into()));
        }
        let mut d = Diffeomorphism {
            t_grid: Vec::with_capacity(rows.len()),
            phi_values: Vec::with_capacity(rows.len()),
            phi_prime_values: Vec::with_capacity(rows.len()),
            kind,
            params,
            s_grid: Vec::with_capacity(rows.len()),
            l_values: Vec::with_capacity(rows.len()),
            dl_values: Vec::with_capacity(rows.len()),
            dt_values: Vec::with_capacity(rows.len()),
            step: ds,
            law,
        };
        for (s, l, t) in rows {
            d.s_grid.push(s);
            d.t_grid.push(t);
            d.phi_values.push(d.law.phi(s));
            d.phi_prime_values.push((-l).exp());
            d.l_values.push(l);
            d.dl_values.push(d.law.dl_ds(s));
            d.dt_values.push(d.law.dt_ds(s, l));
        }
        if d.t_grid.windows(2).any(|w| w[1] <= w[0]) || d.phi_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Diffeo("table lost strict monotonicity; reduce the step".into()));
        }
        Ok(d)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t_grid[0], self.t_grid[self.len() - 1])
    }

    pub fn phi_range(&self) -> (f64, f64) {
        (self.phi_values[0], self.phi_values[self.len() - 1])
    }

    fn t_of_s(&self, s: f64) -> Option<f64> {
        let k = locate(&self.s_grid, s)?;
        let (s0, s1) = (self.s_grid[k], self.s_grid[k + 1]);
        Some(hermite(s0, s1, self.t_grid[k], self.t_grid[k + 1], self.dt_values[k], self.dt_values[k + 1], s))
    }

    fn l_of_s(&self, s: f64) -> Option<f64> {
        if let Some(l) = self.law.closed_l(s) {
            return locate(&self.s_grid, s).map(|_| l);
        }
        let k = locate(&self.s_grid, s)?;
        let (s0, s1) = (self.s_grid[k], self.s_grid[k + 1]);
        Some(hermite(s0, s1, self.l_values[k], self.l_values[k + 1], self.dl_values[k], self.dl_values[k + 1], s))
    }

    fn s_of_t(&self, t: f64) -> Option<f64> {
        let k = locate(&self.t_grid, t)?;
        let (s0, s1) = (self.s_grid[k], self.s_grid[k + 1]);
        let (t0, t1) = (self.t_grid[k], self.t_grid[k + 1]);
        let (d0, d1) = (self.dt_values[k], self.dt_values[k + 1]);
        let (mut a, mut b) = (s0, s1);
        let mut s = s0 + (s1 - s0) * (t - t0) / (t1 - t0);
        for _ in 0..100 {
            let f = hermite(s0, s1, t0, t1, d0, d1, s) - t;
            if f == 0.0 {
                break;
            }
            if f > 0.0 {
                b = s;
            } else {
                a = s;
            }
            let fp = hermite_deriv(s0, s1, t0, t1, d0, d1, s);
            let newton = s - f / fp;
            s = if fp > 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if b - a <= 4.0 * f64::EPSILON * s.abs().max(1e-300) {
                break;
            }
        }
        Some(s)
    }

    /// `φ(t)`, `None` outside the tabulated range.
    pub fn phi(&self, t: f64) -> Option<f64> {
        self.s_of_t(t).map(|s| self.law.phi(s))
    }

    /// `φ′(t)`.
    pub fn phi_prime(&self, t: f64) -> Option<f64> {
        let s = self.s_of_t(t)?;
        Some((-self.l_of_s(s)?).exp())
    }

    /// `φ″(t) = −ℓ(φ)φ′²`.
    pub fn phi_second(&self, t: f64) -> Option<f64> {
        let p = self.phi(t)?;
        let pp = self.phi_prime(t)?;
        Some(-self.law.ell(p) * pp * pp)
    }

    /// `φ⁻¹(y)`, `None` if `y` is outside the range of the table.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        self.t_of_s(self.law.s_of(y)?)
    }

    /// `1/φ′(φ⁻¹(y)) = e^{L(y)}`.
    pub fn inverse_slope(&self, y: f64) -> Option<f64> {
        Some(self.l_of_s(self.law.s_of(y)?)?.exp())
    }

    /// `−φ″/φ′²` evaluated at the value `y = φ(t)`.
    pub fn log_slope(&self, y: f64) -> f64 {
        self.law.ell(y)
    }

    /// Largest relative defect between a table cell's `Δt` and an
    /// independent Gauss quadrature of `dt/ds` over the cell.
    pub fn ode_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.len() - 1 {
            let (s0, s1) = (self.s_grid[k], self.s_grid[k + 1]);
            let q = gauss4(s0, s1, |s| {
                let l = self.l_of_s(s.clamp(s0, s1)).unwrap_or(self.l_values[k]);
                self.law.dt_ds(s, l)
            });
            let dt = self.t_grid[k + 1] - self.t_grid[k];
            worst = worst.max(((dt - q) / dt).abs());
        }
        worst
    }

    /// `t,phi,phi_prime` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,phi,phi_prime\n");
        for k in 0..self.len() {
            let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", self.t_grid[k], self.phi_values[k], self.phi_prime_values[k]);
        }
        s
    }
}

/// `w = φ⁻¹(u)` with the nodes that fell outside the table.
#[derive(Clone, Debug)]
pub struct Transformed {
    pub w: ScalarField,
    /// Nodes whose u-value is outside the range of φ; their w is clamped to
    /// the end of the table and must not enter any statistic.
    pub flagged: Vec<usize>,
    /// `max |φ(w) − u|` over unflagged nodes.
    pub roundtrip: f64,
}

impl Transformed {
    /// Unflagged nodes whose axis neighbours are unflagged too.
    pub fn valid_mask(&self) -> Vec<bool> {
        let g = self.w.grid();
        let mut m = vec![true; g.len()];
        for &i in &self.flagged {
            m[i] = false;
            let mi = g.multi(i);
            for a in 0..g.dim() {
                if mi[a] > 0 {
                    m[i - g.stride(a)] = false;
                }
                if mi[a] + 1 < g.shape()[a] {
                    m[i + g.stride(a)] = false;
                }
            }
        }
        m
    }
}

pub fn transform(u: &ScalarField, phi: &Diffeomorphism) -> Result<Transformed> {
    let (t_lo, t_hi) = phi.t_range();
    let mut flagged = Vec::new();
    let mut roundtrip = 0.0f64;
    let vals: Vec<f64> = (0..u.grid().len())
        .map(|i| {
            let v = u.get(i);
            match phi.inverse(v) {
                Some(t) => {
                    if let Some(back) = phi.phi(t) {
                        roundtrip = roundtrip.max((back - v).abs());
                    }
                    t
                }
                None => {
                    flagged.push(i);
                    if v > 0.0 {
                        t_hi
                    } else {
                        t_lo
                    }
                }
            }
        })
        .collect();
    let mut w = ScalarField::new(u.grid().clone(), vals, "w", crate::field::Provenance::Transformed)?;
    w.notes.push(format!("phi {}", phi.kind.as_str()));
    if !flagged.is_empty() {
        w.notes.push(format!("flagged {} nodes outside the range of phi", flagged.len()));
    }
    Ok(Transformed { w, flagged, roundtrip })
}

/// `{|u| < 1 − δ}` for the band-limited kinds, everything otherwise.
pub fn kind_mask(u: &ScalarField, kind: DiffeoKind, delta: f64) -> Vec<bool> {
    (0..u.grid().len()).map(|i| !kind.band_limited() || u.get(i).abs() < 1.0 - delta).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FailingNode {
    pub index: usize,
    pub point: Point,
    pub w: f64,
    pub lap_w: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignCertificate {
    pub pass: bool,
    pub fraction: f64,
    pub checked: usize,
    pub failing: Vec<FailingNode>,
    /// Nodes where `sign(w) ≠ sign(u)`.
    pub sign_mismatches: usize,
    pub tolerance: f64,
}

impl SignCertificate {
    /// `index,x,y,z,w,lap_w` rows for the failing nodes.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,x,y,z,w,lap_w\n");
        for f in &self.failing {
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                f.index, f.point[0], f.point[1], f.point[2], f.w, f.lap_w
            );
        }
        s
    }
}

/// Fraction of interior mask nodes with `sign(Δw)·sign(w) ≥ 0`, or
/// `|Δw| ≤ tolerance`, or `|w| ≤ tolerance`.
pub fn sign_consistency(w: &ScalarField, u: &ScalarField, mask: &[bool], tolerance: f64) -> Result<SignCertificate> {
    let g = w.grid();
    if u.grid() != g || mask.len() != g.len() {
        return Err(Error::Grid("w, u and mask must share a grid".into()));
    }
    let lap = laplacian(w);
    let mut checked = 0;
    let mut failing = Vec::new();
    for i in g.interior().filter(|&i| mask[i]) {
        checked += 1;
        let (wv, lv) = (w.get(i), lap.get(i));
        if !sign_ok(wv, lv, tolerance) {
            failing.push(FailingNode { index: i, point: g.point(i), w: wv, lap_w: lv });
        }
    }
    if checked == 0 {
        return Err(Error::EmptyRegion("sign certificate mask has no interior nodes".into()));
    }
    let sign_mismatches = (0..g.len()).filter(|&i| sign(w.get(i)) != sign(u.get(i))).count();
    Ok(SignCertificate {
        pass: failing.is_empty(),
        fraction: (checked - failing.len()) as f64 / checked as f64,
        checked,
        failing,
        sign_mismatches,
        tolerance,
    })
}

/// `sign(Δw)·sign(w) ≥ 0`, or either one within the noise band.
pub(crate) fn sign_ok(w: f64, lap: f64, tolerance: f64) -> bool {
    w * lap >= 0.0 || lap.abs() <= tolerance || w.abs() <= tolerance
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianCheck {
    pub absolute: ResidualStats,
    /// `|Δ_h w − Δw| / max(1, |Δw|)`.
    pub relative: ResidualStats,
    pub excluded: usize,
}

/// Compares the finite-difference Laplacian of `w = φ⁻¹(u)` with
/// `Δw = (W′(u) − φ″|∇u|²/φ′²)/φ′ = e^{L(u)}(W′(u) + ℓ(u)|∇u|²)` on interior
/// mask nodes.
pub fn analytic_laplacian_w(
    u: &ScalarField,
    phi: &Diffeomorphism,
    pot: &DoubleWellPotential,
    mask: Option<&[bool]>,
) -> Result<LaplacianCheck> {
    let tr = transform(u, phi)?;
    let valid = tr.valid_mask();
    let lap = laplacian(&tr.w);
    let gs = gradient(u).norm_sq();
    let g = u.grid();
    let mut abs = Vec::new();
    let mut rel = Vec::new();
    let mut excluded = 0;
    for i in g.interior().filter(|&i| mask.is_none_or(|m| m[i])) {
        if !valid[i] {
            excluded += 1;
            continue;
        }
        let v = u.get(i);
        let Some(e_l) = phi.inverse_slope(v) else {
            excluded += 1;
            continue;
        };
        let exact = e_l * (pot.wp(v) + phi.log_slope(v) * gs.get(i));
        let d = (lap.get(i) - exact).abs();
        abs.push(d);
        rel.push(d / exact.abs().max(1.0));
    }
    let absolute = ResidualStats::from_values(abs.into_iter())
        .ok_or_else(|| Error::EmptyRegion("no valid nodes for the w Laplacian".into()))?;
    let relative = ResidualStats::from_values(rel.into_iter()).expect("same nodes");
    Ok(LaplacianCheck { absolute, relative, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Grid, Provenance};
    use crate::model1d::{planar_solution, solve_profile, HeteroclinicProfile};
    use crate::pfunction::gradient_floor;
    use proptest::prelude::*;

    fn profile() -> HeteroclinicProfile {
        solve_profile(&DoubleWellPotential::canonical(), 12.0, 1e-3).unwrap()
    }

    fn front(h: f64) -> ScalarField {
        let g = Grid::cube(2, -2.5, 2.5, h).unwrap();
        let t = 20f64.to_radians();
        planar_solution(&profile(), &[t.cos(), t.sin()], 0.1, &g).unwrap()
    }

    #[test]
    fn eq414_unit_is_tanh() {
        let d = build_phi_414(1.0, 50.0, 1e-3).unwrap();
        let mut worst = 0.0f64;
        for k in 0..=2000 {
            let t = -5.0 + k as f64 * 5e-3;
            worst = worst.max((d.phi(t).unwrap() - t.tanh()).abs());
            worst = worst.max((d.phi_prime(t).unwrap() - (1.0 - t.tanh().powi(2))).abs());
        }
        assert!(worst <= 1e-8, "{worst}");
        assert_eq!(d.phi(0.0).unwrap(), 0.0);
        assert_eq!(d.phi_prime(0.0).unwrap(), 1.0);
        assert!(d.phi_range().1 < 1.0);
    }

    fn t_c0_half(p: f64) -> f64 {
        // ∫₀^φ (1 − x²)^{-2} dx
        p / (2.0 * (1.0 - p * p)) + 0.25 * ((1.0 + p) / (1.0 - p)).ln()
    }

    #[test]
    fn eq414_half_matches_closed_form_with_fourth_order() {
        let err = |step: f64| {
            let d = build_phi_414(0.5, 1e6, step).unwrap();
            let mut e = 0.0f64;
            for p in [0.3, 0.6, 0.9, 0.99] {
                e = e.max((d.inverse(p).unwrap() - t_c0_half(p)).abs() / t_c0_half(p));
            }
            e
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e1 < 1e-5, "{e1}");
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "order ratio {ratio}");
    }

    #[test]
    fn smaller_c0_is_slower() {
        let a = build_phi_414(0.5, 1e6, 1e-3).unwrap();
        let b = build_phi_414(1.0, 1e6, 1e-3).unwrap();
        assert!(a.phi(3.0).unwrap() < b.phi(3.0).unwrap());
        for k in (0..a.len()).filter(|&k| a.phi_values[k].abs() < 0.999) {
            let p = a.phi_values[k];
            let q = (1.0 - p * p).powf(2.0);
            assert!((a.phi_prime_values[k] - q).abs() <= 1e-12 * q.max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn eq311_odd_normalized_and_against_quadrature() {
        let theta = 0.3;
        let d = build_phi_311(theta, 1e30, 1e-3).unwrap();
        assert_eq!(d.phi(0.0).unwrap(), 0.0);
        assert!((d.phi_prime(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(d.phi_range(), (-1.0, 1.0));
        for t in [0.1, 0.5, 1.0, 3.0, 20.0] {
            let (p, m) = (d.phi(t).unwrap(), d.phi(-t).unwrap());
            assert!((p + m).abs() < 1e-12, "{t}: {p} {m}");
        }
        // independent oracle: t(φ) = ∫₀^φ exp(x²/2θ²) dx, composite Gauss on a fine mesh
        for p in [0.2, 0.5, 0.8, 1.0] {
            let n = 4000;
            let oracle: f64 = (0..n)
                .map(|k| {
                    let (a, b) = (p * k as f64 / n as f64, p * (k + 1) as f64 / n as f64);
                    gauss4(a, b, |x| (x * x / (2.0 * theta * theta)).exp())
                })
                .sum();
            let t = d.inverse(p).unwrap();
            assert!(((t - oracle) / oracle).abs() < 1e-10, "{p}: {t} vs {oracle}");
            assert!((d.phi(t).unwrap() - p).abs() < 1e-12);
        }
        assert!(d.ode_residual() < 1e-10, "{}", d.ode_residual());
        assert!(build_phi_311(0.8, 1.0, 1e-3).is_err());
        assert!(build_phi_311(0.3, 1.0, 0.5).is_err());
    }

    #[test]
    fn t_max_truncates() {
        let d = build_phi_311(0.1, 10.0, 1e-3).unwrap();
        let (lo, hi) = d.t_range();
        assert!(lo >= -10.0 && hi <= 10.0);
        assert!(d.phi_range().1 < 1.0);
        assert!(d.inverse(0.99).is_none());
    }

    #[test]
    fn remark32_unit_matches_eq311() {
        let pot = DoubleWellPotential::canonical();
        let a = build_phi_311(0.3, 1e30, 1e-3).unwrap();
        let b = build_phi_remark32(&pot, 0.3, &InverseH::Constant(1.0), 0.9, 1e30, 1e-3).unwrap();
        let mut worst = 0.0f64;
        for k in 0..=400 {
            let t = -10.0 + k as f64 * 0.05;
            worst = worst.max((a.phi(t).unwrap() - b.phi(t).unwrap()).abs());
            worst = worst.max((a.phi_prime(t).unwrap() - b.phi_prime(t).unwrap()).abs());
        }
        assert!(worst <= 1e-6, "{worst}");
        assert_eq!(b.phi(0.0).unwrap(), 0.0);
        assert!(b.ode_residual() < 1e-8);
    }

    #[test]
    fn remark32_admissibility() {
        let pot = DoubleWellPotential::canonical();
        assert!(build_phi_remark32(&pot, 0.3, &InverseH::HadamardMargin(0.0), 0.9, 1e30, 1e-3).is_ok());
        let err = build_phi_remark32(&pot, 0.3, &InverseH::Constant(0.5), 0.9, 1e30, 1e-3).unwrap_err();
        assert!(err.to_string().contains("inadmissible"), "{err}");
        assert_eq!(InverseH::parse("const:1").unwrap(), InverseH::Constant(1.0));
        assert!(InverseH::parse("linear:1").is_err());
    }

    #[test]
    fn remark42_scaled_matches_eq414() {
        for c in [0.5, 0.8] {
            let a = build_phi_414(c, 1e6, 1e-3).unwrap();
            let b = build_phi_remark42(&ADescriptor::Scaled(c), 1e6, 1e-3).unwrap();
            let mut worst = 0.0f64;
            for k in 0..=400 {
                let t = -10.0 + k as f64 * 0.05;
                worst = worst.max((a.phi(t).unwrap() - b.phi(t).unwrap()).abs());
                worst = worst.max((a.phi_prime(t).unwrap() - b.phi_prime(t).unwrap()).abs());
            }
            assert!(worst <= 1e-6, "{c}: {worst}");
        }
        let t = build_phi_remark42(&ADescriptor::Tilted { c: 0.6, k: 0.5 }, 1e6, 1e-3).unwrap();
        assert!(t.ode_residual() < 1e-8);
        assert!(build_phi_remark42(&ADescriptor::Scaled(1.0), 1e6, 1e-3).is_err());
        assert!(build_phi_remark42(&ADescriptor::Tilted { c: 0.9, k: -2.0 }, 1e6, 1e-3).is_err());
        assert_eq!(ADescriptor::parse("tilted:0.6,0.5").unwrap(), ADescriptor::Tilted { c: 0.6, k: 0.5 });
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn roundtrip_and_monotone_inverse(y in -0.999f64..0.999, dy in 1e-6f64..1e-3) {
            let d = build_phi_414(0.7, 1e9, 5e-3).unwrap();
            let t = d.inverse(y).unwrap();
            prop_assert!((d.phi(t).unwrap() - y).abs() <= 1e-8);
            if y + dy < 0.999 {
                prop_assert!(d.inverse(y + dy).unwrap() > t);
            }
        }
    }

    #[test]
    fn transform_planar_front_is_linear() {
        let h = 1.0 / 32.0;
        let u = front(h);
        let d = build_phi_414(1.0, 50.0, 1e-3).unwrap();
        let tr = transform(&u, &d).unwrap();
        assert!(tr.flagged.is_empty());
        assert!(tr.roundtrip <= 1e-8);
        let a = 20f64.to_radians();
        let g = u.grid();
        let mut worst = 0.0f64;
        for i in 0..g.len() {
            let p = g.point(i);
            let lin = (p[0] * a.cos() + p[1] * a.sin() + 0.1) / 2f64.sqrt();
            worst = worst.max((tr.w.get(i) - lin).abs());
            assert_eq!(sign(tr.w.get(i)), sign(u.get(i)));
        }
        assert!(worst < 1e-5, "{worst}");
    }

    #[test]
    fn transform_flags_out_of_range() {
        let g = Grid::cube(1, 0.0, 1.0, 0.125).unwrap();
        let u = ScalarField::from_fn(&g, "u", Provenance::Analytic, |p| 2.0 * p[0] - 1.0).unwrap();
        let d = build_phi_414(0.5, 1e6, 1e-3).unwrap();
        let tr = transform(&u, &d).unwrap();
        assert_eq!(tr.flagged, vec![0, 8]);
        let m = tr.valid_mask();
        assert!(!m[0] && !m[1] && m[2] && !m[7] && !m[8]);
        assert!(tr.w.notes.iter().any(|n| n.contains("flagged 2")));
    }

    #[test]
    fn sign_certificates_on_front() {
        let h = 1.0 / 64.0;
        let u = front(h);
        let delta = 0.1;
        let theta = 0.9 * gradient_floor(&u, delta).unwrap();
        let d = build_phi_311(theta, 1e300, 1e-3).unwrap();
        let tr = transform(&u, &d).unwrap();
        let valid = tr.valid_mask();
        let band = kind_mask(&u, DiffeoKind::Eq311, delta);
        let mask: Vec<bool> = (0..valid.len()).map(|i| valid[i] && band[i]).collect();
        let c = sign_consistency(&tr.w, &u, &mask, 10.0 * h).unwrap();
        assert!(c.pass, "{:?}", &c.failing[..c.failing.len().min(3)]);
        assert_eq!(c.sign_mismatches, 0);

        let d = build_phi_414(0.5, 1e6, 1e-3).unwrap();
        let tr = transform(&u, &d).unwrap();
        let c = sign_consistency(&tr.w, &u, &tr.valid_mask(), 10.0 * h).unwrap();
        assert!(c.pass && c.fraction == 1.0);
        assert!(c.checked > 300 * 300 / 2);

        // θ₀ above the gradient on part of the band
        let d = build_phi_311(0.6, 1e300, 1e-3).unwrap();
        let tr = transform(&u, &d).unwrap();
        let c = sign_consistency(&tr.w, &u, &mask, 10.0 * h).unwrap();
        assert!(!c.pass && c.fraction < 1.0);
        assert!(c.to_csv().lines().count() == c.failing.len() + 1);
    }

    #[test]
    fn laplacian_of_w_refines() {
        let pot = DoubleWellPotential::canonical();
        let d311 = build_phi_311(0.3, 1e300, 1e-3).unwrap();
        let d414 = build_phi_414(0.6, 1e6, 1e-3).unwrap();
        for d in [&d311, &d414] {
            let mut prev = f64::INFINITY;
            for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
                let u = front(h);
                let band = kind_mask(&u, DiffeoKind::Eq311, 0.1);
                let r = analytic_laplacian_w(&u, d, &pot, Some(&band)).unwrap();
                assert!(r.relative.max < prev / 3.0, "{:?} {h}: {} vs {prev}", d.kind, r.relative.max);
                prev = r.relative.max;
            }
            assert!(prev < 1e-2);
        }
        let g = Grid::cube(2, -1.0, 1.0, 1.0 / 32.0).unwrap();
        let s = ScalarField::from_fn(&g, "s", Provenance::Analytic, |p| 0.5 * (p[0] + 0.3 * p[1]).sin()).unwrap();
        let r = analytic_laplacian_w(&s, &d414, &pot, None).unwrap();
        assert!(r.absolute.max > 0.1);
    }
}
