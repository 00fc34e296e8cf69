//! Dirichlet solves of `Δu = W′(u)` on grid boxes: projected gradient flow,
//! switching to damped Newton (Jacobi-preconditioned CG) near convergence.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::field::{gradient, io, laplacian, Ball, Grid, Provenance, ScalarField};
use crate::model1d::{planar_solution, DoubleWellPotential, HeteroclinicProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    GradientFlow,
    /// Gradient flow until the residual drops below the switch threshold,
    /// Newton afterwards.
    Newton,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub method: SolveMethod,
    pub pseudo_time_step: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Residual below which Newton takes over.
    pub newton_switch: f64,
}

impl SolveConfig {
    /// Newton-accelerated defaults with `τ = 0.9 h²/(2n)`.
    pub fn for_grid(grid: &Grid) -> Self {
        Self {
            method: SolveMethod::Newton,
            pseudo_time_step: 0.9 * max_stable_step(grid),
            tolerance: 1e-10,
            max_iterations: 500_000,
            newton_switch: 1e-3,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let cap = max_stable_step(grid);
        if !(self.pseudo_time_step > 0.0 && self.pseudo_time_step <= cap * (1.0 + 1e-12)) {
            return Err(Error::Config(format!(
                "pseudo_time_step {} outside (0, h²/(2·dim)] = (0, {cap}]",
                self.pseudo_time_step
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

pub fn max_stable_step(grid: &Grid) -> f64 {
    grid.h() * grid.h() / (2.0 * grid.dim() as f64)
}

/// Dirichlet data presets.
#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    Constant(f64),
    Planar { direction: Vec<f64>, offset: f64 },
    File(PathBuf),
}

impl Boundary {
    /// `constant:v`, `planar:a1,..,an,offset` or `file:PATH`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("boundary `{s}` lacks a `kind:` prefix")))?;
        let nums = || -> Result<Vec<f64>> {
            rest.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("boundary `{s}`: {e}"))))
                .collect()
        };
        match kind {
            "constant" => {
                let v = nums()?;
                if v.len() != 1 {
                    return Err(Error::Parse(format!("boundary `{s}`: expected one value")));
                }
                Ok(Boundary::Constant(v[0]))
            }
            "planar" => {
                let mut v = nums()?;
                if v.len() < 2 {
                    return Err(Error::Parse(format!("boundary `{s}`: expected direction and offset")));
                }
                let offset = v.pop().unwrap_or(0.0);
                Ok(Boundary::Planar { direction: v, offset })
            }
            "file" => Ok(Boundary::File(PathBuf::from(rest))),
            other => Err(Error::Parse(format!("unknown boundary kind `{other}`"))),
        }
    }

    /// Field whose boundary nodes carry the Dirichlet data.
    pub fn resolve(&self, grid: &Grid, profile: Option<&HeteroclinicProfile>) -> Result<ScalarField> {
        let f = match self {
            Boundary::Constant(v) => ScalarField::from_fn(grid, "boundary", Provenance::Analytic, |_| *v)?,
            Boundary::Planar { direction, offset } => {
                let p = profile.ok_or_else(|| Error::Config("planar boundary needs a profile".into()))?;
                planar_solution(p, direction, *offset, grid)?
            }
            Boundary::File(path) => {
                let f = io::read(path)?;
                if f.grid() != grid {
                    return Err(Error::Grid(format!("boundary file {} is on a different grid", path.display())));
                }
                f
            }
        };
        Ok(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub gradient_steps: usize,
    pub newton_steps: usize,
    /// Sup-norm of the solver's own residual at exit.
    pub final_residual: f64,
    /// Independent recheck with [`laplacian`] over interior nodes.
    pub certified_residual: f64,
    /// Discrete energy after each iteration, starting with the initial guess.
    pub energy_history: Vec<f64>,
    /// Per iteration: `true` for gradient-flow steps.
    pub step_kinds: Vec<bool>,
}

struct Stencil {
    dim: usize,
    shape: [usize; 3],
    strides: [usize; 3],
    inv_h2: f64,
    interior: Vec<usize>,
    is_interior: Vec<bool>,
}

impl Stencil {
    fn new(grid: &Grid) -> Self {
        let mut shape = [1; 3];
        let mut strides = [0; 3];
        for a in 0..grid.dim() {
            shape[a] = grid.shape()[a];
            strides[a] = grid.stride(a);
        }
        let interior: Vec<usize> = grid.interior().collect();
        let mut is_interior = vec![false; grid.len()];
        for &i in &interior {
            is_interior[i] = true;
        }
        Self { dim: grid.dim(), shape, strides, inv_h2: 1.0 / (grid.h() * grid.h()), interior, is_interior }
    }

    fn lap_at(&self, u: &[f64], i: usize) -> f64 {
        let mut s = -2.0 * self.dim as f64 * u[i];
        for a in 0..self.dim {
            s += u[i + self.strides[a]] + u[i - self.strides[a]];
        }
        s * self.inv_h2
    }

    /// `Δu − W′(u)` on interior nodes, zero on the boundary.
    fn residual(&self, pot: &DoubleWellPotential, u: &[f64], out: &mut [f64]) -> f64 {
        let mut sup = 0.0f64;
        for &i in &self.interior {
            let r = self.lap_at(u, i) - pot.wp(u[i]);
            out[i] = r;
            sup = sup.max(r.abs());
        }
        sup
    }

    /// `(−Δ + diag(d)) x` on interior nodes with zero Dirichlet data.
    fn apply(&self, d: &[f64], x: &[f64], out: &mut [f64]) {
        for &i in &self.interior {
            let mut s = 2.0 * self.dim as f64 * x[i];
            for a in 0..self.dim {
                let st = self.strides[a];
                if self.is_interior[i + st] {
                    s -= x[i + st];
                }
                if self.is_interior[i - st] {
                    s -= x[i - st];
                }
            }
            out[i] = s * self.inv_h2 + d[i] * x[i];
        }
    }

    /// Edge-based discrete energy whose gradient is `h^n(−Δ_h u + W′(u))`.
    fn energy(&self, pot: &DoubleWellPotential, u: &[f64], hn: f64) -> f64 {
        let mut e = 0.0;
        for i in 0..u.len() {
            for a in 0..self.dim {
                let st = self.strides[a];
                if (i / st) % self.shape[a] + 1 < self.shape[a] {
                    let d = u[i + st] - u[i];
                    e += 0.5 * d * d * self.inv_h2;
                }
            }
            if self.is_interior[i] {
                e += pot.w(u[i]);
            }
        }
        e * hn
    }
}

/// Average over axes of the linear interpolation between opposite faces.
pub fn initial_guess(boundary: &ScalarField) -> Vec<f64> {
    let g = boundary.grid();
    let b = boundary.values();
    let dim = g.dim();
    let mut out = b.to_vec();
    for i in g.interior() {
        let m = g.multi(i);
        let mut acc = 0.0;
        for a in 0..dim {
            let n = g.shape()[a] - 1;
            let st = g.stride(a);
            let lo = i - m[a] * st;
            let hi = lo + n * st;
            let s = m[a] as f64 / n as f64;
            acc += (1.0 - s) * b[lo] + s * b[hi];
        }
        out[i] = (acc / dim as f64).clamp(-1.0, 1.0);
    }
    out
}

fn dot(idx: &[usize], a: &[f64], b: &[f64]) -> f64 {
    idx.iter().map(|&i| a[i] * b[i]).sum()
}

/// Jacobi-PCG for `(−Δ + diag(d)) x = r`. `None` on loss of positive
/// curvature or stagnation.
fn pcg(st: &Stencil, d: &[f64], r: &[f64], rel_tol: f64, max_iter: usize) -> Option<Vec<f64>> {
    let n = r.len();
    let diag_base = 2.0 * st.dim as f64 * st.inv_h2;
    let mut minv = vec![0.0; n];
    for &i in &st.interior {
        let dd = diag_base + d[i];
        if dd <= 0.0 {
            return None;
        }
        minv[i] = 1.0 / dd;
    }
    let idx = &st.interior;
    let mut x = vec![0.0; n];
    let mut res = r.to_vec();
    let mut z: Vec<f64> = (0..n).map(|i| minv[i] * res[i]).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(idx, &res, &z);
    let r0 = dot(idx, r, r).sqrt();
    if r0 == 0.0 {
        return Some(x);
    }
    for _ in 0..max_iter {
        st.apply(d, &p, &mut ap);
        let pap = dot(idx, &p, &ap);
        if !(pap > 0.0) {
            return None;
        }
        let alpha = rz / pap;
        for &i in idx {
            x[i] += alpha * p[i];
            res[i] -= alpha * ap[i];
        }
        if dot(idx, &res, &res).sqrt() <= rel_tol * r0 {
            return Some(x);
        }
        for &i in idx {
            z[i] = minv[i] * res[i];
        }
        let rz_new = dot(idx, &res, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for &i in idx {
            p[i] = z[i] + beta * p[i];
        }
    }
    None
}

/// Solves `Δu = W′(u)` with the boundary nodes of `boundary` held fixed.
///
/// Non-convergence is not an error: the last iterate is returned with
/// `converged = false`.
pub fn solve_dirichlet(
    pot: &DoubleWellPotential,
    boundary: &ScalarField,
    cfg: &SolveConfig,
) -> Result<(ScalarField, SolveReport)> {
    let grid = boundary.grid();
    cfg.validate(grid)?;
    let g = grid;
    if let Some(i) = (0..g.len()).find(|&i| g.is_boundary(i) && boundary.get(i).abs() > 1.0) {
        return Err(Error::Domain(format!("boundary value {} outside [-1, 1] at node {i}", boundary.get(i))));
    }
    let st = Stencil::new(g);
    let hn = g.h().powi(g.dim() as i32);
    let mut u = initial_guess(boundary);
    let mut r = vec![0.0; u.len()];
    let mut trial = vec![0.0; u.len()];
    let mut rt = vec![0.0; u.len()];
    let mut energy_history = vec![st.energy(pot, &u, hn)];
    let mut step_kinds = Vec::new();
    let (mut gradient_steps, mut newton_steps) = (0, 0);
    let mut res = st.residual(pot, &u, &mut r);
    let mut converged = res <= cfg.tolerance;
    let mut iterations = 0;
    let mut newton_ok = cfg.method == SolveMethod::Newton;

    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        let mut stepped = false;
        if newton_ok && res < cfg.newton_switch {
            let d: Vec<f64> = u.iter().map(|&v| pot.wpp(v)).collect();
            match pcg(&st, &d, &r, 1e-10, 20 * st.interior.len().max(100)) {
                Some(delta) => {
                    let r2 = dot(&st.interior, &r, &r);
                    let mut lambda = 1.0;
                    for _ in 0..30 {
                        trial.copy_from_slice(&u);
                        for &i in &st.interior {
                            trial[i] = (u[i] + lambda * delta[i]).clamp(-1.0, 1.0);
                        }
                        st.residual(pot, &trial, &mut rt);
                        if dot(&st.interior, &rt, &rt) < r2 * (1.0 - 1e-4 * lambda) {
                            std::mem::swap(&mut u, &mut trial);
                            stepped = true;
                            break;
                        }
                        lambda *= 0.5;
                    }
                    if !stepped {
                        newton_ok = false;
                    }
                }
                None => newton_ok = false,
            }
            if stepped {
                newton_steps += 1;
            }
        }
        if !stepped {
            for &i in &st.interior {
                u[i] = (u[i] + cfg.pseudo_time_step * r[i]).clamp(-1.0, 1.0);
            }
            gradient_steps += 1;
        }
        step_kinds.push(!stepped);
        energy_history.push(st.energy(pot, &u, hn));
        res = st.residual(pot, &u, &mut r);
        converged = res <= cfg.tolerance;
        // after a Newton failure, give it another chance once gradient flow
        // has made progress
        if !newton_ok && cfg.method == SolveMethod::Newton && gradient_steps % 2000 == 0 {
            newton_ok = true;
        }
    }

    let mut field = ScalarField::new(g.clone(), u, "u", Provenance::Solved)?;
    field.notes.push(format!(
        "solved: {iterations} iterations, residual {res:e}, converged {converged}"
    ));
    let certified_residual = pde_residual(&field, pot);
    let report = SolveReport {
        converged,
        iterations,
        gradient_steps,
        newton_steps,
        final_residual: res,
        certified_residual,
        energy_history,
        step_kinds,
    };
    Ok((field, report))
}

/// `max |Δu − W′(u)|` over interior nodes, via [`laplacian`].
pub fn pde_residual(u: &ScalarField, pot: &DoubleWellPotential) -> f64 {
    let lap = laplacian(u);
    u.grid()
        .interior()
        .map(|i| (lap.get(i) - pot.wp(u.get(i))).abs())
        .fold(0.0, f64::max)
}

/// `∫ ½|∇u|² + W(u)` by the trapezoid rule over the grid, or by the plain
/// node sum `h^n Σ` over the nodes of a ball.
pub fn energy(u: &ScalarField, pot: &DoubleWellPotential, region: Option<&Ball>) -> f64 {
    let g = u.grid();
    let grad = gradient(u);
    let hn = g.h().powi(g.dim() as i32);
    let density = |i: usize| 0.5 * grad.norm_sq_at(i) + pot.w(u.get(i));
    match region {
        Some(b) => g.nodes_in_ball(b).into_iter().map(density).sum::<f64>() * hn,
        None => (0..g.len())
            .map(|i| {
                let m = g.multi(i);
                let w: f64 = (0..g.dim())
                    .map(|a| if m[a] == 0 || m[a] + 1 == g.shape()[a] { 0.5 } else { 1.0 })
                    .product();
                w * density(i)
            })
            .sum::<f64>()
            * hn,
    }
}
