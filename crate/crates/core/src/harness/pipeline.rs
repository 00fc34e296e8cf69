//! profile → field → analyze → transform → perimeter → certify.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::artifacts::{curve_svg, overlay_svg};
use super::manifest::{FieldSource, Manifest, Theta0Policy};
use super::report::{fmt_num, Report, Row, RunInfo, Verdict};
use crate::diffeo::{
    analytic_laplacian_w, build_phi_311, build_phi_414, build_phi_remark32, build_phi_remark42, sign_consistency,
    kind_mask, transform, DiffeoKind, Diffeomorphism,
};
use crate::error::{Error, Result};
use crate::field::{
    check_p_identity, compute_qsq, harnack_ratio, io, laplacian, oscillation, Ball, Band, Grid, ScalarField,
    STAT_MARGIN,
};
use crate::model1d::{check_hypotheses_h, planar_solution, solve_profile, DoubleWellPotential, HeteroclinicProfile};
use crate::perimeter::{
    check_integrand_conditions, d0_and_radius_guard, divergence_certificate, extract_level_set, generate_competitors,
    minimality_gap, Competitor, DensityWeight, LevelSet, Perturbation, WeightKind,
};
use crate::pfunction::{
    alpha_exponent, c0_from_c1, c3_from_c2, check_hessian_bound, check_q_bound, elliptic_operator_l, general_q_bound,
    gradient_floor, identity_418, modica_deficit, AlphaMode, PFunctionParams,
};
use crate::solver::{pde_residual, solve_dirichlet, Boundary, SolveConfig};

/// Pipeline stages in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Profile,
    Field,
    Analyze,
    Transform,
    Perimeter,
    Certify,
}

/// Report plus the artifact files written (empty without an output directory).
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    pub artifacts: Vec<PathBuf>,
}

/// Full pipeline.
pub fn run_manifest(m: &Manifest, out: Option<&Path>) -> Result<RunOutput> {
    run_stages(m, Stage::Certify, out)
}

/// `min, max, mean` of `|v|`.
pub(crate) fn abs_stats(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64, f64)> {
    let (mut lo, mut hi, mut sum, mut n) = (f64::INFINITY, 0.0f64, 0.0, 0usize);
    for v in values {
        let a = v.abs();
        lo = lo.min(a);
        hi = hi.max(a);
        sum += a;
        n += 1;
    }
    (n > 0).then(|| (lo, hi, sum / n as f64))
}

fn grid_label(g: &Grid) -> String {
    let mut s = format!("{}d lo={:?} shape={:?}", g.dim(), &g.lo()[..g.dim()], &g.shape()[..g.dim()]);
    let _ = write!(s, " h={}", g.h());
    s
}

struct Run<'a> {
    m: &'a Manifest,
    report: Report,
    files: Vec<(String, String)>,
}

impl Run<'_> {
    fn push(&mut self, r: Row) {
        self.report.push(r);
    }

    fn file(&mut self, name: &str, content: String) {
        self.files.push((name.into(), content));
    }
}

pub(crate) fn profile_rows(pot: &DoubleWellPotential, m: &Manifest, rows: &mut Vec<Row>) -> Result<HeteroclinicProfile> {
    let hyp = check_hypotheses_h(pot, 2000)?;
    let failed: Vec<&str> = hyp.clauses.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    rows.push(
        Row::new("hypothesis_h", "W")
            .constants(format!("potential={}", pot.name()))
            .verdict(hyp.pass())
            .detail(if failed.is_empty() { "all clauses hold".to_string() } else { format!("failed={}", failed.join(" ")) }),
    );
    hyp.require()?;
    let p = solve_profile(pot, m.profile_t_max, m.profile_step)?;
    let eq = p.equipartition_residual();
    rows.push(
        Row::new("profile_equipartition", "g")
            .constants(format!("t_max={};step={}", m.profile_t_max, m.profile_step))
            .value(eq)
            .verdict(eq <= m.tolerances.equipartition),
    );
    rows.push(Row::new("profile_ode", "g").value(p.ode_residual()));
    if pot.is_canonical() {
        let err = (0..=1200)
            .map(|k| -6.0 + 0.01 * k as f64)
            .map(|t| (p.g(t) - (t / std::f64::consts::SQRT_2).tanh()).abs())
            .fold(0.0, f64::max);
        rows.push(
            Row::new("profile_tanh", "g")
                .band(-6.0, 6.0)
                .value(err)
                .verdict(err <= m.tolerances.equipartition),
        );
    }
    Ok(p)
}

/// Builds u per the manifest's field source.
pub(crate) fn build_field(m: &Manifest, profile: &HeteroclinicProfile, rows: &mut Vec<Row>) -> Result<ScalarField> {
    let pot = &m.potential;
    let u = match &m.field {
        FieldSource::Planar { direction, offset } => {
            let g = m.grid.as_ref().expect("validated").build()?;
            planar_solution(profile, direction, *offset, &g)?
        }
        FieldSource::Solved { boundary, tolerance, max_iterations } => {
            let g = m.grid.as_ref().expect("validated").build()?;
            let b = boundary.resolve(&g, Some(profile))?;
            let mut cfg = SolveConfig::for_grid(&g);
            if let Some(t) = tolerance {
                cfg.tolerance = *t;
            }
            if let Some(n) = max_iterations {
                cfg.max_iterations = *n;
            }
            let (u, rep) = solve_dirichlet(pot, &b, &cfg)?;
            rows.push(
                Row::new("solve_converged", "u")
                    .constants(format!("tolerance={};boundary={boundary:?}", cfg.tolerance))
                    .value(rep.certified_residual)
                    .verdict(rep.converged)
                    .detail(format!("iterations={};newton_steps={}", rep.iterations, rep.newton_steps)),
            );
            if let Boundary::Planar { direction, offset } = boundary {
                let exact = planar_solution(profile, direction, *offset, &g)?;
                let err = g.interior().map(|i| (u.get(i) - exact.get(i)).abs()).fold(0.0, f64::max);
                rows.push(Row::new("solve_error_vs_planar", "u").value(err));
            }
            u
        }
        FieldSource::File(path) => {
            let u = io::read(path)?;
            if let Some(spec) = &m.grid {
                if &spec.build()? != u.grid() {
                    return Err(Error::Manifest { key: "grid".into(), msg: format!("does not match the grid of {}", path.display()) });
                }
            }
            u
        }
    };
    rows.push(Row::new("field_pde_residual", "u").value(pde_residual(&u, pot)));
    Ok(u)
}

fn stat_nodes(u: &ScalarField, band: &Band) -> Vec<usize> {
    u.grid().interior_with_margin(STAT_MARGIN).filter(|&i| band.contains(u.get(i))).collect()
}

fn analyze(run: &mut Run, u: &ScalarField) -> Result<()> {
    let m = run.m;
    let pot = &m.potential;
    let (delta, floor) = (m.params.delta, m.params.grad_floor);
    let band = Band::symmetric(1.0 - delta);
    let (lo, hi) = (band.lo, band.hi);
    let nodes = stat_nodes(u, &band);
    if nodes.is_empty() {
        return Err(Error::EmptyRegion(format!("no interior nodes with |u| <= {}", 1.0 - delta)));
    }

    let md = modica_deficit(u, pot);
    let (a, b, c) = abs_stats(nodes.iter().map(|&i| md.get(i))).expect("nonempty");
    run.push(Row::new("modica_deficit", "u").band(lo, hi).stats(a, b, c).verdict(b <= m.tolerances.modica));

    let q = compute_qsq(u, floor);
    let (a, b, c) = abs_stats(nodes.iter().map(|&i| q.get(i))).expect("nonempty");
    run.push(
        Row::new("qsq_band", "u")
            .band(lo, hi)
            .constants(format!("grad_floor={floor}"))
            .stats(a, b, c)
            .verdict(b <= m.tolerances.qsq),
    );

    let pi = check_p_identity(u, pot, &band, floor)?;
    run.push(
        Row::new("p_identity", "u")
            .band(lo, hi)
            .stats(f64::NAN, pi.max, pi.mean)
            .verdict(pi.max <= m.tolerances.identity)
            .detail(format!("nodes={}", pi.count)),
    );

    let gf = gradient_floor(u, delta)?;
    run.push(Row::new("gradient_floor", "u").band(lo, hi).value(gf));

    let params = PFunctionParams::new(m.params.c1, m.params.c2, None, delta)?;
    if let Some(c1) = m.params.c1 {
        let hb = check_hessian_bound(u, c1, &band, floor)?;
        run.push(
            Row::new("hypothesis_hessian_bound", "u")
                .band(lo, hi)
                .constants(format!("c1={c1}"))
                .value(hb.empirical)
                .verdict(hb.pass)
                .detail(format!("checked={};violations={};violation_range={:?}", hb.checked, hb.violations, hb.violation_range)),
        );
        let al = alpha_exponent(&params, AlphaMode::HessianBound)?;
        run.push(
            Row::new("alpha", "-")
                .constants(format!("c1={c1};c0={}", c0_from_c1(c1)?))
                .value(al.value)
                .detail(format!("statement_value={:?};discrepancy={:?}", al.statement_value, al.discrepancy())),
        );
    }
    if let Some(c2) = m.params.c2 {
        let qb = check_q_bound(u, c2, &band, m.params.q_mode, floor)?;
        run.push(
            Row::new("hypothesis_q_bound", "u")
                .band(lo, hi)
                .constants(format!("c2={c2};q_mode={:?}", m.params.q_mode))
                .value(qb.empirical)
                .verdict(qb.pass)
                .detail(format!("checked={};violations={}", qb.checked, qb.violations)),
        );
        if !pot.is_canonical() {
            let gq = general_q_bound(u, pot, c2, &band, m.params.q_mode, floor)?;
            run.push(Row::new("general_q_bound", "u").band(lo, hi).constants(format!("c2={c2}")).value(gq.empirical).verdict(gq.pass));
        }
        let (first, second) = identity_418(u, pot, c2, &band, floor)?;
        for (name, s) in [("identity_hessian_split", first), ("identity_grad_norm", second)] {
            run.push(
                Row::new(name, "u")
                    .band(lo, hi)
                    .constants(format!("c2={c2}"))
                    .stats(f64::NAN, s.max, s.mean)
                    .verdict(s.max <= m.tolerances.identity)
                    .detail(format!("nodes={}", s.count)),
            );
        }
        let op = elliptic_operator_l(u, pot, c2, floor)?;
        let (a, b, c) = abs_stats(op.nodes.iter().filter(|&&i| band.contains(u.get(i))).map(|&i| op.residual.get(i)))
            .ok_or_else(|| Error::EmptyRegion("operator identity band is empty".into()))?;
        run.push(
            Row::new("operator_identity", "u")
                .band(lo, hi)
                .constants(format!("c2={c2};c={}", c3_from_c2(c2)?))
                .stats(a, b, c)
                .verdict(b <= m.tolerances.identity),
        );
        let al = alpha_exponent(&params, AlphaMode::QBound)?;
        run.push(Row::new("alpha", "-").constants(format!("c2={c2}")).value(al.value));
    }

    let g = u.grid();
    let centre: Vec<f64> = (0..g.dim()).map(|a| 0.5 * (g.lo()[a] + g.hi(a))).collect();
    let half = (0..g.dim()).map(|a| 0.5 * (g.hi(a) - g.lo()[a])).fold(f64::INFINITY, f64::min);
    let ball = Ball::new(&centre, half.min(3.0))?;
    run.push(Row::new("oscillation", "u").constants(format!("radius={}", ball.radius)).value(oscillation(u, &ball)?));
    let hr = harnack_ratio(u, &ball.scaled(0.5), &band)?;
    run.push(Row::new("harnack_ratio", "u").band(lo, hi).constants(format!("radius={}", 0.5 * ball.radius)).value(hr));
    Ok(())
}

pub(crate) fn resolve_theta0(m: &Manifest, u: &ScalarField) -> Result<Option<f64>> {
    Ok(match m.params.theta0 {
        None => None,
        Some(Theta0Policy::Value(v)) => Some(v),
        Some(Theta0Policy::FloorFraction(f)) => Some(f * gradient_floor(u, m.params.delta)?),
    })
}

pub(crate) fn build_diffeo(m: &Manifest, theta0: Option<f64>) -> Result<Diffeomorphism> {
    let d = &m.diffeo;
    match d.kind {
        DiffeoKind::Eq311 => build_phi_311(theta0.expect("validated"), d.t_max, d.step),
        DiffeoKind::Eq414 => {
            let c0 = match (m.params.c1, m.params.c2) {
                (Some(c1), _) => c0_from_c1(c1)?,
                (None, Some(c2)) => c3_from_c2(c2)?,
                _ => unreachable!("validated"),
            };
            build_phi_414(c0, d.t_max, d.step)
        }
        DiffeoKind::Remark32 => build_phi_remark32(
            &m.potential,
            theta0.expect("validated"),
            d.inv_h.as_ref().expect("validated"),
            1.0 - m.params.delta,
            d.t_max,
            d.step,
        ),
        DiffeoKind::Remark42 => build_phi_remark42(d.a.as_ref().expect("validated"), d.t_max, d.step),
    }
}

/// Density for one weight kind, radius guard attached to the local ones.
pub(crate) fn build_weight(
    kind: WeightKind,
    m: &Manifest,
    u: &ScalarField,
    w: &ScalarField,
    theta0: Option<f64>,
    r_max: f64,
) -> Result<DensityWeight> {
    let weight = match kind {
        WeightKind::ExpTheta => DensityWeight::exp_theta(u, theta0.ok_or_else(|| Error::Config("exp_theta needs theta0".into()))?)?,
        WeightKind::PowerAlpha => {
            let params = PFunctionParams::new(m.params.c1, m.params.c2, None, m.params.delta)?;
            let mode = if m.params.c1.is_some() { AlphaMode::HessianBound } else { AlphaMode::QBound };
            DensityWeight::power_alpha(u, alpha_exponent(&params, mode)?.value)?
        }
        WeightKind::GradW => DensityWeight::grad_w(w),
        WeightKind::Unit => DensityWeight::unit(),
    };
    Ok(if kind.is_local() { weight.with_radius_guard(r_max) } else { weight })
}

pub(crate) fn choose_ball(m: &Manifest, grid: &Grid, e: &LevelSet, r_max: f64) -> Result<Ball> {
    let radius = m.ball.guard_fraction * r_max;
    match &m.ball.center {
        Some(c) => Ball::new(c, radius),
        None => {
            let mut centre = [0.0; 3];
            for (a, c) in centre.iter_mut().enumerate().take(grid.dim()) {
                *c = 0.5 * (grid.lo()[a] + grid.hi(a));
            }
            let k = e.nearest_facet(&centre).ok_or_else(|| Error::LevelSet("zero set has no facets".into()))?;
            Ball::new(&e.facets[k].centroid[..grid.dim()], radius)
        }
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "'"))
}

/// Runs the stages up to and including `upto`.
pub fn run_stages(m: &Manifest, upto: Stage, out: Option<&Path>) -> Result<RunOutput> {
    let info = RunInfo {
        manifest: m.name.clone(),
        seed: m.seed,
        grid: String::new(),
        h: m.h().unwrap_or(f64::NAN),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    let mut run = Run { m, report: Report::new(info), files: Vec::new() };
    run.file("manifest.toml", m.to_toml());
    let result = stages(&mut run, upto);
    let artifacts = write_out(&run, out)?;
    result?;
    Ok(RunOutput { report: run.report, artifacts })
}

fn write_out(run: &Run, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let Some(dir) = out else { return Ok(Vec::new()) };
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, content) in &run.files {
        let p = dir.join(name);
        std::fs::write(&p, content)?;
        written.push(p);
    }
    for (name, content) in [("report.csv", run.report.to_csv()), ("summary.txt", run.report.summary())] {
        let p = dir.join(name);
        std::fs::write(&p, content)?;
        written.push(p);
    }
    Ok(written)
}

fn stages(run: &mut Run, upto: Stage) -> Result<()> {
    let m = run.m;
    let mut rows = Vec::new();
    let profile = profile_rows(&m.potential, m, &mut rows);
    run.report.rows.append(&mut rows);
    let profile = profile?;
    run.file("profile.csv", profile.to_csv());
    let (t0, t1) = profile.t_range();
    let span = 6.0f64.min(t1).min(-t0);
    let pts: Vec<(f64, f64)> = (0..=400).map(|k| -span + 2.0 * span * k as f64 / 400.0).map(|t| (t, profile.g(t))).collect();
    run.file("profile.svg", curve_svg(&pts, "heteroclinic profile g(t)"));
    if upto == Stage::Profile {
        return Ok(());
    }

    let u = build_field(m, &profile, &mut rows);
    run.report.rows.append(&mut rows);
    let u = u?;
    let g = u.grid().clone();
    run.report.info.grid = grid_label(&g);
    run.report.info.h = g.h();
    let h = g.h();
    run.file("u.field", io::to_string(&u));
    if upto == Stage::Field {
        return Ok(());
    }

    analyze(run, &u)?;
    if upto == Stage::Analyze {
        return Ok(());
    }

    let theta0 = resolve_theta0(m, &u)?;
    if let Some(t) = theta0 {
        run.push(Row::new("theta0", "-").constants(format!("policy={:?}", m.params.theta0)).value(t));
    }
    let phi = build_diffeo(m, theta0)?;
    run.push(
        Row::new("diffeo_ode_residual", "phi")
            .constants(format!("kind={};params={:?}", phi.kind.as_str(), phi.params))
            .value(phi.ode_residual())
            .detail(format!("table_nodes={}", phi.len())),
    );
    run.file("phi.csv", phi.to_csv());
    let tr = transform(&u, &phi)?;
    run.push(Row::new("transform_roundtrip", "w").value(tr.roundtrip).detail(format!("flagged={}", tr.flagged.len())));
    let valid = tr.valid_mask();
    let mask: Vec<bool> = kind_mask(&u, phi.kind, m.params.delta).iter().zip(&valid).map(|(a, b)| *a && *b).collect();
    let tol = m.tolerances.sign_factor * h;
    let sc = sign_consistency(&tr.w, &u, &mask, tol)?;
    run.push(
        Row::new("sign_consistency", "w")
            .constants(format!("tolerance={tol};kind={}", phi.kind.as_str()))
            .value(sc.fraction)
            .verdict(sc.pass)
            .detail(format!("checked={};failing={};sign_mismatches={}", sc.checked, sc.failing.len(), sc.sign_mismatches)),
    );
    run.file("sign_failures.csv", sc.to_csv());
    if let Ok(lc) = analytic_laplacian_w(&u, &phi, &m.potential, Some(&mask)) {
        run.push(
            Row::new("laplacian_w", "w")
                .stats(f64::NAN, lc.absolute.max, lc.absolute.mean)
                .detail(format!("relative_max={};excluded={}", fmt_num(lc.relative.max), lc.excluded)),
        );
    }
    let w = tr.w;
    run.file("w.field", io::to_string(&w));
    if upto == Stage::Transform {
        return Ok(());
    }

    let e = extract_level_set(&w, 0.0)?;
    run.push(
        Row::new("level_set", "w")
            .value(e.total_measure())
            .verdict(e.dim == 3 || e.is_closed_or_boundary_terminated(&g))
            .detail(format!("facets={};chains={}", e.facets.len(), e.chains.len())),
    );
    run.file("level_set_facets.csv", e.facets_csv());
    let (d0, r_max) = d0_and_radius_guard(&w, &phi, m.params.delta)?;
    run.push(Row::new("radius_guard", "w").constants(format!("delta={}", m.params.delta)).value(r_max).detail(format!("d0={}", fmt_num(d0))));
    let ball = choose_ball(m, &g, &e, r_max)?;
    let competitors = generate_competitors(&e, &ball, &m.competitors)?;
    if g.dim() == 2 {
        run.file("overlay.svg", overlay_svg(&g, &e, &ball, &competitors, 20));
    }
    let band = Band::symmetric(1.0 - m.params.delta);
    let integrand_nodes: Vec<usize> = g
        .nodes_in_ball(&ball)
        .into_iter()
        .filter(|&i| !g.is_boundary(i) && band.contains(u.get(i)))
        .collect();
    let mut gaps_csv = String::from("weight,competitor,perturbation,excess,perimeter_e,perimeter_f,gap,pass\n");
    for &kind in &m.weights {
        let weight = build_weight(kind, m, &u, &w, theta0, r_max)?;
        let rep = check_integrand_conditions(&weight, &integrand_nodes, m.seed)?;
        let rescaled = check_integrand_conditions(&weight.clone().with_rescale(rep.rescale_factor), &integrand_nodes, m.seed)?;
        let ok = rep.homogeneity_error <= m.tolerances.homogeneity
            && rep.mu0 > 0.0
            && (rescaled.mu0 - 1.0).abs() <= 1e-12
            && rescaled.lambda.is_finite();
        run.push(
            Row::new(&format!("integrand_{}", kind.as_str()), "g")
                .band(band.lo, band.hi)
                .constants(format!("mu0={};rescale={}", fmt_num(rep.mu0), fmt_num(rep.rescale_factor)))
                .value(rep.homogeneity_error)
                .verdict(ok)
                .detail(format!(
                    "rescaled_min={};lambda={};convex_without_rescale={}",
                    fmt_num(rescaled.mu0),
                    fmt_num(rescaled.lambda),
                    rep.convex_without_rescale
                )),
        );
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        let (mut violations, mut need_positive, mut scale) = (0usize, 0usize, 0.0f64);
        for (k, c) in competitors.iter().enumerate() {
            let r = minimality_gap(&e, c, &weight, &ball, h)?;
            scale = r.perimeter_e;
            let eps = m.tolerances.gap_factor * h * r.perimeter_e;
            let mut pass = r.gap >= -eps;
            if r.excess > m.tolerances.excess_factor * h {
                need_positive += 1;
                pass &= r.gap > 0.0;
            }
            if c.perturbation == Perturbation::Zero {
                pass &= r.gap == 0.0;
            }
            violations += usize::from(!pass);
            lo = lo.min(r.gap);
            hi = hi.max(r.gap);
            sum += r.gap;
            let _ = writeln!(
                gaps_csv,
                "{},{k},{},{},{},{},{},{}",
                kind.as_str(),
                quote(&c.perturbation.describe()),
                fmt_num(r.excess),
                fmt_num(r.perimeter_e),
                fmt_num(r.perimeter_f),
                fmt_num(r.gap),
                pass
            );
        }
        run.push(
            Row::new(&format!("gaps_{}", kind.as_str()), "w")
                .constants(format!(
                    "radius={};r_max={};gap_factor={};excess_factor={}",
                    fmt_num(ball.radius),
                    fmt_num(r_max),
                    m.tolerances.gap_factor,
                    m.tolerances.excess_factor
                ))
                .stats(lo, hi, sum / competitors.len().max(1) as f64)
                .verdict(violations == 0)
                .detail(format!(
                    "competitors={};violations={violations};positive_required={need_positive};perimeter_e={}",
                    competitors.len(),
                    fmt_num(scale)
                )),
        );
    }
    run.file("gaps.csv", gaps_csv);
    if upto == Stage::Perimeter {
        return Ok(());
    }

    certify(run, &w, &e, &competitors, &ball, tol)
}

fn certify(run: &mut Run, w: &ScalarField, e: &LevelSet, competitors: &[Competitor], ball: &Ball, tol: f64) -> Result<()> {
    let m = run.m;
    if w.grid().dim() != 2 {
        run.push(Row::new("certificate", "w").detail("divergence certificate is 2D only"));
        return Ok(());
    }
    let mut csv = String::from("competitor,side,trivial,sign_checked,sign_failures,volume,flux,relative_residual,boundary_max,pass\n");
    let (mut res_max, mut res_sum, mut nontrivial) = (0.0f64, 0.0, 0usize);
    let (mut sign_failures, mut sign_checked, mut boundary_max) = (0usize, 0usize, 0.0f64);
    let mut failed = 0usize;
    for (k, c) in competitors.iter().enumerate() {
        let cert = divergence_certificate(w, e, c, ball, tol)?;
        let pass = cert.sign_failures.is_empty() && cert.relative_residual <= m.tolerances.divergence && cert.boundary_max <= tol;
        failed += usize::from(!pass);
        if !cert.trivial {
            nontrivial += 1;
            res_max = res_max.max(cert.relative_residual);
            res_sum += cert.relative_residual;
        }
        sign_failures += cert.sign_failures.len();
        sign_checked += cert.sign_checked;
        boundary_max = boundary_max.max(cert.boundary_max);
        let _ = writeln!(
            csv,
            "{k},{},{},{},{},{},{},{},{},{pass}",
            cert.side,
            cert.trivial,
            cert.sign_checked,
            cert.sign_failures.len(),
            fmt_num(cert.volume),
            fmt_num(cert.flux),
            fmt_num(cert.relative_residual),
            fmt_num(cert.boundary_max)
        );
    }
    run.push(
        Row::new("certificate_divergence", "w")
            .constants(format!("tolerance={}", m.tolerances.divergence))
            .stats(f64::NAN, res_max, res_sum / nontrivial.max(1) as f64)
            .verdict(res_max <= m.tolerances.divergence)
            .detail(format!("pairs={};nontrivial={nontrivial}", competitors.len())),
    );
    run.push(
        Row::new("certificate_sign", "w")
            .constants(format!("tolerance={tol}"))
            .value(sign_failures as f64)
            .verdict(sign_failures == 0)
            .detail(format!("nodes_checked={sign_checked}")),
    );
    run.push(
        Row::new("certificate_boundary", "w")
            .constants(format!("tolerance={tol}"))
            .value(boundary_max)
            .verdict(boundary_max <= tol),
    );
    run.push(Row::new("certificate", "w").value(failed as f64).verdict(failed == 0).detail(format!("pairs={}", competitors.len())));
    run.file("certificate.csv", csv);
    Ok(())
}

/// Informational rows never fail a run.
pub fn exit_code(report: &Report) -> i32 {
    if report.rows.iter().any(|r| r.verdict == Verdict::Fail) {
        1
    } else {
        0
    }
}

/// `max |Δ_h u − W′(u)|` over interior band nodes.
pub(crate) fn laplacian_residual(u: &ScalarField, pot: &DoubleWellPotential, band: &Band) -> Option<f64> {
    let lap = laplacian(u);
    abs_stats(stat_nodes(u, band).into_iter().map(|i| lap.get(i) - pot.wp(u.get(i)))).map(|s| s.1)
}
