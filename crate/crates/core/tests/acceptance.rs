//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::f64::consts::SQRT_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use accal_core::diffeo::{
    build_phi_311, build_phi_414, build_phi_remark32, build_phi_remark42, sign_consistency, transform, ADescriptor,
    Diffeomorphism, InverseH,
};
use accal_core::field::{
    check_p_identity, compute_qsq, oscillation, Ball, Band, Grid, ScalarField, DEFAULT_GRAD_FLOOR, STAT_MARGIN,
};
use accal_core::harness::loglog_slope;
use accal_core::model1d::{planar_solution, solve_profile, DoubleWellPotential, HeteroclinicProfile};
use accal_core::perimeter::{
    check_integrand_conditions, d0_and_radius_guard, divergence_certificate, extract_level_set, generate_competitors,
    minimality_gap, Competitor, CompetitorSpec, DensityWeight, LevelSet, Perturbation, WeightKind,
};
use accal_core::pfunction::{
    alpha_exponent, check_hessian_bound, elliptic_operator_l, gradient_floor, identity_418, modica_deficit, AlphaMode,
    PFunctionParams,
};
use accal_core::solver::{solve_dirichlet, Boundary, SolveConfig};

type Outcome = Result<String, String>;

const H: f64 = 1.0 / 128.0;
const LADDER: [f64; 3] = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
const DELTA: f64 = 0.1;
const C2: f64 = 0.5;

fn pot() -> DoubleWellPotential {
    DoubleWellPotential::canonical()
}

fn profile() -> HeteroclinicProfile {
    solve_profile(&pot(), 12.0, 1e-3).expect("canonical profile")
}

fn direction(deg: f64) -> [f64; 2] {
    let r = deg.to_radians();
    [r.cos(), r.sin()]
}

/// 20° front with offset 0.1 on `[−2.5, 2.5]²`.
fn front(p: &HeteroclinicProfile, h: f64) -> ScalarField {
    let g = Grid::cube(2, -2.5, 2.5, h).unwrap();
    planar_solution(p, &direction(20.0), 0.1, &g).unwrap()
}

fn band_nodes(u: &ScalarField, band: &Band) -> Vec<usize> {
    u.grid().interior_with_margin(STAT_MARGIN).filter(|&i| band.contains(u.get(i))).collect()
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c1_profile() -> Outcome {
    let start = Instant::now();
    let p = profile();
    let secs = start.elapsed().as_secs_f64();
    let err = (0..=12000)
        .map(|k| -6.0 + 1e-3 * k as f64)
        .map(|t| (p.g(t) - (t / SQRT_2).tanh()).abs())
        .fold(0.0, f64::max);
    let eq = p.equipartition_residual();
    check(
        err <= 1e-8 && eq <= 1e-8 && secs < 1.0,
        format!("max|g - tanh(t/sqrt2)| = {err:.3e}, equipartition = {eq:.3e}, {secs:.3}s"),
    )
}

fn unit_square_front(p: &HeteroclinicProfile, h: f64) -> ScalarField {
    let g = Grid::cube(2, 0.0, 1.0, h).unwrap();
    let a = direction(20.0);
    planar_solution(p, &a, -0.5 * (a[0] + a[1]), &g).unwrap()
}

fn c2_modica() -> Outcome {
    let p = profile();
    let errs: Vec<f64> = LADDER
        .iter()
        .map(|&h| {
            let u = unit_square_front(&p, h);
            let d = modica_deficit(&u, &pot());
            u.grid().interior().map(|i| d.get(i).abs()).fold(0.0, f64::max)
        })
        .collect();
    let slope = loglog_slope(&LADDER, &errs).unwrap_or(f64::NAN);
    check(
        errs[2] <= 1e-3 && (1.7..=2.3).contains(&slope),
        format!("max|deficit| at h=1/128 = {:.3e}, slope = {slope:.3}", errs[2]),
    )
}

fn c3_qsq() -> Outcome {
    let u = front(&profile(), H);
    let q = compute_qsq(&u, DEFAULT_GRAD_FLOOR);
    let m = band_nodes(&u, &Band::symmetric(0.9)).into_iter().map(|i| q.get(i)).fold(0.0, f64::max);
    check(m <= 1e-4, format!("max Qsq on |u| <= 0.9 = {m:.3e}"))
}

fn c4_identities() -> Outcome {
    let p = profile();
    let band = Band::symmetric(1.0 - DELTA);
    let mut cols: Vec<(&str, Vec<f64>)> =
        vec![("p_identity", vec![]), ("hessian_split", vec![]), ("grad_norm", vec![]), ("operator_l", vec![])];
    for &h in &LADDER {
        let u = front(&p, h);
        cols[0].1.push(check_p_identity(&u, &pot(), &band, DEFAULT_GRAD_FLOOR).unwrap().max);
        let (a, b) = identity_418(&u, &pot(), C2, &band, DEFAULT_GRAD_FLOOR).unwrap();
        cols[1].1.push(a.max);
        cols[2].1.push(b.max);
        let op = elliptic_operator_l(&u, &pot(), C2, DEFAULT_GRAD_FLOOR).unwrap();
        let r = op.nodes.iter().filter(|&&i| band.contains(u.get(i))).map(|&i| op.residual.get(i).abs()).fold(0.0, f64::max);
        cols[3].1.push(r);
    }
    let mut ok = true;
    let mut msg = Vec::new();
    for (name, v) in &cols {
        let s = loglog_slope(&LADDER, v).unwrap_or(f64::NAN);
        ok &= v[2] <= 1e-2 && s >= 1.0 && v.windows(2).all(|w| w[1] < w[0]);
        msg.push(format!("{name} {:.2e} (slope {s:.2})", v[2]));
    }
    check(ok, msg.join(", "))
}

fn c5_solver() -> Outcome {
    let p = profile();
    let mut ok = true;
    let mut msg = Vec::new();
    for deg in [0.0, 30.0] {
        let a = direction(deg);
        let mut errs = Vec::new();
        let mut slowest = 0.0f64;
        for &h in &LADDER {
            let g = Grid::cube(2, 0.0, 1.0, h).unwrap();
            let b = Boundary::Planar { direction: a.to_vec(), offset: -0.5 * (a[0] + a[1]) };
            let exact = b.resolve(&g, Some(&p)).unwrap();
            let start = Instant::now();
            let (u, rep) = solve_dirichlet(&pot(), &exact, &SolveConfig::for_grid(&g)).unwrap();
            slowest = slowest.max(start.elapsed().as_secs_f64());
            ok &= rep.converged;
            errs.push(g.interior().map(|i| (u.get(i) - exact.get(i)).abs()).fold(0.0, f64::max));
        }
        let s = loglog_slope(&LADDER, &errs).unwrap_or(f64::NAN);
        ok &= (1.7..=2.3).contains(&s) && slowest < 60.0;
        msg.push(format!("{deg}deg order {s:.3} (err {:.2e}, slowest {slowest:.2}s)", errs[2]));
    }
    check(ok, msg.join(", "))
}

fn max_diff(a: &Diffeomorphism, f: impl Fn(f64) -> Option<f64>, lo: f64, hi: f64) -> f64 {
    (0..=2000)
        .map(|k| lo + (hi - lo) * k as f64 / 2000.0)
        .map(|t| match (a.phi(t), f(t)) {
            (Some(x), Some(y)) => (x - y).abs(),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

fn c6_diffeo() -> Outcome {
    let e414 = build_phi_414(1.0, 50.0, 1e-3).unwrap();
    let a = max_diff(&e414, |t| Some(t.tanh()), -8.0, 8.0);
    let e311 = build_phi_311(0.3, 1e30, 1e-3).unwrap();
    let r32 = build_phi_remark32(&pot(), 0.3, &InverseH::Constant(1.0), 1.0 - DELTA, 1e30, 1e-3).unwrap();
    let b = max_diff(&e311, |t| r32.phi(t), -10.0, 10.0);
    let mut c = 0.0f64;
    for cc in [0.3, 0.5, 0.8] {
        let l = build_phi_414(cc, 1e6, 1e-3).unwrap();
        let r = build_phi_remark42(&ADescriptor::Scaled(cc), 1e6, 1e-3).unwrap();
        c = c.max(max_diff(&l, |t| r.phi(t), -10.0, 10.0));
    }
    check(
        a <= 1e-8 && b <= 1e-6 && c <= 1e-6,
        format!("eq414(1) vs tanh {a:.2e}, remark32 vs eq311 {b:.2e}, remark42 vs eq414 {c:.2e}"),
    )
}

struct Transformed {
    name: &'static str,
    phi: Diffeomorphism,
    w: ScalarField,
    valid: Vec<bool>,
}

fn transformed(u: &ScalarField, name: &'static str, phi: Diffeomorphism) -> Transformed {
    let t = transform(u, &phi).unwrap();
    Transformed { name, valid: t.valid_mask(), phi, w: t.w }
}

fn c7_sign(u: &ScalarField, theta0: f64) -> Outcome {
    let band = Band::symmetric(1.0 - DELTA);
    let mut runs = vec![transformed(u, "eq311", build_phi_311(theta0, 1e300, 1e-3).unwrap())];
    for c2 in [0.1, 0.5, 0.9] {
        runs.push(transformed(u, "eq414", build_phi_414(1.0 - c2, 1e300, 1e-3).unwrap()));
    }
    let mut ok = true;
    let mut msg = Vec::new();
    for (k, t) in runs.iter().enumerate() {
        let mask: Vec<bool> = (0..u.grid().len()).map(|i| t.valid[i] && band.contains(u.get(i))).collect();
        let sc = sign_consistency(&t.w, u, &mask, 10.0 * H).unwrap();
        ok &= sc.pass && sc.fraction == 1.0;
        let label = if k == 0 { format!("eq311 theta0={theta0:.4}") } else { format!("eq414 C2={}", [0.1, 0.5, 0.9][k - 1]) };
        msg.push(format!("{label}: {:.4}% of {}", 100.0 * sc.fraction, sc.checked));
    }
    check(ok, msg.join(", "))
}

struct Setup {
    t: Transformed,
    e: LevelSet,
    ball: Ball,
    r_max: f64,
    competitors: Vec<Competitor>,
}

fn setup(u: &ScalarField, t: Transformed) -> Setup {
    let e = extract_level_set(&t.w, 0.0).unwrap();
    let (_, r_max) = d0_and_radius_guard(&t.w, &t.phi, DELTA).unwrap();
    let k = e.nearest_facet(&[0.0; 3]).unwrap();
    let ball = Ball::new(&e.facets[k].centroid[..2], 0.9 * r_max).unwrap();
    let spec = CompetitorSpec { count: 100, seed: 1, ..Default::default() };
    let competitors = generate_competitors(&e, &ball, &spec).unwrap();
    assert_eq!(u.grid(), t.w.grid());
    Setup { t, e, ball, r_max, competitors }
}

fn weights(u: &ScalarField, s311: &Setup, s414: &Setup, theta0: f64) -> Vec<(&'static str, DensityWeight, usize)> {
    let params = PFunctionParams::new(None, Some(C2), None, DELTA).unwrap();
    let alpha = alpha_exponent(&params, AlphaMode::QBound).unwrap().value;
    vec![
        ("exp_theta/eq311", DensityWeight::exp_theta(u, theta0).unwrap().with_radius_guard(s311.r_max), 0),
        ("power_alpha/eq414", DensityWeight::power_alpha(u, alpha).unwrap(), 1),
        ("grad_w/eq311", DensityWeight::grad_w(&s311.t.w).with_radius_guard(s311.r_max), 0),
        ("grad_w/eq414", DensityWeight::grad_w(&s414.t.w).with_radius_guard(s414.r_max), 1),
        ("unit/eq311", DensityWeight::unit(), 0),
        ("unit/eq414", DensityWeight::unit(), 1),
    ]
}

fn c8_gaps(u: &ScalarField, setups: &[Setup; 2], theta0: f64) -> Outcome {
    let mut ok = true;
    let mut msg = Vec::new();
    let mut kinds = std::collections::BTreeSet::new();
    for (name, w, k) in weights(u, &setups[0], &setups[1], theta0) {
        kinds.insert(w.kind.as_str());
        let s = &setups[k];
        let (mut worst, mut positive_needed, mut bad) = (f64::INFINITY, 0usize, 0usize);
        for c in &s.competitors {
            let r = minimality_gap(&s.e, c, &w, &s.ball, H).unwrap();
            worst = worst.min(r.gap / r.perimeter_e);
            let mut pass = r.gap >= -10.0 * H * r.perimeter_e;
            if r.excess > 20.0 * H {
                positive_needed += 1;
                pass &= r.gap > 0.0;
            }
            if c.perturbation == Perturbation::Zero {
                pass &= r.gap == 0.0;
            }
            bad += usize::from(!pass);
        }
        ok &= bad == 0;
        msg.push(format!("{name}: min gap/P {worst:.2e}, {positive_needed} large, {bad} bad"));
    }
    ok &= WeightKind::ALL.iter().all(|k| kinds.contains(k.as_str()));
    check(ok, format!("{} competitors each; {}", setups[0].competitors.len(), msg.join("; ")))
}

fn c9_certificate(setups: &[Setup; 2]) -> Outcome {
    let mut ok = true;
    let mut msg = Vec::new();
    for s in setups {
        let (mut res, mut signs, mut boundary, mut failed) = (0.0f64, 0usize, 0.0f64, 0usize);
        for c in &s.competitors {
            let cert = divergence_certificate(&s.t.w, &s.e, c, &s.ball, 10.0 * H).unwrap();
            res = res.max(cert.relative_residual);
            signs += cert.sign_failures.len();
            boundary = boundary.max(cert.boundary_max);
            failed += usize::from(!cert.pass);
        }
        ok &= res <= 1e-2 && signs == 0 && boundary <= 10.0 * H && failed == 0;
        msg.push(format!("{}: residual {res:.2e}, sign failures {signs}, boundary {boundary:.2e}", s.t.name));
    }
    check(ok, msg.join("; "))
}

fn c10_integrands(u: &ScalarField, setups: &[Setup; 2], theta0: f64) -> Outcome {
    let band = Band::symmetric(1.0 - DELTA);
    let mut ok = true;
    let mut msg = Vec::new();
    for (name, w, k) in weights(u, &setups[0], &setups[1], theta0) {
        let s = &setups[k];
        let g = u.grid();
        let nodes: Vec<usize> =
            g.nodes_in_ball(&s.ball).into_iter().filter(|&i| !g.is_boundary(i) && band.contains(u.get(i))).collect();
        let r = check_integrand_conditions(&w, &nodes, 1).unwrap();
        let rescaled = check_integrand_conditions(&w.clone().with_rescale(r.rescale_factor), &nodes, 1).unwrap();
        ok &= r.homogeneity_samples == 100
            && r.homogeneity_error <= 1e-12
            && r.mu0 > 0.0
            && (rescaled.mu0 - 1.0).abs() <= 1e-12
            && rescaled.lambda.is_finite();
        msg.push(format!("{name}: hom {:.1e} mu0 {:.3} Lambda {:.3}", r.homogeneity_error, r.mu0, rescaled.lambda));
    }
    check(ok, msg.join("; "))
}

fn c11_hessian(u: &ScalarField) -> Outcome {
    let hb = check_hessian_bound(u, 0.5, &Band::new(-0.6, 0.6).unwrap(), DEFAULT_GRAD_FLOOR).unwrap();
    let expected = SQRT_2 * 0.6;
    check(
        (hb.empirical - expected).abs() <= 0.02 * expected,
        format!("empirical C1 on [-0.6, 0.6] = {:.4} (expected {expected:.4} +- 2%)", hb.empirical),
    )
}

fn c12_oscillation(p: &HeteroclinicProfile) -> Outcome {
    let g = Grid::cube(2, -4.0, 4.0, 1.0 / 64.0).unwrap();
    let a = direction(20.0);
    let u = planar_solution(p, &a, 0.1, &g).unwrap();
    let centre = [-0.1 * a[0], -0.1 * a[1]];
    let osc = oscillation(&u, &Ball::new(&centre, 3.0).unwrap()).unwrap();
    check(osc >= 0.25, format!("oscillation on B_3 = {osc:.4}"))
}

fn run(id: &str, title: &str, f: impl FnOnce() -> Outcome, failures: &mut usize) {
    let start = Instant::now();
    let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let secs = start.elapsed().as_secs_f64();
    match out {
        Ok(m) => println!("PASS {id:>3} {title}: {m} [{secs:.1}s]"),
        Err(m) => {
            *failures += 1;
            println!("FAIL {id:>3} {title}: {m} [{secs:.1}s]");
        }
    }
}

fn main() {
    let mut failures = 0;
    run("1", "profile correctness", c1_profile, &mut failures);
    run("2", "Modica equipartition", c2_modica, &mut failures);
    run("3", "Q vanishing on planar fronts", c3_qsq, &mut failures);
    run("4", "identity suite", c4_identities, &mut failures);
    run("5", "solver convergence", c5_solver, &mut failures);
    run("6", "diffeomorphism cross-checks", c6_diffeo, &mut failures);

    let p = profile();
    let u = front(&p, H);
    let theta0 = 0.9 * gradient_floor(&u, DELTA).unwrap();
    run("7", "sign consistency", || c7_sign(&u, theta0), &mut failures);
    let setups = [
        setup(&u, transformed(&u, "eq311", build_phi_311(theta0, 1e300, 1e-3).unwrap())),
        setup(&u, transformed(&u, "eq414", build_phi_414(1.0 - C2, 1e300, 1e-3).unwrap())),
    ];
    run("8", "minimality gaps", || c8_gaps(&u, &setups, theta0), &mut failures);
    run("9", "calibration certificate", || c9_certificate(&setups), &mut failures);
    run("10", "integrand conditions", || c10_integrands(&u, &setups, theta0), &mut failures);
    run("11", "empirical hypothesis mapping", || c11_hessian(&u), &mut failures);
    run("12", "oscillation", || c12_oscillation(&p), &mut failures);

    println!("acceptance: {} of 12 criteria passed", 12 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
