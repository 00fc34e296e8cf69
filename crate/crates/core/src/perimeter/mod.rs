//! Level sets, weighted perimeters, competitors, minimality gaps and the
//! discrete calibration certificate.

mod certificate;
mod competitor;
mod levelset;
mod weight;

pub use certificate::{divergence_certificate, DivergenceCertificate, DIVERGENCE_TOLERANCE};
pub use competitor::{generate_competitors, Competitor, CompetitorSpec, Perturbation};
pub use levelset::{extract_level_set, Chain, Facet, LevelSet};
pub use weight::{check_integrand_conditions, DensityWeight, IntegrandReport, WeightKind};

use crate::diffeo::Diffeomorphism;
use crate::error::{Error, Result};
use crate::field::{Ball, ScalarField};

/// `Σ g(centroid)·measure` over facets with centroid in the ball.
pub fn weighted_perimeter(s: &LevelSet, weight: &DensityWeight, ball: &Ball) -> Result<f64> {
    let mut total = 0.0;
    for (k, f) in s.facets.iter().enumerate() {
        if !ball.contains(&f.centroid) {
            continue;
        }
        let g = weight
            .try_density(&f.centroid)
            .ok_or(Error::DensityUndefined { facet: k, point: f.centroid })?;
        total += g * f.measure;
    }
    Ok(total)
}

/// `d₀ = min` distance from `{w = 0}` to `{w = φ⁻¹(±(1 − δ))}`, and `r_max = d₀/2`.
pub fn d0_and_radius_guard(w: &ScalarField, phi: &Diffeomorphism, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let level = |y: f64| {
        phi.inverse(y).ok_or_else(|| Error::LevelSet(format!("phi does not reach {y}; extend the table")))
    };
    let zero = extract_level_set(w, 0.0)?;
    let mut d0 = f64::INFINITY;
    for y in [1.0 - delta, -1.0 + delta] {
        let other = extract_level_set(w, level(y)?)
            .map_err(|e| Error::LevelSet(format!("level set for u = {y} is missing: {e}")))?;
        d0 = d0.min(zero.distance_to(&other));
    }
    Ok((d0, 0.5 * d0))
}

/// Outcome of one `𝒫̃(F) − 𝒫̃(E)` comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct GapResult {
    pub gap: f64,
    pub perimeter_e: f64,
    pub perimeter_f: f64,
    /// Unit-weight perimeter difference.
    pub excess: f64,
    pub epsilon: f64,
    pub pass: bool,
}

/// `𝒫̃(F, B) − 𝒫̃(E, B)`, PASS iff `gap ≥ −10h·𝒫̃(E, B)`.
pub fn minimality_gap(e: &LevelSet, f: &Competitor, weight: &DensityWeight, ball: &Ball, h: f64) -> Result<GapResult> {
    if weight.kind.is_local() {
        let r_max = weight
            .r_max
            .ok_or_else(|| Error::Config(format!("{} weight needs a radius guard", weight.kind.as_str())))?;
        if ball.radius >= r_max {
            return Err(Error::RadiusGuard { radius: ball.radius, r_max });
        }
    }
    let perimeter_e = weighted_perimeter(e, weight, ball)?;
    let perimeter_f = weighted_perimeter(&f.surface, weight, ball)?;
    let excess = f.surface.measure_in_ball(ball) - e.measure_in_ball(ball);
    let gap = perimeter_f - perimeter_e;
    let epsilon = 10.0 * h * perimeter_e;
    Ok(GapResult { gap, perimeter_e, perimeter_f, excess, epsilon, pass: gap >= -epsilon })
}
