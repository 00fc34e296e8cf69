//! Shared fixtures for the kernel benchmarks.

use accal_core::diffeo::{build_phi_311, transform};
use accal_core::field::{Grid, ScalarField};
use accal_core::model1d::{planar_solution, solve_profile, DoubleWellPotential, HeteroclinicProfile};
use accal_core::pfunction::gradient_floor;

pub fn profile() -> HeteroclinicProfile {
    solve_profile(&DoubleWellPotential::canonical(), 12.0, 1e-3).expect("canonical profile")
}

/// 20° planar front on `[−2.5, 2.5]²`.
pub fn front(h: f64) -> ScalarField {
    let g = Grid::cube(2, -2.5, 2.5, h).expect("grid");
    let r = 20f64.to_radians();
    planar_solution(&profile(), &[r.cos(), r.sin()], 0.1, &g).expect("front")
}

/// `(u, w)` with `w` from the Gaussian law at `θ₀ = 0.9 ×` gradient floor.
pub fn transformed_front(h: f64) -> (ScalarField, ScalarField) {
    let u = front(h);
    let theta0 = 0.9 * gradient_floor(&u, 0.1).expect("band");
    let phi = build_phi_311(theta0, 1e300, 1e-3).expect("diffeo");
    let w = transform(&u, &phi).expect("transform").w;
    (u, w)
}
