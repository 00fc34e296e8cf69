//! Numerical laboratory for the Allen–Cahn equation `Δu = W′(u)` and the
//! minimality of its level sets under perimeters with density.
//!
//! The modules follow the pipeline used by the `accal` CLI:
//!
//! * [`model1d`] double-well potentials, the heteroclinic profile and planar solutions
//! * [`field`] grids, finite differences and pointwise quantities such as Qsq
//! * [`solver`] Dirichlet solves of the semilinear equation
//! * [`pfunction`] Modica deficit, P-functions and the operator identities
//! * [`diffeo`] the monotone reparametrizations `u = φ(w)` and sign certificates
//! * [`perimeter`] level-set extraction, weighted perimeters, competitors and gaps
//! * [`harness`] manifests, pipeline runs, reports and baselines

pub mod diffeo;
pub mod error;
pub mod field;
pub mod harness;
mod interp;
pub mod model1d;
pub mod perimeter;
pub mod pfunction;
pub mod solver;

pub use diffeo::{Diffeomorphism, DiffeoKind};
pub use error::{Error, Result};
pub use field::{Ball, Band, Grid, Point, Provenance, ScalarField};
pub use model1d::{DoubleWellPotential, HeteroclinicProfile};
pub use perimeter::{Competitor, DensityWeight, LevelSet, WeightKind};
pub use pfunction::PFunctionParams;
pub use solver::{SolveConfig, SolveReport};
