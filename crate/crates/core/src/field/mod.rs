//! Uniform-grid scalar fields, finite-difference calculus and the pointwise
//! differential quantities built on them (Qsq, the |∇u| identity, Harnack
//! ratios, oscillation and interior estimates).

mod calculus;
mod grid;
pub mod io;
pub(crate) mod quantities;

pub use calculus::{gradient, hessian, laplacian, HessianField, VectorField};
pub(crate) use calculus::d1;
pub use grid::{Ball, Band, Grid, Point};
pub(crate) use grid::{dist2, dot, norm, sub, to_point};
pub use quantities::{
    check_p_identity, compute_qsq, harnack_ratio, interior_gradient_estimate_check, oscillation,
    AxisEstimate, EstimateCheck, ResidualStats, DEFAULT_GRAD_FLOOR,
};

use crate::error::{Error, Result};

/// Residual statistics skip this many node layers at each face: quantities
/// such as `Δ|∇u|` differentiate a derived field, and one-sided values next
/// to the boundary would leak an O(1) error into them.
pub const STAT_MARGIN: usize = 2;

/// Where a field came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Solved,
    Transformed,
    Derived,
    Loaded,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::Solved => "solved",
            Provenance::Transformed => "transformed",
            Provenance::Derived => "derived",
            Provenance::Loaded => "loaded",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "analytic" => Provenance::Analytic,
            "solved" => Provenance::Solved,
            "transformed" => Provenance::Transformed,
            "derived" => Provenance::Derived,
            "loaded" => Provenance::Loaded,
            other => return Err(Error::Parse(format!("unknown provenance `{other}`"))),
        })
    }
}

/// Real values sampled at every node of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    pub name: String,
    pub provenance: Provenance,
    /// Free-form metadata lines (e.g. clamped node counts).
    pub notes: Vec<String>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>, name: impl Into<String>, provenance: Provenance) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values, name: name.into(), provenance, notes: Vec::new() })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &Grid, name: &str, provenance: Provenance, f: impl Fn(&Point) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self::new(grid.clone(), values, name, provenance)
    }

    /// Builds a derived field whose values are known to be finite.
    pub(crate) fn derived(grid: &Grid, values: Vec<f64>, name: &str) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
            name: name.to_string(),
            provenance: Provenance::Derived,
            notes: Vec::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn interpolate(&self, p: &Point) -> Option<f64> {
        self.grid.interpolate(&self.values, p)
    }

    pub fn map(&self, name: &str, f: impl Fn(f64) -> f64) -> ScalarField {
        Self::derived(&self.grid, self.values.iter().map(|&v| f(v)).collect(), name)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Statistic nodes (see [`STAT_MARGIN`]) whose value lies in `band`.
    pub fn band_nodes(&self, band: &Band) -> Vec<usize> {
        self.grid
            .interior_with_margin(STAT_MARGIN)
            .filter(|&i| band.contains(self.values[i]))
            .collect()
    }

    /// Mask form of [`ScalarField::band_nodes`].
    pub fn band_mask(&self, band: &Band) -> Vec<bool> {
        let mut m = vec![false; self.grid.len()];
        for i in self.band_nodes(band) {
            m[i] = true;
        }
        m
    }

    /// Max absolute value over interior nodes.
    pub fn interior_max_abs(&self) -> f64 {
        self.grid.interior().map(|i| self.values[i].abs()).fold(0.0, f64::max)
    }
}
