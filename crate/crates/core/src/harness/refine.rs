//! Convergence-order study: residual checks rerun on a ladder of grid spacings.

use std::fmt::Write as _;

use super::manifest::Manifest;
use super::pipeline::{abs_stats, build_field, laplacian_residual, profile_rows};
use super::report::fmt_num;
use crate::error::{Error, Result};
use crate::field::{check_p_identity, compute_qsq, Band, Grid, Provenance, ScalarField, STAT_MARGIN};
use crate::perimeter::extract_level_set;
use crate::pfunction::{elliptic_operator_l, identity_418, modica_deficit};

#[derive(Clone, Debug, PartialEq)]
pub struct RefineRow {
    pub check: String,
    pub hs: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of `ln residual` against `ln h`; `None` if a
    /// residual is zero or not finite.
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineTable {
    pub rows: Vec<RefineRow>,
}

impl RefineTable {
    pub fn get(&self, check: &str) -> Option<&RefineRow> {
        self.rows.iter().find(|r| r.check == check)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,h,residual,slope\n");
        for r in &self.rows {
            let slope = r.slope.map_or("nan".to_string(), fmt_num);
            for (h, v) in r.hs.iter().zip(&r.residuals) {
                let _ = writeln!(s, "{},{},{},{slope}", r.check, fmt_num(*h), fmt_num(*v));
            }
        }
        s
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `|measure − exact|` for the level set `{|x − c| = R}` of the distance
/// function on `grid`, with `R` a third of the shortest half-extent.
fn extraction_error(grid: &Grid) -> Result<f64> {
    let n = grid.dim();
    let c: Vec<f64> = (0..n).map(|a| 0.5 * (grid.lo()[a] + grid.hi(a))).collect();
    let r = (0..n).map(|a| 0.5 * (grid.hi(a) - grid.lo()[a])).fold(f64::INFINITY, f64::min) / 3.0;
    let f = ScalarField::from_fn(grid, "distance", Provenance::Analytic, |p| {
        (0..n).map(|a| (p[a] - c[a]).powi(2)).sum::<f64>().sqrt() - r
    })?;
    let s = extract_level_set(&f, 0.0)?;
    let exact = if n == 2 { 2.0 * std::f64::consts::PI * r } else { 4.0 * std::f64::consts::PI * r * r };
    Ok((s.total_measure() - exact).abs())
}

/// Reruns the residual checks at each spacing in `levels` (at least three).
pub fn refine_study(m: &Manifest, levels: &[f64]) -> Result<RefineTable> {
    if levels.len() < 3 {
        return Err(Error::Config(format!("refinement needs at least 3 levels, got {}", levels.len())));
    }
    let mut rows_scratch = Vec::new();
    let profile = profile_rows(&m.potential, m, &mut rows_scratch)?;
    let pot = &m.potential;
    let band = Band::symmetric(1.0 - m.params.delta);
    let floor = m.params.grad_floor;
    let mut table: Vec<(String, Vec<f64>)> = Vec::new();
    let mut record = |name: &str, v: f64| match table.iter_mut().find(|(n, _)| n == name) {
        Some((_, vals)) => vals.push(v),
        None => table.push((name.to_string(), vec![v])),
    };
    for &h in levels {
        let lm = m.with_overrides(None, Some(h))?;
        let u = build_field(&lm, &profile, &mut rows_scratch)?;
        let nodes: Vec<usize> =
            u.grid().interior_with_margin(STAT_MARGIN).filter(|&i| band.contains(u.get(i))).collect();
        let empty = || Error::EmptyRegion(format!("no band nodes at h = {h}"));
        record("laplacian_residual", laplacian_residual(&u, pot, &band).ok_or_else(empty)?);
        let md = modica_deficit(&u, pot);
        record("modica_deficit", abs_stats(nodes.iter().map(|&i| md.get(i))).ok_or_else(empty)?.1);
        let q = compute_qsq(&u, floor);
        record("qsq_band", abs_stats(nodes.iter().map(|&i| q.get(i))).ok_or_else(empty)?.1);
        record("p_identity", check_p_identity(&u, pot, &band, floor)?.max);
        if let Some(c2) = m.params.c2 {
            let (first, second) = identity_418(&u, pot, c2, &band, floor)?;
            record("identity_hessian_split", first.max);
            record("identity_grad_norm", second.max);
            let op = elliptic_operator_l(&u, pot, c2, floor)?;
            let r = abs_stats(op.nodes.iter().filter(|&&i| band.contains(u.get(i))).map(|&i| op.residual.get(i)))
                .ok_or_else(empty)?;
            record("operator_identity", r.1);
        }
        record("extraction_length", extraction_error(u.grid())?);
    }
    let rows = table
        .into_iter()
        .map(|(check, residuals)| RefineRow {
            slope: loglog_slope(levels, &residuals),
            check,
            hs: levels.to_vec(),
            residuals,
        })
        .collect();
    Ok(RefineTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v * v).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&x, &[1.0, 0.0, 1.0]), None);
        assert_eq!(loglog_slope(&[1.0], &[1.0]), None);
    }

    #[test]
    fn too_few_levels() {
        let m = Manifest::parse(super::super::manifest::bundled("thm41_planar_2d").unwrap()).unwrap();
        assert!(matches!(refine_study(&m, &[0.1, 0.05]), Err(Error::Config(_))));
    }
}
