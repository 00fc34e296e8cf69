//! Drift between a report and a stored baseline report.

use std::fmt::Write as _;
use std::path::Path;

use super::report::{fmt_num, Report, Verdict};
use crate::error::{Error, Result};

/// Residuals are compared through the `max` column.
pub const DRIFT_FACTOR: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriftKind {
    Unchanged,
    Improved,
    /// Worse by more than [`DRIFT_FACTOR`].
    Worsened,
    /// Worse by more than [`DRIFT_FACTOR`] on a coarser grid than the baseline.
    Expected,
    /// PASS ↔ FAIL.
    VerdictFlip,
}

impl DriftKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DriftKind::Unchanged => "unchanged",
            DriftKind::Improved => "improved",
            DriftKind::Worsened => "worsened",
            DriftKind::Expected => "expected",
            DriftKind::VerdictFlip => "verdict_flip",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Drift {
    pub check: String,
    pub field: String,
    pub baseline: f64,
    pub current: f64,
    pub kind: DriftKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftReport {
    pub entries: Vec<Drift>,
}

impl DriftReport {
    pub fn flagged(&self) -> impl Iterator<Item = &Drift> {
        self.entries.iter().filter(|d| !matches!(d.kind, DriftKind::Unchanged | DriftKind::Improved))
    }

    /// Any verdict flip.
    pub fn hard_failure(&self) -> bool {
        self.entries.iter().any(|d| d.kind == DriftKind::VerdictFlip)
    }

    /// No flips and no unexpected worsening.
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|d| !matches!(d.kind, DriftKind::VerdictFlip | DriftKind::Worsened))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,field,baseline,current,kind\n");
        for d in &self.entries {
            let _ = writeln!(s, "{},{},{},{},{}", d.check, d.field, fmt_num(d.baseline), fmt_num(d.current), d.kind.as_str());
        }
        s
    }
}

fn classify(base: f64, cur: f64, coarser: bool) -> DriftKind {
    let (b, c) = (base.abs(), cur.abs());
    if b.is_nan() && c.is_nan() {
        return DriftKind::Unchanged;
    }
    let worse = if b == 0.0 { c > 0.0 && c > f64::EPSILON } else { !(c <= DRIFT_FACTOR * b) };
    if worse {
        if coarser {
            DriftKind::Expected
        } else {
            DriftKind::Worsened
        }
    } else if c < b / DRIFT_FACTOR {
        DriftKind::Improved
    } else {
        DriftKind::Unchanged
    }
}

/// Compares `current` against `baseline` row by row, keyed on (check, field).
pub fn compare_reports(current: &Report, baseline: &Report) -> Result<DriftReport> {
    let keys = |r: &Report| {
        let mut k: Vec<_> = r.rows.iter().map(|x| x.key()).collect();
        k.sort();
        k
    };
    let (kc, kb) = (keys(current), keys(baseline));
    if kc != kb {
        let missing: Vec<_> = kb.iter().filter(|k| !kc.contains(k)).map(|k| k.0.clone()).collect();
        let extra: Vec<_> = kc.iter().filter(|k| !kb.contains(k)).map(|k| k.0.clone()).collect();
        return Err(Error::Schema(format!("check sets differ: missing {missing:?}, new {extra:?}")));
    }
    let coarser = current.info.h > baseline.info.h * (1.0 + 1e-12);
    let mut entries = Vec::new();
    for b in &baseline.rows {
        let c = current.rows.iter().find(|r| r.key() == b.key()).expect("same key sets");
        let flip = matches!(
            (b.verdict, c.verdict),
            (Verdict::Pass, Verdict::Fail) | (Verdict::Fail, Verdict::Pass)
        );
        let kind = if flip { DriftKind::VerdictFlip } else { classify(b.max, c.max, coarser) };
        entries.push(Drift { check: b.check.clone(), field: b.field.clone(), baseline: b.max, current: c.max, kind });
    }
    Ok(DriftReport { entries })
}

/// Reads the baseline CSV and compares.
pub fn compare_baseline(current: &Report, baseline: &Path) -> Result<DriftReport> {
    if !baseline.exists() {
        return Err(Error::Config(format!("baseline {} does not exist", baseline.display())));
    }
    let text = std::fs::read_to_string(baseline)?;
    compare_reports(current, &Report::from_csv(&text)?)
}
