//! Manifests, pipeline runs, reports, refinement studies and baselines.

mod artifacts;
mod baseline;
mod manifest;
mod pipeline;
mod refine;
mod report;

pub use artifacts::{curve_svg, overlay_svg};
pub use baseline::{compare_baseline, compare_reports, Drift, DriftKind, DriftReport, DRIFT_FACTOR};
pub use manifest::{
    bundled, BallSpec, DiffeoSpec, FieldSource, GridSpec, Manifest, Params, Theta0Policy, Tolerances, BUNDLED,
};
pub use pipeline::{exit_code, run_manifest, run_stages, RunOutput, Stage};
pub use refine::{loglog_slope, refine_study, RefineRow, RefineTable};
pub use report::{fmt_num, Report, Row, RunInfo, Verdict, CSV_HEADER};
