//! `accal`: command-line driver for the verification pipeline.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or the
//! pipeline stops on a numerical error, 2 for usage and validation errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use accal_core::harness::{
    bundled, compare_baseline, exit_code, refine_study, run_stages, Manifest, Report, Stage,
};
use accal_core::Error;
use anyhow::Context;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "accal", version, about = "Allen-Cahn level-set minimality laboratory")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Manifest file, or the name of a bundled manifest (thm31_planar_2d, thm41_planar_2d).
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<String>,
    /// Output directory for artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the manifest seed (competitors included).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Overrides the grid spacing.
    #[arg(long, global = true, value_name = "REAL")]
    h: Option<f64>,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Heteroclinic profile and hypothesis check.
    Profile,
    /// Dirichlet solve; planar manifests use their front as boundary data.
    Solve,
    /// Pointwise quantities, identities and hypotheses on the field.
    Analyze,
    /// Reparametrization w = phi^{-1}(u) and the sign certificate.
    Transform,
    /// Level set, competitors and minimality gaps.
    Perimeter,
    /// Full pipeline including the divergence certificate.
    Verify,
    /// Convergence orders over a ladder of grid spacings.
    Refine {
        /// Grid spacings (at least three).
        #[arg(long, value_delimiter = ',', default_values_t = [0.03125, 0.015625, 0.0078125])]
        levels: Vec<f64>,
    },
    /// Full pipeline compared against a baseline report.csv.
    Compare {
        #[arg(long, value_name = "PATH")]
        baseline: PathBuf,
    },
}

/// An error with its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn classify(e: Error) -> Failure {
    let code = match &e {
        Error::Manifest { .. } | Error::Config(_) | Error::Parse(_) | Error::Schema(_) | Error::Io(_) => 2,
        _ => 1,
    };
    Failure { code, err: e.into() }
}

fn usage(err: anyhow::Error) -> Failure {
    Failure { code: 2, err }
}

fn load_manifest(g: &Global) -> Result<Manifest, Failure> {
    let spec = g.manifest.as_deref().ok_or_else(|| usage(anyhow::anyhow!("--manifest is required")))?;
    let path = Path::new(spec);
    let m = if path.exists() {
        Manifest::from_path(path).map_err(classify)?
    } else if let Some(text) = bundled(spec) {
        Manifest::parse(text).map_err(classify)?
    } else {
        return Err(usage(anyhow::anyhow!("manifest `{spec}` is neither a file nor a bundled manifest")));
    };
    if let Some(h) = g.h {
        if !(h > 0.0 && h.is_finite()) {
            return Err(usage(anyhow::anyhow!("--h must be positive, got {h}")));
        }
    }
    m.with_overrides(g.seed, g.h).map_err(classify)
}

fn say(g: &Global, text: &str) {
    if !g.quiet {
        print!("{text}");
    }
}

fn run_stage(g: &Global, m: &Manifest, stage: Stage) -> Result<Report, Failure> {
    let out = run_stages(m, stage, g.out.as_deref()).map_err(classify)?;
    say(g, &out.report.summary());
    if let Some(dir) = &g.out {
        say(g, &format!("artifacts: {} files in {}\n", out.artifacts.len(), dir.display()));
    }
    Ok(out.report)
}

fn write_out(g: &Global, name: &str, content: &str) -> Result<(), Failure> {
    if let Some(dir) = &g.out {
        std::fs::create_dir_all(dir)
            .and_then(|_| std::fs::write(dir.join(name), content))
            .with_context(|| format!("writing {}", dir.join(name).display()))
            .map_err(usage)?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<u8, Failure> {
    let g = &cli.global;
    let m = load_manifest(g)?;
    let report = match &cli.command {
        Command::Profile => run_stage(g, &m, Stage::Profile)?,
        Command::Solve => run_stage(g, &m.with_solved_field().map_err(classify)?, Stage::Field)?,
        Command::Analyze => run_stage(g, &m, Stage::Analyze)?,
        Command::Transform => run_stage(g, &m, Stage::Transform)?,
        Command::Perimeter => run_stage(g, &m, Stage::Perimeter)?,
        Command::Verify => run_stage(g, &m, Stage::Certify)?,
        Command::Refine { levels } => {
            let t = refine_study(&m, levels).map_err(classify)?;
            let csv = t.to_csv();
            say(g, &csv);
            write_out(g, "refine.csv", &csv)?;
            return Ok(0);
        }
        Command::Compare { baseline } => {
            let report = run_stage(g, &m, Stage::Certify)?;
            let drift = compare_baseline(&report, baseline).map_err(classify)?;
            for d in drift.flagged() {
                say(g, &format!("DRIFT {} {} {} -> {} ({})\n", d.check, d.field, d.baseline, d.current, d.kind.as_str()));
            }
            write_out(g, "drift.csv", &drift.to_csv())?;
            say(g, &format!("drift: {}\n", if drift.pass() { "none flagged as failure" } else { "FAIL" }));
            return Ok(if drift.pass() && report.pass() { 0 } else { 1 });
        }
    };
    Ok(exit_code(&report) as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
