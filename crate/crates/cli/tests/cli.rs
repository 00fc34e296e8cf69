use std::path::Path;
use std::process::{Command, Output};

fn accal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_accal")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const COARSE: &str = "0.03125";

#[test]
fn verify_bundled_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = accal(&["verify", "--manifest", "thm41_planar_2d", "--h", COARSE, "--out", out]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("SUMMARY PASS"));
    for f in ["report.csv", "manifest.toml", "gaps.csv", "certificate.csv", "overlay.svg", "profile.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("modica_deficit,")).unwrap();
    let max = row.split(',').nth(5).unwrap();
    let mantissa = max.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17, "{max}");
    let copy = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(copy.contains("h = 0.03125"));
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = accal(&["perimeter", "--manifest", "thm31_planar_2d", "--h", COARSE, "--seed", "5", "--quiet", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        assert!(o.stdout.is_empty());
    }
    for f in ["report.csv", "gaps.csv", "w.field"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

fn write_manifest(dir: &Path, edit: impl Fn(String) -> String) -> String {
    let text = edit(accal_core_text());
    let p = dir.join("m.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn accal_core_text() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/manifests/thm41_planar_2d.toml")).unwrap()
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), |t| t.replace("delta = 0.1", "delta = 0.0"));
    let o = accal(&["verify", "--manifest", &m]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.delta"));
    assert_eq!(code(&accal(&["verify"])), 2);
    assert_eq!(code(&accal(&["verify", "--manifest", "no_such_manifest"])), 2);
    assert_eq!(code(&accal(&["frobnicate"])), 2);
    assert_eq!(code(&accal(&["verify", "--manifest", "thm41_planar_2d", "--h", "-1"])), 2);
    assert_eq!(code(&accal(&["refine", "--manifest", "thm41_planar_2d", "--levels", "0.1,0.05"])), 2);
}

#[test]
fn check_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    // the Hessian bound with C1 = 0.5 fails on |u| <= 0.9 for the planar front
    let m = write_manifest(dir.path(), |t| t.replace("c2 = 0.5", "c1 = 0.5").replace("q_mode = \"qsq\"\n", ""));
    let o = accal(&["analyze", "--manifest", &m, "--h", COARSE]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL hypothesis_hessian_bound"));
}

#[test]
fn profile_solve_and_refine() {
    let o = accal(&["profile", "--manifest", "thm31_planar_2d"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("PASS profile_tanh"));
    let o = accal(&["solve", "--manifest", "thm31_planar_2d", "--h", "0.0625"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS solve_converged"));
    let o = accal(&["refine", "--manifest", "thm41_planar_2d", "--levels", "0.0625,0.03125,0.015625"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("laplacian_residual"));
}

#[test]
fn compare_against_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&accal(&["verify", "--manifest", "thm41_planar_2d", "--h", COARSE, "--out", out, "--quiet"])), 0);
    let base = dir.path().join("report.csv");
    let base_s = base.to_str().unwrap();
    let o = accal(&["compare", "--manifest", "thm41_planar_2d", "--h", COARSE, "--baseline", base_s]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(!stdout(&o).contains("DRIFT"));

    let text = std::fs::read_to_string(&base).unwrap();
    let flipped: Vec<String> = text
        .lines()
        .map(|l| if l.starts_with("modica_deficit,") { l.replace(",PASS,", ",FAIL,") } else { l.to_string() })
        .collect();
    let flipped = flipped.join("\n");
    let fb = dir.path().join("flipped.csv");
    std::fs::write(&fb, flipped).unwrap();
    let o = accal(&["compare", "--manifest", "thm41_planar_2d", "--h", COARSE, "--baseline", fb.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("verdict_flip"));

    std::fs::write(&fb, "not a report").unwrap();
    let o = accal(&["compare", "--manifest", "thm41_planar_2d", "--h", COARSE, "--baseline", fb.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}
