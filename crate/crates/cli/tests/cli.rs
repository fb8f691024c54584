//! End-to-end runs of the `spdc` binary: exit codes, diagnostics, output
//! files and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use spdc_cli::{Overrides, Scenario};
use spdc_core::DispersionModel;

const BIN: &str = env!("CARGO_BIN_EXE_spdc");

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn spdc(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path
}

const BASE: &str = r#"
[crystal]
length = "20 mm"

[pump]
wavelength = "521 nm"
fwhm = "1.0 nm"
waist = "220 um"

[signal]
wavelength = "775 nm"
"#;

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn phasematch_succeeds_and_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = spdc(&["phasematch"], &scenarios_dir().join("fig2d_phasematch.toml"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((summary["poling_period_um"].as_f64().unwrap() - 28.509).abs() < 1e-3);
    assert!(dir.path().join("phasematch_summary.json").exists());
    assert!(dir.path().join("gvm.csv").exists());
    assert!(dir.path().join("d_map.csv").exists());
}

#[test]
fn missing_config_is_a_config_error() {
    let out = Command::new(BIN).arg("jsa").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_key_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{BASE}\n[grid]\npoints = 64\nstep_size = 3\n");
    let line = text.lines().position(|l| l.starts_with("step_size")).unwrap() + 1;
    let cfg = write_config(dir.path(), &text);
    let out = spdc(&["jsa"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("step_size") && err.contains(&format!("line {line}")), "{err}");
}

#[test]
fn empty_grid_section_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{BASE}\n[grid]\n"));
    let out = spdc(&["jsa"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("points"), "{}", stderr(&out));
}

#[test]
fn bare_number_and_bad_step_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bare = write_config(dir.path(), &BASE.replace("\"20 mm\"", "20"));
    let out = spdc(&["phasematch"], &bare, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("explicit unit"), "{}", stderr(&out));

    let step = write_config(
        dir.path(),
        &format!("{BASE}\n[purity_scan]\nfwhm_start = \"1 nm\"\nfwhm_stop = \"2 nm\"\nfwhm_step = \"0 nm\"\n"),
    );
    let out = spdc(&["purity-scan"], &step, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("must be positive"), "{}", stderr(&out));
}

#[test]
fn wavelength_outside_the_dispersion_range_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BASE.replace("521 nm", "200 nm"));
    let out = spdc(&["phasematch"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn missing_gvm_point_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &BASE.replace("521 nm", "700 nm").replace("\"775 nm\"", "\"gvm\""),
    );
    let out = spdc(&["phasematch"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn non_converged_waist_scan_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    let base = BASE.replace("\"775 nm\"", "\"775 nm\"\nwaist = \"125 um\"");
    let text = format!(
        "{base}\n[idler]\nwaist = \"120 um\"\n\n[grid]\npoints = 3\n\n\
         [quadrature]\nnodes = 16\nmax_nodes = 16\n\n\
         [waist_scan]\nstart = \"10 um\"\nstop = \"130 um\"\nstep = \"120 um\"\n"
    );
    let cfg = write_config(dir.path(), &text);
    let out = spdc(&["waist-scan"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["failed_points"], 1);
    assert_eq!(summary["points"][0]["status"], "not_converged");
    assert_eq!(summary["points"][1]["status"], "ok");
    let table = std::fs::read_to_string(dir.path().join("waist_scan.csv")).unwrap();
    assert!(table.lines().any(|l| l.ends_with("not_converged") && l.contains("nan")), "{table}");
}

#[test]
fn outputs_carry_provenance_and_are_deterministic() {
    let cfg = scenarios_dir().join("fig4f_purity_1p0nm.toml");
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let out = spdc(&["jsa", "--grid", "64"], &cfg, dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let first = run();
    let second = run();
    assert_eq!(first, second);
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["jsa_summary.json", "jsi.csv", "phasematching.csv", "pump_envelope.csv"]);
    let jsi = String::from_utf8(first[1].1.clone()).unwrap();
    for key in ["# tool: spdc", "# config_sha256: ", "# dispersion: ", "# quadrature: none", "# grid_points: 64"] {
        assert!(jsi.contains(key), "missing {key:?}");
    }
}

#[test]
fn json_format_writes_json_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenarios_dir().join("fig4g_purity_scan.toml");
    let out = spdc(&["purity-scan", "--format", "json", "--grid", "32"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("purity_scan.json")).unwrap()).unwrap();
    assert_eq!(table["columns"][0], "pump_fwhm_nm");
    assert_eq!(table["provenance"]["grid_points"], 32);
    assert_eq!(table["rows"].as_array().unwrap().len(), 39);
}

#[test]
fn every_scenario_parses() {
    let mut count = 0;
    for entry in std::fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            Scenario::load(&path, Overrides::default()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 11, "found {count} scenarios");
}

#[test]
fn dispersion_file_matches_builtin_model() {
    let from_file = DispersionModel::from_path(scenarios_dir().join("dispersion/ktp_kato2002.toml")).unwrap();
    assert_eq!(from_file, DispersionModel::ktp_kato_takaoka());
}
