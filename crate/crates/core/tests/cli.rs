use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use giant_atom_ssh::commands::{distribution_schema, spectrum_schema, validation_schema};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_giant-atom-ssh"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

#[test]
fn spectrum_writes_parseable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["spectrum", "--cells", "20", "--n", "10", "--m", "11", "--theta-points", "5"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let table = spectrum_schema("spectrum").parse_csv(&text).unwrap();
    assert_eq!(table.rows.len(), 5 * 41);
    assert_eq!(table.to_csv(), text);
}

#[test]
fn json_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["distribution", "--cells", "30", "--n", "15", "--m", "18", "--target", "zero", "--format", "json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("distribution.json")).unwrap();
    let table = distribution_schema().parse_json(&text).unwrap();
    assert_eq!(table.to_json().unwrap(), text);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["effective", "--cells", "16", "--n", "8", "--m", "9", "--coupling", "ab", "--theta-points", "7", "--ks-pi", "1.25,1.5"];
    assert!(run(&args, a.path()).status.success());
    assert!(run(&args, b.path()).status.success());
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 3);
    for name in names {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn empty_theta_range_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["spectrum", "--theta-start-pi", "1", "--theta-end-pi", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn validate_passes_then_fails_under_perturbation() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["validate", "--cells", "40", "--n", "20", "--m", "23", "--theta-pi", "0.8"];
    let ok = run(&base, dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let text = fs::read_to_string(dir.path().join("validation.csv")).unwrap();
    let table = validation_schema().parse_csv(&text).unwrap();
    assert!(!table.rows.is_empty());

    let mut bad = base.to_vec();
    bad.extend(["--perturb-t2", "-0.1"]);
    let o = run(&bad, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn recipes_load() {
    let recipes = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes");
    let mut count = 0;
    for entry in fs::read_dir(recipes).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            giant_atom_ssh::config::RunConfig::load(&path)
                .and_then(|c| c.validate().map(|_| c))
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 12);
}
