use std::fs;
use std::path::Path;
use std::process::Command;

use gibbslz::cli::{run, EXIT_OK, EXIT_PARTIAL};
use gibbslz::config::parse_config_with;

fn config_in(dir: &Path, text: &str, extra: &[&str]) -> gibbslz::config::RunConfig {
    let mut overrides: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
    overrides.push(format!("output_dir={}", dir.display()));
    parse_config_with(text, &overrides).unwrap()
}

const BOSE: &str = "statistics = bose\nbeta = 1\nmu = 1\n";

#[test]
fn sweep_emits_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(
        dir.path(),
        BOSE,
        &["experiment=sweep", "L=2^12, 2^14", "seeds=3", "estimators=grassberger, lz"],
    );
    let out = run(&cfg).unwrap();
    assert_eq!(out.exit_code, EXIT_OK);
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    for name in ["grassberger", "lz"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(&format!("{name},"))).count(), 6);
    }
    // the summary prints the CSV values verbatim
    for r in &rows {
        let value = r.split(',').nth(8).unwrap();
        assert!(out.summary.contains(value), "{value} missing from summary");
    }
}

#[test]
fn entropy_box_below_full_space() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path(), BOSE, &["experiment=entropy", "L=1024, 4096", "zeta=0.5"]);
    assert_eq!(run(&cfg).unwrap().exit_code, EXIT_OK);
    let csv = fs::read_to_string(dir.path().join("entropy.csv")).unwrap();
    let value = |kind: &str| -> f64 {
        let row = csv.lines().find(|l| l.starts_with(kind)).unwrap();
        row.split(',').nth(3).unwrap().parse().unwrap()
    };
    assert!(value("box,") <= value("full,"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("riemann,")).count(), 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let extra = ["experiment=sweep", "L=512, 1024", "seeds=2", "estimators=grassberger, lz, aep"];
    run(&config_in(a.path(), BOSE, &extra)).unwrap();
    run(&config_in(b.path(), BOSE, &extra)).unwrap();
    for name in ["report.csv", "summary.txt"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
}

#[test]
fn refused_cells_give_partial_exit() {
    let dir = tempfile::tempdir().unwrap();
    // the eigenvalue oracle refuses bosons
    let cfg = config_in(dir.path(), BOSE, &["experiment=eigencount", "L=64"]);
    let out = run(&cfg).unwrap();
    assert_eq!(out.exit_code, EXIT_PARTIAL);
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_gibbslz");
    let dir = tempfile::tempdir().unwrap();
    let out_dir = format!("output_dir={}", dir.path().display());

    let bad = Command::new(bin)
        .args(["sweep", "--set", "statistics=bose", "--set", "mu=-1", "--set", &out_dir])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("mu"));

    let good = Command::new(bin)
        .args(["lz", "--set", "statistics=fermi", "--set", "mu=0", "--set", "L=256", "--seed", "9"])
        .args(["--set", &out_dir])
        .output()
        .unwrap();
    assert_eq!(good.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("lz,fermi,1,"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        if let Err(issues) = parse_config_with(&text, &[]) {
            panic!("{}: {issues:?}", path.display());
        }
        seen += 1;
    }
    assert!(seen >= 4);
}
