use std::path::Path;
use std::process::{Command, Output};

use hho_brinkman::verification::CSV_HEADER;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_brinkman-hho"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn generated_cartesian_mesh_has_n_squared_cells() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let o = run(&["generate-mesh", "--kind", "cartesian", "--n", "4", "-o", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mesh = json(&path);
    assert_eq!(mesh["cells"].as_array().unwrap().len(), 16);
}

#[test]
fn seeded_generation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<_> = ["a.json", "b.json"]
        .iter()
        .map(|name| {
            let p = dir.path().join(name);
            let o = run(&["generate-mesh", "--kind", "agglomerated", "--n", "4", "--seed", "7", "-o", p.to_str().unwrap()]);
            assert!(o.status.success(), "{}", stderr(&o));
            std::fs::read(p).unwrap()
        })
        .collect();
    assert_eq!(files[0], files[1]);
}

#[test]
fn zero_cells_per_side_is_rejected_with_the_parameter_name() {
    let o = run(&["generate-mesh", "--n", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`n`"), "{}", stderr(&o));
}

#[test]
fn missing_mesh_file_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    let o = run(&["run", "--mesh-file", missing.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not found"));
}

#[test]
fn unknown_case_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--case", "nonsense", "--n", "2", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn convergence_csv_has_the_documented_header() {
    let o = run(&["convergence", "--k", "0", "--levels", "2,4,8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().next().unwrap(), CSV_HEADER);
    assert_eq!(out.lines().count(), 4);
}

#[test]
fn polynomial_case_is_reproduced_to_round_off() {
    for case in ["polynomial-stokes", "polynomial-darcy"] {
        let o = run(&["convergence", "--case", case, "--k", "1", "--kind", "agglomerated", "--levels", "2,4,8"]);
        assert!(o.status.success(), "{}", stderr(&o));
        for e in csv_column(&stdout(&o), "EnergyError") {
            assert!(e <= 1e-8, "{case}: {e}");
        }
    }
}

#[test]
fn blend_error_decreases_under_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let error = |n: &str| {
        let out = dir.path().join(n);
        let o = run(&["run", "--case", "blend", "--k", "1", "--n", n, "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        json(&out.join("report.json"))["error"]["relative_error"].as_f64().unwrap()
    };
    let (coarse, fine) = (error("4"), error("8"));
    assert!(fine < coarse, "{fine} >= {coarse}");
}

#[test]
fn zero_data_run_reports_zero_norms() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--case", "zero", "--n", "4", "-o", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["velocity_energy_norm"].as_f64(), Some(0.0));
    assert_eq!(report["pressure_norm"].as_f64(), Some(0.0));
    assert!(report["error"].is_null());
    assert!(report["note"].is_string());
    for name in ["solution.json", "solution.csv"] {
        assert!(dir.path().join(name).exists());
    }
}

#[test]
fn cavity_demo_writes_one_row_per_level_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["cavity-demo", "--levels", "1", "--orders", "0,1", "-o", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("cavity.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "Level,Order,MeshSize,NbElements,CondensedDofs,Flux,FarFieldRatio");
    assert_eq!(csv.lines().count(), 3);
    for flux in csv_column(&csv, "Flux") {
        assert!(flux.abs() < 1e-6, "{flux}");
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"mesh": {"kind": "triangular", "n": 2}, "k": 0, "case": "zero"}"#).unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--n", "3", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&out.join("report.json"));
    assert_eq!(report["k"].as_u64(), Some(0));
    assert_eq!(report["case"].as_str(), Some("zero"));
    assert_eq!(report["n_elements"].as_u64(), Some(18));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"degree": 2}"#).unwrap();
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
