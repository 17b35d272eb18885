//! End-to-end runs of the `dyson` binary.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn dyson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyson")).args(args).output().expect("binary runs")
}

fn run(name: &str, out: &Path, extra: &[&str]) -> Output {
    let file = bundled(name);
    let mut args = vec!["run", file.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    dyson(&args)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn check<'a>(summary: &'a Value, name: &str) -> &'a Value {
    summary["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn s1_passes_and_outputs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let first = run("s1", &a, &[]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let s = summary(&a);
    assert_eq!(s["passed"], true);
    assert!(check(&s, "metric_constancy")["value"].as_f64().unwrap() <= 1e-6);
    assert_eq!(s["pt"]["phase"], "UNBROKEN");

    let csv = std::fs::read_to_string(a.join("series.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for col in ["t", "u_re", "u_im", "f", "theta_re", "theta_im", "chi", "phi0", "phi3", "metric_constancy"] {
        assert!(header.contains(&col), "missing column {col}");
    }
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1001);
    let last_t: f64 = rows[1000].split(',').next().unwrap().parse().unwrap();
    assert_eq!(last_t, 2.0 * PI);
    // 17 significant digits: one before the point and 16 after
    let mantissa = rows[1].split(',').next().unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.len(), 18, "{mantissa}");

    let second = run("s1", &b, &[]);
    assert_eq!(second.status.code(), Some(0));
    for file in ["series.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn s2_fails_naming_the_broken_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("s2", tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let s = summary(tmp.path());
    let failed: Vec<&str> = s["failed"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for name in ["constraint_ii_alpha_beta_real", "quasi_hermiticity_r7", "metric_constancy"] {
        assert!(failed.contains(&name), "{name} not in {failed:?}");
    }
    assert!(!failed.contains(&"quasi_hermiticity_r2"));
    assert_eq!(s["pt"]["phase"], "BROKEN");
}

#[test]
fn kappa_zero_control_passes_with_tiny_residuals() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("kappa_zero", tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(tmp.path());
    for c in s["checks"].as_array().unwrap() {
        if c["kind"] == "perturbative" {
            assert!(c["value"].as_f64().unwrap() <= 1e-8, "{c}");
        }
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let s1 = bundled("s1");
    let s1 = s1.to_str().unwrap();
    let o = dyson(&["diagnose", s1, "--set", "kappa=-0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kappa"), "{}", stderr(&o));

    let o = dyson(&["diagnose", s1, "--set", "omega_typo=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did you mean `omega`"), "{}", stderr(&o));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    let text = "omega_typo = 1.0\n".to_string() + &std::fs::read_to_string(s1).unwrap();
    std::fs::write(&bad, text).unwrap();
    let o = dyson(&["pt-phase", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("omega_typo") && stderr(&o).contains("`omega`"), "{}", stderr(&o));

    std::fs::write(&bad, "schema = 1\nkappa = [\n").unwrap();
    let o = dyson(&["pt-phase", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.toml:"), "{}", stderr(&o));

    let o = Command::new(env!("CARGO_BIN_EXE_dyson"))
        .args(["pt-phase", s1])
        .env("DYSON_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exits_with_three() {
    let s1 = bundled("s1");
    let o = dyson(&["diagnose", s1.to_str().unwrap(), "--set", "omega=[1, 20]", "--set", "grid.steps=100"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
}

fn sweep(name: &str, axis: &str, extra: &[&str]) -> Vec<Vec<String>> {
    let file = bundled(name);
    let mut args = vec!["sweep", file.to_str().unwrap(), "--axis", axis];
    args.extend_from_slice(extra);
    let o = Command::new(env!("CARGO_BIN_EXE_dyson"))
        .args(&args)
        .env("DYSON_WORKERS", "4")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn pt_sweep_flips_at_a_quarter_turn() {
    let axis = format!("alpha.arg:0:{PI}:41");
    let rows = sweep("pt_sweep", &axis, &["--set", "grid.steps=200", "--set", "dim=16"]);
    assert_eq!(rows.len(), 41);
    for (j, row) in rows.iter().enumerate() {
        let phi: f64 = row[0].parse().unwrap();
        assert_eq!(phi, PI * j as f64 / 40.0);
        assert_eq!(row[1], if j == 20 { "UNBROKEN" } else { "BROKEN" }, "phi={phi}");
        for m in 0..4 {
            let im: f64 = row[2 + m].parse().unwrap();
            assert!((im - 0.02 * phi.cos().abs()).abs() <= 1e-10, "phi={phi} m={m}: {im}");
        }
    }
}

#[test]
fn single_point_sweep_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let extra = ["--set", "grid.steps=200", "--set", "dim=16"];
    let o = run("s1", tmp.path(), &extra);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(tmp.path());
    let rows = sweep("s1", "kappa:0.1:0.3:1", &extra);
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!(row[0].parse::<f64>().unwrap(), 0.1);
    assert_eq!(row[1], s["pt"]["phase"].as_str().unwrap());
    let metric = check(&s, "metric_constancy")["value"].as_f64().unwrap();
    assert_eq!(row[6].parse::<f64>().unwrap(), metric);
    for m in 0..4 {
        assert_eq!(row[2 + m].parse::<f64>().unwrap(), s["pt"]["max_imag_energy"][m].as_f64().unwrap());
    }
    let iso = ["isospectrality_m0", "isospectrality_m1"]
        .iter()
        .map(|n| check(&s, n)["value"].as_f64().unwrap())
        .fold(0.0, f64::max);
    assert_eq!(row[7].parse::<f64>().unwrap(), iso);
}

#[test]
fn sweep_axis_must_exist() {
    let file = bundled("s1");
    let o = dyson(&["sweep", file.to_str().unwrap(), "--axis", "kapa:0:1:3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did you mean `kappa`"), "{}", stderr(&o));
}

#[test]
fn pt_phase_reports_labels() {
    let o = dyson(&["pt-phase", bundled("s2").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("phase BROKEN"));
    let o = dyson(&["pt-phase", bundled("s1").to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("phase UNBROKEN"));
}
