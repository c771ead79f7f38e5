//! End-to-end runs of the binary against problem files in temp directories:
//! exit codes, artifact schemas, determinism, and override precedence.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_semilin")
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

const SPHERE_VERIFY: &str = r#"
[geometry]
kind = "sphere"
n = 2

[problem]
f = "-2*y"
u = "cos(r)"
du = "-sin(r)"

[task]
kind = "verify"
nr = [16, 32, 64]
ntheta_factor = 2

[output]
dir = "out"
"#;

#[test]
fn verify_sphere_eigenfunction_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write(tmp.path(), "sphere.toml", SPHERE_VERIFY);
    let out = run(&["verify", problem.to_str().unwrap(), "--plots"], tmp.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let dir = tmp.path().join("out");
    let residuals = std::fs::read_to_string(dir.join("residuals.csv")).unwrap();
    assert!(residuals.starts_with("vertex,r,theta,residual\n"));
    assert!(residuals.lines().count() > 100);
    assert!(dir.join("solution.svg").exists());
    assert!(dir.join("convergence.svg").exists());

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let order = manifest["results"]["verify"]["empirical_order"].as_f64().unwrap();
    assert!(order >= 1.8, "empirical order {}", order);
}

#[test]
fn audit_negative_power_matches_expected_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write(
        tmp.path(),
        "audit.toml",
        r#"
[geometry]
kind = "euclidean"
n = 2

[problem]
f = "y^(-0.5)"

[task]
r0 = 1.0
r_box = [0.0, 1.0]
y_box = [0.0, 1.0]

[output]
dir = "out"
"#,
    );
    let out = run(&["audit", problem.to_str().unwrap()], tmp.path());
    assert!(out.status.success());
    let audit: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("out/audit.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(audit["F3"]["verdict"], "verified_numerically");
    assert_eq!(audit["F4"]["verdict"], "verified_numerically");
    // the Lipschitz box touches y = 0 where the quotients blow up
    assert_eq!(audit["F1"]["verdict"], "falsified");
    assert!(audit["F1"]["witness"].is_object());
    // stable report schema
    for key in ["condition", "verdict", "witness", "diagnostics", "samples_used"] {
        assert!(
            audit["F1"].get(key).is_some(),
            "audit report missing `{}`",
            key
        );
    }
}

#[test]
fn audit_fail_on_falsified_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write(
        tmp.path(),
        "audit.toml",
        r#"
[geometry]
kind = "euclidean"
n = 2

[problem]
f = "y^(-0.5)"

[task]
r0 = 1.0
r_box = [0.0, 1.0]
y_box = [0.0, 1.0]
fail_on_falsified = true

[output]
dir = "out"
"#,
    );
    let out = run(&["audit", problem.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    // artifacts still written before the failing exit
    assert!(tmp.path().join("out/audit.json").exists());
    assert!(tmp.path().join("out/manifest.json").exists());
}

#[test]
fn missing_geometry_names_the_key_and_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write(tmp.path(), "bad.toml", "[problem]\nf = \"-y\"\n");
    let out = run(&["solve-ivp", problem.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("geometry"), "stderr: {}", stderr);
}

const IVP_POLE: &str = r#"
[geometry]
kind = "euclidean"
n = 3

[problem]
f = "-y"

[task]
from_pole = true
u0 = 1.0
window = [0.0, 10.0]
tol = 1e-8

[output]
dir = "out"
"#;

#[test]
fn solve_ivp_from_pole_writes_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write(tmp.path(), "ivp.toml", IVP_POLE);
    let out = run(&["solve-ivp", problem.to_str().unwrap(), "--seed-free"], tmp.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(tmp.path().join("out/solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "coord,u,du");
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(first, vec![0.0, 1.0, 0.0], "pole row must be exact");
    // spot-check sin(r)/r along the file
    for line in csv.lines().skip(1).step_by(50) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let (r, u) = (cols[0], cols[1]);
        let expect = if r == 0.0 { 1.0 } else { r.sin() / r };
        assert!((u - expect).abs() < 1e-6, "u({}) = {}", r, u);
    }
}

#[test]
fn identical_runs_are_bitwise_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write(tmp.path(), "ivp.toml", IVP_POLE);
    for dir in ["a", "b"] {
        let out = run(
            &["solve-ivp", problem.to_str().unwrap(), "--out", dir],
            tmp.path(),
        );
        assert!(out.status.success());
    }
    let csv_a = std::fs::read(tmp.path().join("a/solution.csv")).unwrap();
    let csv_b = std::fs::read(tmp.path().join("b/solution.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "solution.csv must be bitwise identical");

    // manifests agree once the timing fields are stripped
    let strip = |p: &Path| -> serde_json::Value {
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    assert_eq!(
        strip(&tmp.path().join("a/manifest.json")),
        strip(&tmp.path().join("b/manifest.json"))
    );
}

#[test]
fn overrides_take_precedence_and_land_in_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write(tmp.path(), "ivp.toml", IVP_POLE);
    let out = run(
        &[
            "solve-ivp",
            problem.to_str().unwrap(),
            "--set",
            "task.tol=1e-6",
            "--set",
            "task.window=[0.0, 5.0]",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["results"]["tolerance"], 1e-6);
    let window = &manifest["results"]["solution"]["window"];
    assert_eq!(window[1], 5.0);
    let overrides = manifest["inputs"]["overrides"].as_array().unwrap();
    assert_eq!(overrides.len(), 2);
}

#[test]
fn bvp_solver_reports_residuals() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write(
        tmp.path(),
        "bvp.toml",
        r#"
[geometry]
kind = "orbit_volume"
A = "1"
domain = [0.0, 1.0]

[problem]
f = "y^(-0.5)"

[task]
alpha = 1.0
beta = 0.0
gamma = 1.0
delta = 0.0
tol = 1e-8

[output]
dir = "out"
"#,
    );
    let out = run(&["solve-bvp", problem.to_str().unwrap()], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap(),
    )
    .unwrap();
    let right = manifest["results"]["bvp"]["boundary_residual_right"].as_f64().unwrap();
    assert!(right < 1e-8);
}

#[test]
fn uniqueness_certificate_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write(
        tmp.path(),
        "uniq.toml",
        r#"
[geometry]
kind = "warped_r3"

[problem]
f = "y - abs(y)^2*y"

[task]
r0 = 0.0
R1 = -0.45
R2 = 0.45
data = [0.5, 0.0]
tol = 1e-8
tol2 = 1e-11

[output]
dir = "out"
"#,
    );
    let out = run(&["uniqueness", problem.to_str().unwrap()], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cert: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("out/certificate.json")).unwrap(),
    )
    .unwrap();
    for key in ["s0", "kappa", "lipschitz_const", "M", "delta", "intervals_covered", "max_deviation"] {
        assert!(cert.get(key).is_some(), "certificate missing `{}`", key);
    }
    let delta = cert["delta"].as_f64().unwrap();
    let m = cert["M"].as_f64().unwrap();
    assert!((delta - 1.0 / (2.0 * (1.0 + m))).abs() < 1e-15);
    assert!(cert["max_deviation"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn reduce_emits_coefficient_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write(
        tmp.path(),
        "reduce.toml",
        r#"
[geometry]
kind = "euclidean"
n = 2

[problem]
f = "0"

[task]
window = [0.5, 2.0]

[output]
dir = "out"
"#,
    );
    let out = run(&["reduce", problem.to_str().unwrap()], tmp.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(tmp.path().join("out/reduce.csv")).unwrap();
    assert!(csv.starts_with("r,drift,A\n"));
    for line in csv.lines().skip(1).step_by(37) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((cols[1] - 1.0 / cols[0]).abs() < 1e-12, "drift must be 1/r");
    }
}

#[test]
fn picard_profile_csv_from_tables_geometry() {
    // revolution geometry supplied as CSV profile tables
    let tmp = tempfile::tempdir().unwrap();
    let mut r_table = String::from("t,R\n");
    let mut z_table = String::from("t,Z\n");
    for i in 0..=40 {
        let t = i as f64 / 20.0;
        r_table.push_str(&format!("{},{}\n", t, 1.0 + 0.1 * t));
        z_table.push_str(&format!("{},{}\n", t, t));
    }
    write(tmp.path(), "r.csv", &r_table);
    write(tmp.path(), "z.csv", &z_table);
    let problem = write(
        tmp.path(),
        "geom.toml",
        r#"
[geometry]
kind = "revolution"
profile_r_csv = "r.csv"
profile_z_csv = "z.csv"

[problem]
f = "0"

[output]
dir = "out"
"#,
    );
    let out = run(&["reduce", problem.to_str().unwrap()], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/reduce.csv")).unwrap();
    // A = 2π R with R ≥ 1 on this profile
    let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(row[2] >= 2.0 * std::f64::consts::PI - 1e-6);
}
