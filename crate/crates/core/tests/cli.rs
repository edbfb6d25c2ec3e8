use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ibvp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ibvp"))
        .args(args)
        .output()
        .expect("spawn ibvp")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

const FIG1: &str = r#"length = 1.0
weight = "sin(3*pi*x)"
mu = 0.5
g = "max(0, 100*s*atan(abs(s)))"
d_min = 0.0
d_max = 5.0
slope_grid = 500
"#;

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn repro_fig1_passes() {
    let out = ibvp(&["repro-fig1"]);
    let stdout = text(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}{}", text(&out.stderr));
    assert!(stdout.contains("count=3"));
    assert!(stdout.contains("PASS"));
}

#[test]
fn eig_on_constant_weight_gives_pi_squared() {
    let out = ibvp(&["eig", "--set", "length=1", "--set", "weight=1"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    let mut rows = stdout.lines();
    assert_eq!(rows.next(), Some("name,start,end,lambda"));
    let first: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert_eq!(first[0], "lambda0");
    let lambda: f64 = first[3].parse().unwrap();
    assert!((lambda - 9.8696044).abs() < 1e-7);
}

#[test]
fn malformed_expression_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &FIG1.replace("sin(3*pi*x)", "sin(3*pi*x"));
    let out = ibvp(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("`weight`"), "{err}");
    assert!(err.contains("byte 10"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let out = ibvp(&["solve", "--set", "lenght=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("lenght"));
}

#[test]
fn solve_writes_reports_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FIG1);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for target in [&a, &b] {
        let out = ibvp(&["solve", "--config", &cfg, "--out", target.to_str().unwrap(), "--threads", "2"]);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
        assert!(text(&out.stdout).contains("count=3"));
    }
    for name in ["report.json", "solution_1.csv", "solution_2.csv", "solution_3.csv"] {
        let x = fs::read(a.join(name)).unwrap();
        let y = fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
    let csv = fs::read_to_string(a.join("solution_1.csv")).unwrap();
    assert!(csv.starts_with("x,u,u_prime\n"));
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 2002);

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["count"], 3);
    assert_eq!(report["prediction_met"], true);
    assert_eq!(report["coverage"].as_array().unwrap().len(), 3);
}

#[test]
fn sweep_emits_csv() {
    let out = ibvp(&["sweep", "--set", "length=1", "--set", "weight=sin(3*pi*x)", "--set", "mu=[0.5, 1.0]",
        "--set", "g=max(0, 100*s*atan(abs(s)))"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "mu,count,signatures,slopes");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("5.0000000000000000e-1,3,"));
    assert!(text(&out.stderr).contains("mu_hat=5.0000000000000000e-1"));
}

#[test]
fn check_prints_hypothesis_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FIG1);
    let out = ibvp(&["check", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["small_verdict"], "PASS");
    assert_eq!(v["large_verdict"], "PASS");
    assert_eq!(v["caveat"], "numeric limit estimate");
}

#[test]
fn radial_writes_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = ibvp(&[
        "radial", "--set", "dim=2", "--set", "r1=1", "--set", "r2=2.718281828459045", "--set", "weight=1",
        "--set", "g=s^3", "--set", "d_max=50", "--set", "slope_grid=1000", "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("radial_1.csv")).unwrap();
    assert!(csv.starts_with("r,v,v_prime\n"));
    assert!(out_dir.join("solution_1.csv").exists());
}

#[test]
fn numeric_failure_exits_one_with_module() {
    let out = ibvp(&["solve", "--set", "length=1", "--set", "weight=-1", "--set", "g=s^3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("[weights]"), "{}", text(&out.stderr));
}

#[test]
fn help_lists_every_key() {
    for sub in ["check", "eig", "solve", "sweep", "radial", "repro-fig1"] {
        let out = ibvp(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0));
        let help = text(&out.stdout);
        for key in [
            "length", "weight", "mu", "sigma, tau", "g(s)", "d_min, d_max", "slope_grid", "rtol, atol", "bc_tol",
            "sign_tol", "curv_tol", "decomp_grid", "u_cap", "output_points", "delta_fraction", "r_grid",
            "s_lo, s_hi", "eig_rel_tol", "out_dir", "dim, r1, r2",
        ] {
            assert!(help.contains(key), "`{sub} --help` misses {key}");
        }
    }
}
