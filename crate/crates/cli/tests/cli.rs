use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn autores(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_autores"))
        .current_dir(dir)
        .args(args)
        .env_remove("AUTORES_OUT_DIR")
        .output()
        .unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# autores "));
    lines.skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn equilibria_examples() {
    let tmp = TempDir::new().unwrap();
    for (delta, nu, want) in [("1", "0", 4), ("0.3", "0", 2), ("0", "1.0", 2)] {
        let o = autores(tmp.path(), &["equilibria", "--delta", delta, "--nu", nu]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let rows = data_rows(&tmp.path().join("out/equilibria.csv"));
        assert_eq!(rows.len(), want, "delta={delta}");
    }
    let rows = data_rows(&tmp.path().join("out/equilibria.csv"));
    let psi: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(psi[0].abs() < 1e-12 && (psi[1] - std::f64::consts::PI).abs() < 1e-11);
}

#[test]
fn equilibria_from_model_flags() {
    let tmp = TempDir::new().unwrap();
    let o = autores(tmp.path(), &["equilibria", "--lambda", "4", "--mu0", "0.5", "--nu", "0"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("roots = 4"));
}

#[test]
fn invalid_arguments_exit_2() {
    let tmp = TempDir::new().unwrap();
    let o = autores(tmp.path(), &["equilibria", "--delta", "1", "--nu", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn malformed_config_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    for text in ["[model\nlambda = 1", "[model]\nlamda = 1.0\n", "[run]\ntau0 = \"soon\"\n", "[output]\ndirectory = \"o\"\ncolour = 1\n"] {
        let cfg = write_config(tmp.path(), text);
        let o = autores(tmp.path(), &["simulate", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!tmp.path().join("out").exists());
        assert!(!tmp.path().join("o").exists());
    }
    let o = autores(tmp.path(), &["simulate", "--config", "does-not-exist.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_physics_in_config_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[model]\nnu = 3.5\n");
    let o = autores(tmp.path(), &["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(tmp.path(), "[duffing]\neps = 0.5\n");
    assert_eq!(autores(tmp.path(), &["duffing", "--config", &cfg]).status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn dry_run_validates_without_writing() {
    let tmp = TempDir::new().unwrap();
    for cmd in ["equilibria", "bifurcation-scan", "simulate", "basin", "lyapunov-check", "freq-check", "threshold-sweep", "duffing", "demo-es", "asymptotics"] {
        let o = autores(tmp.path(), &[cmd, "--dry-run"]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("configuration ok"));
    }
    assert!(!tmp.path().join("out").exists());
    let cfg = write_config(tmp.path(), "[scan]\ndelta_n = 0\n");
    assert_eq!(autores(tmp.path(), &["bifurcation-scan", "--dry-run", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn precondition_and_budget_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let o = autores(tmp.path(), &["simulate", "--tau0", "100", "--tau-max", "200"]);
    assert_eq!(o.status.code(), Some(4));
    let cfg = write_config(tmp.path(), "[run]\nmax_steps = 5\n");
    let o = autores(tmp.path(), &["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let o = autores(tmp.path(), &["duffing", "--t-max", "1e6"]);
    assert_eq!(o.status.code(), Some(4));
    let o = autores(tmp.path(), &["lyapunov-check", "--psi0", "0"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn simulate_verdicts() {
    let tmp = TempDir::new().unwrap();
    let o = autores(tmp.path(), &["simulate", "--out-dir", "cap"]);
    assert!(o.status.success());
    let v = json(&tmp.path().join("cap/verdict.json"));
    assert_eq!(v["result"]["verdict"]["kind"]["kind"], "captured");
    assert_eq!(v["command"], "simulate");
    assert!(data_rows(&tmp.path().join("cap/trajectory.csv")).len() == 2001);

    let cfg = write_config(tmp.path(), "[run.start]\nkind = \"state\"\nrho = 0.05\npsi = 0.0\n");
    let o = autores(tmp.path(), &["simulate", "--config", &cfg, "--out-dir", "esc"]);
    assert!(o.status.success());
    let v = json(&tmp.path().join("esc/verdict.json"));
    assert_eq!(v["result"]["verdict"]["kind"]["kind"], "escaped");
}

#[test]
fn output_directory_precedence() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[output]\ndirectory = \"from_cfg\"\n");
    let run = |args: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_autores"));
        c.current_dir(tmp.path()).args(args).env_remove("AUTORES_OUT_DIR");
        if let Some(e) = env {
            c.env("AUTORES_OUT_DIR", e);
        }
        assert!(c.output().unwrap().status.success());
    };
    let base = ["demo-es", "--config", cfg.as_str()];
    run(&base, None);
    assert!(tmp.path().join("from_cfg/demo_es.csv").exists());
    run(&base, Some("from_env"));
    assert!(tmp.path().join("from_env/demo_es.csv").exists());
    let mut with_flag = base.to_vec();
    with_flag.extend(["--out-dir", "from_flag"]);
    run(&with_flag, Some("from_env2"));
    assert!(tmp.path().join("from_flag/demo_es.csv").exists());
    assert!(!tmp.path().join("from_env2").exists());
    run(&["demo-es"], None);
    assert!(tmp.path().join("out/demo_es.csv").exists());
}

#[test]
fn demo_es_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let o = autores(tmp.path(), &["demo-es", "--a0", "1", "--b0", "1", "--t1", "16"]);
    assert!(o.status.success());
    let v = json(&tmp.path().join("out/demo_es.json"));
    let r = &v["result"];
    let a = r["final_state"][0].as_f64().unwrap();
    assert!((a - 8f64.exp() / 16.0).abs() / a < 1e-6);
    assert!((r["final_state"][1].as_f64().unwrap() - 0.25).abs() < 1e-6);
    assert_eq!(r["eigenvalues_negative"], true);
}

#[test]
fn freq_check_limit() {
    let tmp = TempDir::new().unwrap();
    let o = autores(tmp.path(), &["freq-check", "--h", "1e-4"]);
    assert!(o.status.success());
    let rows = data_rows(&tmp.path().join("out/freq.csv"));
    assert_eq!(rows.len(), 1);
    let w: f64 = rows[0][1].parse().unwrap();
    let limit = json(&tmp.path().join("out/freq.json"))["result"]["omega_limit"].as_f64().unwrap();
    assert!((limit - 2f64.sqrt()).abs() < 1e-12);
    assert!((w - limit).abs() < 1e-3);
}

#[test]
fn open_levels_have_empty_frequency() {
    let tmp = TempDir::new().unwrap();
    let o = autores(tmp.path(), &["freq-check", "--h", "0.1,5.0"]);
    assert!(o.status.success());
    let rows = data_rows(&tmp.path().join("out/freq.csv"));
    assert_ne!(rows[0][1], "nan");
    assert_eq!(rows[1][1], "");
}

#[test]
fn bifurcation_scan_boundary_crosses_half() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[scan]\ndelta_min = -1.0\ndelta_max = 1.0\ndelta_n = 41\nnu_n = 12\n");
    let o = autores(tmp.path(), &["bifurcation-scan", "--config", &cfg]);
    assert!(o.status.success());
    let rows = data_rows(&tmp.path().join("out/bifurcation_scan.csv"));
    assert_eq!(rows.len(), 41 * 12);
    for r in rows.iter().filter(|r| r[1].parse::<f64>().unwrap() == 0.0) {
        let d: f64 = r[0].parse().unwrap();
        let want = if (d.abs() - 0.5).abs() < 1e-9 {
            if d < 0.0 { "Gamma-" } else { "Gamma+" }
        } else if d.abs() < 0.5 {
            "Omega-"
        } else {
            "Omega+"
        };
        assert_eq!(r[3], want, "delta = {d}");
    }
    assert_eq!(rows[0].len(), 13);
}

#[test]
fn threshold_sweep_agrees() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[threshold]\nn = 5\n");
    let o = autores(tmp.path(), &["threshold-sweep", "--config", &cfg]);
    assert!(o.status.success());
    let rows = data_rows(&tmp.path().join("out/threshold.csv"));
    assert_eq!(rows.len(), 5);
    for r in rows.iter().filter(|r| !r[4].is_empty()) {
        assert_eq!(r[4], "true", "{r:?}");
    }
    assert_eq!(rows[0][2], "unstable");
    assert_eq!(rows[4][2], "stable");
}

#[test]
fn asymptotics_reports_coefficients() {
    let tmp = TempDir::new().unwrap();
    assert!(autores(tmp.path(), &["asymptotics"]).status.success());
    let c = data_rows(&tmp.path().join("out/asymptotics_coeffs.csv"));
    let v: Vec<f64> = c[0].iter().map(|x| x.parse().unwrap()).collect();
    assert!((v[2] - 0.5).abs() < 1e-12 && (v[4] + 0.5).abs() < 1e-12 && (v[6] + 1.0 / 48.0).abs() < 1e-12);
    let r = json(&tmp.path().join("out/asymptotics.json"));
    assert!((r["result"]["rho_slope"].as_f64().unwrap() + 2.0).abs() < 0.1);
}

#[test]
fn duffing_single_datum() {
    let tmp = TempDir::new().unwrap();
    let o = autores(tmp.path(), &["duffing", "--u0", "-2", "--v0", "2", "--t-max", "400"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&tmp.path().join("out/duffing_0.csv"));
    assert_eq!(rows.len(), 8001);
    assert!(!tmp.path().join("out/duffing_1.csv").exists());
    let v = json(&tmp.path().join("out/duffing.json"));
    assert_eq!(v["result"].as_array().unwrap().len(), 1);
}
