use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wavekin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavekin"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const SMALL: &str = r#"{
  "grid": {"N": 4},
  "physics": {"eta": "sqrt2", "eps": 0.2, "delta": 0.55, "alpha": 1},
  "coarse": {"h": 0.25},
  "run": {"T": 0.5, "t_max": 1.0, "dt": 0.05, "ensemble": 16, "seed": 3, "save_every": 10},
  "kinetic": {"mesh_dx": 0.1},
  "output": {"dir": "results"}
}"#;

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), SMALL).unwrap();
    dir
}

#[test]
fn compare_writes_configured_directory() {
    let d = setup();
    let o = wavekin(d.path(), &["compare", "--config", "c.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = d.path().join("results");
    for f in ["fluctuations.csv", "modes.csv", "kinetic.csv", "report.json", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let csv = fs::read_to_string(out.join("fluctuations.csv")).unwrap();
    assert!(csv.starts_with("t,tau,K_x,K_y,F_mc,F_kin,abs_err,stderr\n"));
    assert!(csv.lines().count() > 1);

    fs::remove_file(out.join("heatmap_F.svg")).unwrap();
    let o = wavekin(d.path(), &["plot", "--dir", "results"]);
    assert_eq!(code(&o), 0);
    assert!(out.join("heatmap_F.svg").is_file());
}

#[test]
fn malformed_config_names_the_invariant() {
    let d = setup();
    fs::write(d.path().join("bad.json"), SMALL.replace("\"h\": 0.25", "\"h\": 0.1")).unwrap();
    let o = wavekin(d.path(), &["compare", "--config", "bad.json"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("h >= 1/N"), "{err}");

    fs::write(d.path().join("typo.json"), r#"{"grid": {"N": 4, "M": 1}}"#).unwrap();
    assert_eq!(code(&wavekin(d.path(), &["simulate", "--config", "typo.json"])), 1);
    assert_eq!(code(&wavekin(d.path(), &["simulate", "--config", "missing.json"])), 1);
}

#[test]
fn dry_run_writes_nothing() {
    let d = setup();
    for cmd in ["simulate", "compare", "sample-check", "kinetic"] {
        let o = wavekin(d.path(), &[cmd, "--config", "c.json", "--dry-run"]);
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let plan: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(plan["plan"]["n_steps"].is_number());
    }
    let o = wavekin(d.path(), &["census", "--mode", "denominators", "--N", "4", "--out", "den.csv", "--dry-run"]);
    assert_eq!(code(&o), 0);
    let entries: Vec<_> = fs::read_dir(d.path()).unwrap().collect();
    assert_eq!(entries.len(), 1, "only the config remains");
}

#[test]
fn unknown_flags_print_usage_and_exit_one() {
    let d = setup();
    let o = wavekin(d.path(), &["simulate", "--config", "c.json", "--frobnicate"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&wavekin(d.path(), &["simulate"])), 1);
    assert_eq!(code(&wavekin(d.path(), &["--help"])), 0);
}

#[test]
fn grid_dump_without_config() {
    let d = setup();
    let o = wavekin(d.path(), &["grid", "--N", "4", "--dump", "modes.csv"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(d.path().join("modes.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("i,j,k_x,k_y,omega,gamma,psi"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first.len(), 7);
    assert!((first[2] - first[0] / 4.0).abs() < 1e-15);
}

#[test]
fn census_modes() {
    let d = setup();
    let o = wavekin(d.path(), &["census", "--mode", "denominators", "--eta", "sqrt2", "--N", "4,8", "--out", "den.csv"]);
    assert_eq!(code(&o), 0);
    let den = fs::read_to_string(d.path().join("den.csv")).unwrap();
    assert_eq!(den.lines().count(), 3);

    let o = wavekin(d.path(), &["census", "--mode", "modulus", "--m-index", "6,2", "--N", "4", "--out", "rmod.csv"]);
    assert_eq!(code(&o), 0);
    let rmod = fs::read_to_string(d.path().join("rmod.csv")).unwrap();
    assert!(rmod.starts_with("j_i,j_j,k_i,k_j,l_i,l_j,class\n"));
    assert!(rmod.contains("3,-2,6,-2,3,2,x_swap_family"));

    let o = wavekin(d.path(), &["census", "--mode", "modulus", "--m-index", "1,0", "--N", "4"]);
    assert_eq!(code(&o), 1, "m outside the domain");
    let o = wavekin(d.path(), &["census", "--mode", "denominators", "--eta", "-3"]);
    assert_eq!(code(&o), 1);

    let o = wavekin(d.path(), &["census", "--mode", "curve", "--m", "1.2,0", "--z", "0", "--n-sigma", "10"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("sigma,branch,p_x,p_y,weight\n"));
}

#[test]
fn sample_check_and_kinetic_tables() {
    let d = setup();
    let o = wavekin(d.path(), &["sample-check", "--config", "c.json", "--ensemble", "64", "--out", "check.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let check = fs::read_to_string(d.path().join("check.csv")).unwrap();
    assert!(check.starts_with("k_x,k_y,gamma,target_variance,sample_mean_action,stderr\n"));
    let footer = check.lines().last().unwrap().trim_start_matches("# ");
    let footer: serde_json::Value = serde_json::from_str(footer).unwrap();
    assert!(footer["chi_square"].as_f64().unwrap() > 0.0);

    let o = wavekin(d.path(), &["kinetic", "--config", "c.json", "--form", "lorentzian", "--lambda", "0.9", "--out", "kin.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let kin = fs::read_to_string(d.path().join("kin.csv")).unwrap();
    assert!(kin.starts_with("tau,m_x,m_y,f\n"));
    let o = wavekin(d.path(), &["kinetic", "--config", "c.json", "--lambda", "-1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let d = setup();
    fs::write(d.path().join("blocker"), "").unwrap();
    let o = wavekin(d.path(), &["simulate", "--config", "c.json", "--out", "blocker/sub"]);
    assert_eq!(code(&o), 2);
}
