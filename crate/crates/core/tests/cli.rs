use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ltem(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltem"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("LTEM_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const SMALL: &[&str] = &["--ref", "9", "--ladder", "8,7,6,5", "--paths", "64"];

fn converge_args<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["converge", "--model", "lv2"];
    v.extend_from_slice(SMALL);
    v.extend_from_slice(extra);
    v
}

#[test]
fn converge_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltem(&converge_args(&["--format", "csv+svg"]), dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let errors = fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    let lines: Vec<&str> = errors.lines().collect();
    assert_eq!(lines[0], "scheme,dt_exponent,error,stderr,failures");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("ltem,8,"));

    let rate = fs::read_to_string(dir.path().join("rate.csv")).unwrap();
    assert!(rate.starts_with("scheme,slope,intercept,r2\nltem,"));
    let plot = fs::read_to_string(dir.path().join("plotdata.csv")).unwrap();
    assert!(plot.starts_with("scheme,log2dt,log2error,ref_slope_half,ref_slope_one\n"));
    assert_eq!(plot.lines().count(), 5);
    assert!(fs::read_to_string(dir.path().join("convergence.svg")).unwrap().starts_with("<svg"));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "converge");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["config"]["ref_exponent"], 9);
    assert_eq!(manifest["valid"], true);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&ltem(&converge_args(&["--workers", "1"]), &a)), 0);
    assert_eq!(code(&ltem(&converge_args(&["--workers", "3"]), &b)), 0);
    for f in ["errors.csv", "rate.csv", "plotdata.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let hash = |p: &Path| {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("manifest.json")).unwrap()).unwrap();
        v["config_sha256"].clone()
    };
    assert_eq!(hash(&a), hash(&b));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("env"), dir.path().join("flag"));
    let o = Command::new(env!("CARGO_BIN_EXE_ltem"))
        .args(converge_args(&[]))
        .arg("--out")
        .arg(&a)
        .env("LTEM_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(code(&ltem(&converge_args(&["--seed", "7"]), &b)), 0);
    assert_eq!(fs::read(a.join("errors.csv")).unwrap(), fs::read(b.join("errors.csv")).unwrap());

    let o = Command::new(env!("CARGO_BIN_EXE_ltem"))
        .args(converge_args(&[]))
        .arg("--out")
        .arg(dir.path().join("bad"))
        .env("LTEM_SEED", "seven")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "model = \"lv2\"\nref = 9\nladder = [8, 7, 6]\npaths = 32\nseed = 5\n").unwrap();
    let out = dir.path().join("o");
    let o = ltem(&["converge", "--config", cfg.to_str().unwrap(), "--paths", "16"], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["paths"], 16);
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["config"]["ladder"], serde_json::json!([8, 7, 6]));

    fs::write(&cfg, "model = \"lv2\"\nunknown_key = 1\n").unwrap();
    let o = ltem(&["converge", "--config", cfg.to_str().unwrap()], &dir.path().join("x"));
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&ltem(&["converge"], &out)), 2);
    assert_eq!(code(&ltem(&["converge", "--model", "lv9"], &out)), 2);
    assert_eq!(code(&ltem(&["positivity", "--model", "lv2", "--paths", "0"], &out)), 2);
    assert_eq!(code(&ltem(&["converge", "--model", "lv2", "--ref", "6", "--ladder", "8"], &out)), 2);
    assert_eq!(code(&ltem(&["converge", "--model", "lv2", "--policy", "ex1-eps0.9"], &out)), 2);
    assert_eq!(code(&ltem(&["bogus"], &out)), 2);
    assert!(!out.exists());
}

#[test]
fn unwritable_output_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = ltem(&converge_args(&[]), &blocker.join("sub"));
    assert_eq!(code(&o), 3);
    assert_eq!(fs::read_to_string(&blocker).unwrap(), "x");
}

#[test]
fn positivity_tables_for_the_strongly_driven_two_species_model() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltem(
        &[
            "positivity", "--model", "lv2-fig2", "--policy", "fig2-eps0.25", "--cells", "2:5,2:6", "--paths", "300",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.path().join("positivity.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("scheme,component,T,dt_exponent,percent"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8);
    for r in rows.iter().filter(|r| r[0] == "ltem") {
        assert_eq!(r[4], "0");
    }
    assert!(rows.iter().any(|r| r[0] == "tem" && r[4].parse::<f64>().unwrap() > 0.0));

    let traj = fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("scheme,path,step,t,y1,y2"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // 10 paths of 65 grid points per scheme
    assert_eq!(rows.len(), 2 * 10 * 65);
    let below = |scheme: &str| {
        rows.iter()
            .filter(|r| r[0] == scheme)
            .any(|r| r[4..].iter().any(|v| v.parse::<f64>().unwrap() <= 0.0))
    };
    assert!(below("tem"));
    assert!(!below("ltem"));
}

#[test]
fn check_verdicts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = ltem(&["check", "--model", "lv2", "--samples", "2000"], out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("overall: pass"));

    // J must exceed p
    assert_eq!(code(&ltem(&["check", "--model", "lv2", "--p", "4", "--big-j", "4"], out)), 2);

    // Δ^{1/2} η(Δ) exceeds the bound constant at the coarsest step
    let o = ltem(&["check", "--model", "lv2", "--bound-const", "100", "--samples", "500"], out);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("dt=2^-6  scaled bound 209.887902 <= 100: FAIL"));

    // the lower boundary clause of the two-species model fails once K >= 3
    let o = ltem(
        &["check", "--model", "lv2", "--big-j", "100", "--big-k", "100", "--samples", "2000"],
        out,
    );
    assert_eq!(code(&o), 1);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("lower-boundary") && text.contains("FAIL"));
    assert!(text.lines().filter(|l| l.contains("dt=2^-")).all(|l| !l.contains("FAIL")));
}
