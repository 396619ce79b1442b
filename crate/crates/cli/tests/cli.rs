use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracsde"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("--config")
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .args(extra)
        .env("FRACSDE_THREADS", "1")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

const HARNACK_LOW: &str = r#"experiment = "harnack"

[model]
name = "ou(1.0)"
hurst = 0.3

[grid]
horizon = 1.0
n_steps = 64

[mc]
n_paths = 100
seed = 1

[harnack]
p = 2.0

[[harnack.pairs]]
x = [0.0]
y = [0.1]
"#;

const COVARIANCE: &str = r#"experiment = "covariance_validation"

[model]
name = "zero"
hurst = 0.7

[grid]
horizon = 1.0
n_steps = 256

[mc]
n_paths = 4000
seed = 3
"#;

const BISMUT: &str = r#"experiment = "bismut_vs_fd"

[model]
name = "ou(1.0)"
hurst = 0.7

[grid]
horizon = 1.0
n_steps = 64

[mc]
n_paths = 4000
seed = 5

[bismut_vs_fd]
x = [0.5]
y = [1.0]

[output]
export_paths = 2
"#;

#[test]
fn every_shipped_config_validates() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let o = bin().arg("--config").arg(&p).arg("--validate-only").output().unwrap();
            assert!(o.status.success(), "{}: {}", p.display(), stderr(&o));
            assert_eq!(stdout(&o).trim(), "ok");
            n += 1;
        }
    }
    assert!(n >= 8);
}

#[test]
fn hurst_out_of_range_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.toml", &COVARIANCE.replace("hurst = 0.7", "hurst = 1.5"));
    let o = run(&c, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("hurst out of range"), "{e}");
    assert!(e.contains("line 5"), "{e}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_n_paths_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.toml", &COVARIANCE.replace("n_paths = 4000\n", ""));
    let o = run(&c, &dir.path().join("out"), &["--validate-only"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing field `n_paths`"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.toml", &COVARIANCE.replace("seed = 3", "seed = 3\nsed = 4"));
    let o = run(&c, &dir.path().join("out"), &["--validate-only"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sed"), "{}", stderr(&o));
}

#[test]
fn harnack_needs_high_hurst() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.toml", HARNACK_LOW);
    let o = run(&c, &dir.path().join("out"), &["--validate-only"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("harnack requires H>1/2"), "{}", stderr(&o));
}

#[test]
fn covariance_validation_passes() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.toml", COVARIANCE);
    let out = dir.path().join("out");
    let o = run(&c, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let report: toml::Table = std::fs::read_to_string(out.join("report.toml")).unwrap().parse().unwrap();
    let z = report["results"]["max_abs_z"].as_float().unwrap();
    assert!(z < 4.0);
    assert_eq!(report["report"]["passed"].as_bool(), Some(true));
    let csv = std::fs::read_to_string(out.join("covariance.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,s,empirical,exact,se,z"));
    assert_eq!(csv.lines().count(), 1 + 36);
}

#[test]
fn failing_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{COVARIANCE}\n[covariance]\nvariance_tolerance = 1e-9\n");
    let c = write_config(dir.path(), "c.toml", &body);
    let o = run(&c, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL terminal_variance"));
}

#[test]
fn bismut_report_has_estimates_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.toml", BISMUT);
    let out = dir.path().join("out");
    let o = run(&c, &out, &[]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let report: toml::Table = std::fs::read_to_string(out.join("report.toml")).unwrap().parse().unwrap();
    let r = &report["results"];
    for key in ["bismut", "fd"] {
        assert!(r[key]["mean"].is_float());
        assert!(r[key]["std_error"].as_float().unwrap() > 0.0);
    }
    assert!(r["abs_diff"].is_float());
    let verdicts = report["verdicts"].as_array().unwrap();
    assert_eq!(verdicts[0]["name"].as_str(), Some("bismut_matches_fd"));
    let constants = report["constants"].as_array().unwrap();
    let c0 = constants.iter().find(|c| c["name"].as_str() == Some("C0")).unwrap();
    assert_eq!(c0["provenance"].as_str(), Some("closed-form"));
    let paths = std::fs::read_to_string(out.join("paths.csv")).unwrap();
    assert_eq!(paths.lines().next(), Some("path,t,W_1,BH_1"));
    assert_eq!(paths.lines().count(), 1 + 2 * 65);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.toml", BISMUT);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&c, &a, &[]);
    let o = bin()
        .arg("--config")
        .arg(&c)
        .arg("--out-dir")
        .arg(&b)
        .env("FRACSDE_THREADS", "3")
        .output()
        .unwrap();
    assert!(matches!(o.status.code(), Some(0 | 1)));
    for f in ["report.toml", "paths.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    // the echoed config reproduces the report
    let echo: toml::Table = std::fs::read_to_string(a.join("report.toml")).unwrap().parse().unwrap();
    let again = write_config(dir.path(), "echo.toml", &toml::to_string(&echo["config"]).unwrap());
    run(&again, &dir.path().join("c"), &[]);
    assert_eq!(
        std::fs::read(a.join("report.toml")).unwrap(),
        std::fs::read(dir.path().join("c/report.toml")).unwrap()
    );
}

#[test]
fn seed_override_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.toml", COVARIANCE);
    let out = dir.path().join("out");
    run(&c, &out, &["--seed-override", "99"]);
    let report: toml::Table = std::fs::read_to_string(out.join("report.toml")).unwrap().parse().unwrap();
    assert_eq!(report["config"]["mc"]["seed"].as_integer(), Some(99));
}

#[test]
fn operator_validation_runs_without_mc() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&configs_dir().join("operators_h03.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(out.join("integral.csv").exists());
}

#[test]
fn numerical_failure_exits_three_with_stage() {
    let dir = tempfile::tempdir().unwrap();
    let body = BISMUT.replace("ou(1.0)", "ou(-1e9)").replace("[output]\nexport_paths = 2\n", "");
    let c = write_config(dir.path(), "c.toml", &body);
    let o = run(&c, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stderr(&o).contains("stage 'gradient_bismut'"), "{}", stderr(&o));
}
