use std::path::PathBuf;
use std::process::{Command, Output};

use mairs::harness::trial_seed;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mairs"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mairs-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

const CONFIG: &str = r#"
param = "P_t"
values = [24.0, 30.0]
trials = 2
schemes = ["FPA", "proposed-FPS"]
seed = 5

[scenario]
irs_elements = 4
paths = 3

[solver]
max_outer_iters = 5
"#;

#[test]
fn config_file_is_read_and_flags_override_it() {
    let cfg = scratch("sweep.toml");
    std::fs::write(&cfg, CONFIG).unwrap();

    let from_file = stdout(bin().arg("--config").arg(&cfg).arg("sweep").output().unwrap());
    let rows: Vec<&str> = from_file.lines().collect();
    assert_eq!(rows.len(), 1 + 2 * 2 * 2);
    let first_trial = format!(",{}", trial_seed(5, 0));
    assert!(rows[1].ends_with(&first_trial), "master seed from the file: {}", rows[1]);

    let overridden = stdout(
        bin()
            .arg("--config")
            .arg(&cfg)
            .args(["sweep", "--values", "28", "--trials", "1", "--schemes", "FPA", "--seed", "9"])
            .output()
            .unwrap(),
    );
    let rows: Vec<&str> = overridden.lines().collect();
    assert_eq!(rows.len(), 2);
    let fields: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(fields[0], "P_t");
    assert_eq!(fields[1], "28");
    assert_eq!(fields[3], "FPA");
    assert_eq!(fields[12], trial_seed(9, 0).to_string());
}

#[test]
fn sweep_header_has_the_documented_columns() {
    let out = stdout(
        bin()
            .args(["sweep", "--values", "30", "--trials", "1", "--schemes", "FPA", "-N", "4", "-L", "3"])
            .output()
            .unwrap(),
    );
    assert_eq!(
        out.lines().next().unwrap(),
        "sweep_param,sweep_value,trial,scheme,sum_rate_bpshz,min_user_rate,max_constraint_violation,\
         feasible,outer_iters,inner_iters_total,final_rho,wall_ms,seed"
    );
}

#[test]
fn json_sweep_is_written_to_the_out_file() {
    let path = scratch("sweep.json");
    stdout(
        bin()
            .args(["sweep", "--values", "30", "--trials", "1", "--schemes", "FPA,RPS", "-N", "4", "-L", "3"])
            .args(["--format", "json", "--out"])
            .arg(&path)
            .output()
            .unwrap(),
    );
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn single_run_reports_json() {
    let out = stdout(
        bin()
            .args(["single", "--scheme", "proposed-OPS", "--seed", "3", "-N", "4", "-L", "3", "--format", "json"])
            .output()
            .unwrap(),
    );
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["sum_rate"].as_f64().unwrap() > 0.0);
}

#[test]
fn gradcheck_prints_a_comparison() {
    let out = stdout(bin().args(["gradcheck", "--seed", "4", "-M", "2", "-N", "3", "-K", "2", "-L", "2"]).output().unwrap());
    assert!(!out.is_empty());
}

#[test]
fn landscape_writes_a_matrix_with_header() {
    let path = scratch("land.txt");
    stdout(
        bin()
            .args(["landscape", "--seed", "2", "--resolution", "9", "-N", "4", "--out"])
            .arg(&path)
            .output()
            .unwrap(),
    );
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# extent"));
    assert_eq!(lines[1], "# resolution 9");
    assert_eq!(lines.len(), 11);
}

#[test]
fn unknown_scheme_is_an_error() {
    let out = bin().args(["sweep", "--schemes", "nonsense"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn unknown_config_key_is_an_error() {
    let cfg = scratch("bad.toml");
    std::fs::write(&cfg, "trails = 3\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).arg("sweep").output().unwrap();
    assert!(!out.status.success());
}
