use std::fs;
use std::process::Command;

fn hydrosplit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hydrosplit"))
}

const COARSE: [&str; 4] = ["--nx", "10", "--ny", "2"];

#[test]
fn simulate_writes_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = hydrosplit()
        .args(["simulate", "--example", "1", "--dt", "0.02"])
        .args(COARSE)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let series = fs::read_to_string(dir.path().join("series.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,P_11_1,Q_11_1,pi_11_1,y1_pi_11_1,y1_omega_11,E_omega,E_ups,D_omega,D_rc,U_ups"
    );
    let rows: Vec<&str> = lines.collect();
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("converged = true"));
    let steps: usize = summary
        .lines()
        .find_map(|l| l.strip_prefix("steps = "))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(rows.len(), steps + 1);
}

#[test]
fn identical_runs_give_identical_series() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let status = hydrosplit()
            .args(["simulate", "--example", "2", "--dt", "0.05", "--max-periods", "1"])
            .args(COARSE)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(!status.status.success(), "one period cannot establish periodicity");
        fs::read(dir.path().join("series.csv")).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn zero_periods_reports_initial_energies() {
    let out = hydrosplit()
        .args(["simulate", "--example", "3", "--max-periods", "0"])
        .args(COARSE)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("steps = 0"));
    assert!(text.contains("initial_E_omega"));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "example = 2\nnx = 10\nny = 2\n[set]\nLa = 0.004\n").unwrap();
    let out = hydrosplit()
        .args(["verify-oracle", "--config"])
        .arg(&cfg)
        .args(["--set", "Rb=12"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("set.La = 0.004"));
    assert!(text.contains("set.Rb = 12"));
    assert!(text.contains("pi_21_1 reconstruction"));
}

#[test]
fn flipped_resistance_fails_verification_by_name() {
    let out = hydrosplit()
        .args(["verify-oracle", "--example", "1", "--set", "R11_1=-10"])
        .args(COARSE)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("parameter validity"));
    assert!(text.contains("R11_1 = -10 must be positive"));
}

#[test]
fn invalid_input_exits_with_usage_code() {
    let dup = hydrosplit()
        .args(["convergence", "--dts", "0.01,0.01"])
        .args(COARSE)
        .output()
        .unwrap();
    assert_eq!(dup.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&dup.stderr).contains("listed twice"));
    let bad = hydrosplit().args(["simulate", "--example", "5"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let key = hydrosplit()
        .args(["simulate", "--example", "3", "--set", "gamma1=1"])
        .output()
        .unwrap();
    assert_eq!(key.status.code(), Some(2));
}

#[test]
fn stability_command_passes_for_large_steps() {
    let out = hydrosplit()
        .args(["stability", "--steps", "20", "--dts", "0.1,1,10"])
        .args(COARSE)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("overall: PASS"));
}

#[test]
fn convergence_with_one_step_has_no_slope() {
    let out = hydrosplit()
        .args(["convergence", "--dts", "0.05"])
        .args(COARSE)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[errors]"));
    assert!(!text.contains("[slopes]"));
}
