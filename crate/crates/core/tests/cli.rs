use std::path::Path;
use std::process::{Command, Output};

use rissim::output::CSV_HEADER;

const SMALL: &str = "ris_elements = 16\niterations = 40\n";

fn simulate(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn simulate")
}

fn small_scenario(dir: &Path) -> String {
    let path = dir.join("small.toml");
    std::fs::write(&path, SMALL).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    let out = simulate(
        &[
            "--scenario", &scenario, "--sweep", "P_dBm=0:20:10", "--modes", "safe,opt+hmit",
            "--trials", "3", "--threads", "1", "--out", "res",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.path().join("res/results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    // 3 grid values x 2 schemes x (3 users + sum)
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3 * 2 * 4);
    assert!(rows[0].starts_with("P_dBm,0,none,unmit,1,"));
    assert!(rows.iter().all(|r| r.ends_with(",3")));
    assert!(rows.iter().any(|r| r.starts_with("P_dBm,20,opt,hmit,sum,")));

    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("res/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["trials"], 3);
    assert_eq!(manifest["config"]["ris_elements"], 16);
    assert_eq!(manifest["results_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    for (threads, out) in [("1", "seq"), ("3", "par")] {
        let run = simulate(
            &[
                "--scenario", &scenario, "--sweep", "tau=0,0.3", "--csi-mode", "scaled",
                "--trials", "5", "--threads", threads, "--out", out,
            ],
            dir.path(),
        );
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let seq = std::fs::read(dir.path().join("seq/results.csv")).unwrap();
    let par = std::fs::read(dir.path().join("par/results.csv")).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn dumps_the_optimizer_trace() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    let out = simulate(
        &[
            "--scenario", &scenario, "--modes", "opt+unmit", "--trials", "1", "--dump-trace",
            "trace.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "iteration,objective");
    assert_eq!(lines.len(), 1 + 40);
}

#[test]
fn invalid_scenario_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "beta = 1.2\n").unwrap();
    let out = simulate(&["--scenario", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta out of (0,1)"));
}

#[test]
fn bad_sweep_and_modes_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    let sweep = simulate(&["--scenario", &scenario, "--sweep", "speed=1,2"], dir.path());
    assert_eq!(sweep.status.code(), Some(2));
    let modes = simulate(&["--scenario", &scenario, "--modes", "opt+psychic"], dir.path());
    assert_eq!(modes.status.code(), Some(2));
}

#[test]
fn missing_scenario_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&["--scenario", "nowhere.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}
