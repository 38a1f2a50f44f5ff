use std::path::{Path, PathBuf};
use std::process::Command;

fn platoon(args: &[&str], solver: Option<&str>) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_platoon"));
    cmd.args(args);
    match solver {
        Some(s) => cmd.env("PLATOON_SOLVER", s),
        None => cmd.env_remove("PLATOON_SOLVER"),
    };
    let out = cmd.output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn value<'a>(stdout: &'a str, key: &str) -> Option<&'a str> {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn topology_matrices() {
    let (code, out, _) = platoon(&["topology", "--kind", "PF", "--n", "3"], None);
    assert_eq!(code, 0);
    assert_eq!(out, "0 0 0 0\n1 0 0 0\n0 1 0 0\n0 0 1 0\n");
    let (code, _, err) = platoon(
        &["topology", "--kind", "custom", "--matrix", "0,1;1,0"],
        None,
    );
    assert_eq!(code, 1);
    assert!(err.contains("error"));
}

#[test]
fn synth_writes_attack_and_normalized_config() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = platoon(
        &[
            "synth",
            "--config",
            s(&scenario("pf_safety.cfg")),
            "--out",
            s(dir.path()),
        ],
        None,
    );
    assert_eq!(code, 0);
    assert_eq!(value(&out, "feasible"), Some("true"));
    let attack = std::fs::read_to_string(dir.path().join("attack.csv")).unwrap();
    assert!(attack.starts_with("k,delta\n"));
    assert_eq!(attack.lines().count(), 51);
    let normalized = dir.path().join("scenario.normalized.cfg");
    let text = std::fs::read_to_string(&normalized).unwrap();
    assert!(text.contains("horizon = 260"));
    assert!(text.contains("eps_violation = 1e-6"));
    let again = platoon_fdi::io::parse_config(&normalized).unwrap();
    let first = platoon_fdi::io::parse_config(&scenario("pf_safety.cfg")).unwrap();
    assert_eq!(again.attack, first.attack);
    assert_eq!(again.scenario(), first.scenario());
}

#[test]
fn infeasible_synth_removes_stale_attack() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("attack.csv"), "k,delta\n").unwrap();
    let (code, out, err) = platoon(
        &[
            "synth",
            "--config",
            s(&scenario("tplf_safety.cfg")),
            "--out",
            s(dir.path()),
        ],
        None,
    );
    assert_eq!(code, 2, "{err}");
    assert_eq!(value(&out, "feasible"), Some("false"));
    assert!(!dir.path().join("attack.csv").exists());
}

#[test]
fn simulate_with_explicit_attack_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("pf_safety.cfg");
    assert_eq!(
        platoon(
            &["synth", "--config", s(&cfg), "--out", s(dir.path())],
            None
        )
        .0,
        0
    );
    let attack = dir.path().join("saved.csv");
    std::fs::rename(dir.path().join("attack.csv"), &attack).unwrap();

    let (code, out, _) = platoon(
        &[
            "simulate",
            "--config",
            s(&cfg),
            "--attack",
            s(&attack),
            "--out",
            s(dir.path()),
        ],
        None,
    );
    assert_eq!(code, 0);
    assert_eq!(value(&out, "attacked"), Some("true"));
    assert_ne!(value(&out, "safety_violations"), Some("0"));
    let min_gap: f64 = value(&out, "min_gap").unwrap().parse().unwrap();
    assert!(min_gap < 5.0);

    let plots = dir.path().join("plots");
    let trace = dir.path().join("trace.csv");
    let (code, out, err) = platoon(
        &[
            "plot",
            "--trace",
            s(&trace),
            "--config",
            s(&cfg),
            "--out",
            s(&plots),
        ],
        None,
    );
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().filter(|l| l.starts_with("plot=")).count(), 3);
    let gaps = std::fs::read_to_string(plots.join("gaps.svg")).unwrap();
    assert!(gaps.contains("attack-window"));
}

#[test]
fn wrong_length_attack_is_an_error_and_writes_no_trace() {
    let dir = tempfile::tempdir().unwrap();
    let attack = dir.path().join("short.csv");
    std::fs::write(&attack, "k,delta\n0,1\n1,2\n").unwrap();
    let (code, out, err) = platoon(
        &[
            "simulate",
            "--config",
            s(&scenario("pf_safety.cfg")),
            "--attack",
            s(&attack),
            "--out",
            s(dir.path()),
        ],
        None,
    );
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("short.csv:3"), "{err}");
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn oversized_attack_only_warns() {
    let dir = tempfile::tempdir().unwrap();
    let attack = dir.path().join("big.csv");
    let mut text = String::from("k,delta\n");
    for k in 0..50 {
        text.push_str(&format!("{k},{}\n", if k == 0 { 500.0 } else { 0.0 }));
    }
    std::fs::write(&attack, text).unwrap();
    let (code, _, err) = platoon(
        &[
            "simulate",
            "--config",
            s(&scenario("pf_safety.cfg")),
            "--attack",
            s(&attack),
            "--out",
            s(dir.path()),
        ],
        None,
    );
    assert_eq!(code, 0);
    assert!(err.contains("warning"));
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    let text = std::fs::read_to_string(scenario("pf_safety.cfg"))
        .unwrap()
        .replace("d_min = 5", "d_min = 70");
    std::fs::write(&cfg, text).unwrap();
    let (code, out, err) = platoon(&["run", "--config", s(&cfg)], None);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("attack.d_min"), "{err}");
}

#[test]
fn solver_selection() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("pf_safety.cfg");
    let (code, _, err) = platoon(
        &["synth", "--config", s(&cfg), "--out", s(dir.path())],
        Some("simplex"),
    );
    assert_eq!(code, 0);
    assert!(err.contains("solver: simplex"));
    let (code, _, err) = platoon(
        &["synth", "--config", s(&cfg), "--out", s(dir.path())],
        Some("z3"),
    );
    assert_eq!(code, 1);
    assert!(err.contains("z3"));
}

#[test]
fn every_shipped_scenario_runs() {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(scenario("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("cfg") {
            continue;
        }
        let out_dir = dir.path().join(path.file_stem().unwrap());
        let (code, out, err) = platoon(&["run", "--config", s(&path), "--out", s(&out_dir)], None);
        match code {
            0 => assert_eq!(value(&out, "verified"), Some("true"), "{}", path.display()),
            2 => assert_eq!(value(&out, "feasible"), Some("false")),
            _ => panic!("{}: exit {code}: {err}", path.display()),
        }
        assert!(out_dir.join("trace.csv").is_file());
        assert!(out_dir.join("gaps.svg").is_file());
    }
}
