//! Runs each example program and checks what it reports.

#[allow(dead_code)]
#[path = "../examples/topologies.rs"]
mod topologies;

#[allow(dead_code)]
#[path = "../examples/discretization.rs"]
mod discretization;

#[allow(dead_code)]
#[path = "../examples/closed_loop.rs"]
mod closed_loop;

#[allow(dead_code)]
#[path = "../examples/synthesize_attack.rs"]
mod synthesize_attack;

#[allow(dead_code)]
#[path = "../examples/topology_resilience.rs"]
mod topology_resilience;

#[allow(dead_code)]
#[path = "../examples/pipeline.rs"]
mod pipeline;

use std::path::Path;

use platoon_fdi::TopologyKind;

#[test]
fn topologies_example() {
    let shown = topologies::run_example().unwrap();
    assert_eq!(shown.len(), 5);
    let (name, tplf) = &shown[3];
    assert_eq!(name, "TPLF");
    assert_eq!(
        tplf,
        "0 0 0 0 0\n1 0 0 0 0\n1 1 0 0 0\n1 1 1 0 0\n1 0 1 1 0\n"
    );
}

#[test]
fn discretization_example() {
    let c = discretization::run_example().unwrap();
    assert!(c.a_gap > 1e-4 && c.a_gap < 0.05);
    let exact = 1.0 - (-4.0f64).exp();
    assert!((c.zoh_accel - exact).abs() < 1e-12);
    assert!((c.euler_accel - exact).abs() > 1e-4);
}

#[test]
fn closed_loop_example() {
    for (kind, lo, hi, last) in closed_loop::run_example().unwrap() {
        assert!(lo > 0.0 && lo < 20.0, "{kind}");
        assert!(hi >= 20.0, "{kind}");
        assert!((last - 20.0).abs() < 1e-3, "{kind} settles at {last}");
    }
}

#[test]
fn synthesize_attack_example() {
    let (outcome, verified) = synthesize_attack::run_example().unwrap();
    assert!(outcome.is_found());
    assert!(verified);
}

#[test]
fn topology_resilience_example() {
    let ranking = topology_resilience::run_example().unwrap();
    assert_eq!(ranking[0].0, TopologyKind::Pf);
    let pf = ranking[0].1.unwrap();
    assert!(ranking.iter().all(|(_, t)| t.is_none_or(|t| t >= pf)));
}

#[test]
fn pipeline_example() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/pf_safety.cfg");
    let dir = tempfile::tempdir().unwrap();
    let written = pipeline::run_example(&config, dir.path()).unwrap();
    let names: Vec<_> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(
        names,
        [
            "attack.csv",
            "trace.csv",
            "velocity.svg",
            "position.svg",
            "gaps.svg"
        ]
    );
    assert!(written.iter().all(|p| p.is_file()));
}
