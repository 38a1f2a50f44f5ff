//! Searches for a false-acceleration sequence from vehicle 2 that pushes a
//! gap below 5 m in a predecessor-following platoon, then replays it.
//!
//! ```text
//! cargo run --example synthesize_attack
//! ```

use platoon_fdi::{
    synthesize, verify_attack, AttackGoal, AttackSpec, AttackSurface, LeaderProfile,
    PlatoonTopology, Result, ScenarioSpec, SynthesisOutcome, TopologyKind, VehicleDynamicsSpec,
};

pub fn run_example() -> Result<(SynthesisOutcome, bool)> {
    let scenario = ScenarioSpec::new(
        VehicleDynamicsSpec::reference(20.0),
        PlatoonTopology::named(TopologyKind::Pf, 4)?,
        LeaderProfile::constant(20.0)?,
    );
    let attack = AttackSpec {
        surface: AttackSurface::ACCELERATION,
        rogue: 2,
        onset: 10,
        duration: 50,
        theta: 100.0,
        goal: AttackGoal::Safety,
        d_min: 5.0,
        d_max: 60.0,
        eps_violation: 1e-6,
    };

    let outcome = synthesize(&scenario, &attack)?;
    let SynthesisOutcome::Found { vector, disjunct } = &outcome else {
        println!("no attack: {outcome:?}");
        return Ok((outcome, false));
    };
    println!(
        "gap of vehicle {} drops below {} m at step {}",
        disjunct.vehicle, attack.d_min, disjunct.k
    );
    let nonzero = vector.deltas.iter().filter(|d| d.abs() > 1e-9).count();
    println!("{nonzero} of {} samples carry false data", vector.len());

    let report = verify_attack(&scenario, &attack, vector)?;
    for (k, i, gap) in &report.violations {
        println!("  replay: step {k}, vehicle {i}, gap {gap:.6} m");
    }
    println!("verified = {}", report.holds);
    Ok((outcome.clone(), report.holds))
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
