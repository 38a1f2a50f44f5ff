//! Ranks the named topologies by the smallest false-data bound that still
//! lets the attacker break the 5 m safety gap.
//!
//! ```text
//! cargo run --release --example topology_resilience
//! ```

use platoon_fdi::{
    synthesize, AttackGoal, AttackSpec, AttackSurface, LeaderProfile, PlatoonTopology, Result,
    ScenarioSpec, TopologyKind, VehicleDynamicsSpec,
};

/// Bounds above this are reported as unattackable.
pub const THETA_CAP: f64 = 1024.0;

fn attack(theta: f64) -> AttackSpec {
    AttackSpec {
        surface: AttackSurface::ACCELERATION,
        rogue: 2,
        onset: 10,
        duration: 50,
        theta,
        goal: AttackGoal::Safety,
        d_min: 5.0,
        d_max: 60.0,
        eps_violation: 1e-6,
    }
}

/// Smallest integer bound with an attack, by bisection; `None` past the cap.
pub fn min_theta(scenario: &ScenarioSpec) -> Result<Option<f64>> {
    if !synthesize(scenario, &attack(THETA_CAP))?.is_found() {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, THETA_CAP);
    while hi - lo > 1.0 {
        let mid = ((lo + hi) / 2.0f64).floor();
        if synthesize(scenario, &attack(mid))?.is_found() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

pub fn run_example() -> Result<Vec<(TopologyKind, Option<f64>)>> {
    let mut ranking = Vec::new();
    for kind in TopologyKind::NAMED {
        let scenario = ScenarioSpec::new(
            VehicleDynamicsSpec::reference(20.0),
            PlatoonTopology::named(kind, 4)?,
            LeaderProfile::constant(20.0)?,
        );
        ranking.push((kind, min_theta(&scenario)?));
    }
    ranking.sort_by(|a, b| {
        let key = |t: Option<f64>| t.unwrap_or(f64::INFINITY);
        key(a.1).total_cmp(&key(b.1))
    });
    for (kind, theta) in &ranking {
        match theta {
            Some(t) => println!("{kind:>4}: attackable from theta = {t}"),
            None => println!("{kind:>4}: no attack up to theta = {THETA_CAP}"),
        }
    }
    Ok(ranking)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
