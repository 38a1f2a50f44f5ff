//! Simulates an unattacked platoon whose leader brakes from 20 m/s to
//! 14 m/s and reports how far the gaps drift from the desired spacing.
//!
//! ```text
//! cargo run --example closed_loop
//! ```

use platoon_fdi::{
    simulate, LeaderProfile, PlatoonTopology, Result, ScenarioSpec, TopologyKind,
    VehicleDynamicsSpec,
};

/// `(topology, smallest gap, largest gap, final gap of the last vehicle)`.
pub fn run_example() -> Result<Vec<(TopologyKind, f64, f64, f64)>> {
    let ts = 0.1;
    let profile: Vec<f64> = (0..=300)
        .map(|k| {
            let t = k as f64 * ts;
            (20.0 - 2.0 * (t - 3.0).clamp(0.0, 3.0)).max(14.0)
        })
        .collect();
    let leader = LeaderProfile::new(profile)?;

    let mut rows = Vec::new();
    for kind in TopologyKind::NAMED {
        let scenario = ScenarioSpec::new(
            VehicleDynamicsSpec::reference(20.0),
            PlatoonTopology::named(kind, 4)?,
            leader.clone(),
        );
        let trace = simulate(&scenario, None, 600)?;
        let (lo, ..) = trace.min_gap().expect("followers exist");
        let (hi, ..) = trace.max_gap().expect("followers exist");
        let last = trace.gap(trace.steps() - 1, 4).expect("vehicle 4 exists");
        println!("{kind:>4}: gap range [{lo:.3}, {hi:.3}] m, final {last:.6} m");
        rows.push((kind, lo, hi, last));
    }
    Ok(rows)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
