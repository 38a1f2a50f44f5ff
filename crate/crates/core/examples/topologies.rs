//! Builds every named topology and a custom one, then lists who listens to
//! whom.
//!
//! ```text
//! cargo run --example topologies
//! ```

use platoon_fdi::{PlatoonTopology, Result, TopologyKind};

/// Returns the rendered matrices in the order they are printed.
pub fn run_example() -> Result<Vec<(String, String)>> {
    let mut shown = Vec::new();
    for kind in TopologyKind::NAMED {
        let topo = PlatoonTopology::named(kind, 4)?;
        shown.push((kind.to_string(), topo.render()));
    }

    // Leader broadcast to everybody, otherwise predecessor only.
    let custom = PlatoonTopology::custom(PlatoonTopology::parse_matrix(
        "0,0,0,0;1,0,0,0;1,1,0,0;1,0,1,0",
    )?)?;
    shown.push(("custom".to_string(), custom.render()));

    for (name, matrix) in &shown {
        println!("{name}:\n{matrix}");
    }

    let tplf = PlatoonTopology::named(TopologyKind::Tplf, 4)?;
    for i in 1..=tplf.followers() {
        println!("TPLF vehicle {i} listens to {:?}", tplf.neighbors(i)?);
    }
    println!("vehicle 2 is heard by {:?}", tplf.receivers_of(2));
    Ok(shown)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
