//! The full tool chain on a scenario file: parse, synthesize, write
//! attack.csv, replay, write trace.csv and plot.
//!
//! ```text
//! cargo run --example pipeline -- crates/core/scenarios/pf_safety.cfg /tmp/pf
//! ```

use std::path::{Path, PathBuf};

use platoon_fdi::io::{self, parse_config};
use platoon_fdi::simulator::simulate_with_limits;
use platoon_fdi::{synthesize, verify_attack, Injection, Result};

pub fn run_example(config: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let cfg = parse_config(config)?;
    let (scenario, attack) = (cfg.scenario(), cfg.attack_spec());
    std::fs::create_dir_all(out_dir)?;

    let outcome = synthesize(scenario, attack)?;
    let mut written = Vec::new();
    let vector = outcome.vector();
    if let Some(vector) = vector {
        let path = out_dir.join("attack.csv");
        io::write_attack_csv(&path, vector)?;
        written.push(path);
        let report = verify_attack(scenario, attack, vector)?;
        println!("attack found, verified = {}", report.holds);
    } else {
        println!("no attack: {outcome:?}");
    }

    let injection = vector.map(|vector| Injection { attack, vector });
    let trace = simulate_with_limits(
        scenario,
        injection,
        cfg.run.horizon,
        attack.d_min,
        attack.d_max,
    )?;
    let path = out_dir.join("trace.csv");
    io::write_trace_csv(&path, &trace)?;
    written.push(path);
    written.extend(io::emit_plots(&trace, out_dir)?);

    println!("{} monitor events", trace.events.len());
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(written)
}

fn main() -> Result<()> {
    let mut args = std::env::args_os().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/pf_safety.cfg"));
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("platoon-pipeline"));
    run_example(&config, &out).map(|_| ())
}
