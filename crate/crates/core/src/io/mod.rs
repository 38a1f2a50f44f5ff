//! File formats: scenario configs, CSV data and SVG charts.

pub mod config;
pub mod csv;
pub mod plot;

pub use config::{parse_config, parse_config_str, ScenarioConfig};
pub use csv::{
    read_attack_csv, read_leader_profile, read_trace_csv, write_attack_csv, write_trace_csv,
};
pub use plot::emit_plots;
