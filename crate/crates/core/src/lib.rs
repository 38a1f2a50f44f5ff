//! Connected-vehicle platoon simulation and false-data-injection attack
//! synthesis.
//!
//! A platoon is a leader plus `n` followers running a distributed linear
//! spacing controller over a chosen information-flow [`topology`]. A rogue
//! follower may broadcast falsified state. [`synthesis`] searches for a
//! bounded false-data sequence that pushes some inter-vehicle gap past a
//! safety or performance threshold, and [`simulator`] replays it.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod simulator;
pub mod synthesis;
pub mod topology;

pub use dynamics::{AttackSurface, Discretization, VehicleDynamicsSpec, VehicleState};
pub use error::{Error, Result};
pub use simulator::{
    simulate, AttackGoal, AttackSpec, AttackVector, Injection, LeaderProfile, ScenarioSpec,
    SimulationTrace, ViolationEvent, ViolationKind,
};
pub use synthesis::{synthesize, verify_attack, SynthesisOutcome, VerificationReport};
pub use topology::{PlatoonTopology, TopologyKind};
