//! Concrete closed-loop platoon simulation with optional false-data injection.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::dynamics::{self, apply_attack, AttackSurface, VehicleDynamicsSpec, VehicleState};
use crate::error::{Error, Result};
use crate::topology::PlatoonTopology;

/// Leader velocity samples, one per step.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderProfile {
    velocities: Vec<f64>,
}

impl LeaderProfile {
    pub fn new(velocities: Vec<f64>) -> Result<Self> {
        if velocities.is_empty() {
            return Err(Error::Argument("leader profile is empty".into()));
        }
        if let Some(k) = velocities.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "leader profile sample {k} is not finite"
            )));
        }
        Ok(LeaderProfile { velocities })
    }

    pub fn constant(velocity: f64) -> Result<Self> {
        Self::new(vec![velocity])
    }

    /// Velocity commanded at step `k`; the last sample is held past the end.
    pub fn velocity_at(&self, k: usize) -> f64 {
        self.velocities[k.min(self.velocities.len() - 1)]
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }
}

/// Complete closed-loop system definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub dynamics: VehicleDynamicsSpec,
    pub topology: PlatoonTopology,
    pub leader: LeaderProfile,
}

impl ScenarioSpec {
    pub fn new(
        dynamics: VehicleDynamicsSpec,
        topology: PlatoonTopology,
        leader: LeaderProfile,
    ) -> Self {
        ScenarioSpec {
            dynamics,
            topology,
            leader,
        }
    }

    pub fn followers(&self) -> usize {
        self.topology.followers()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackGoal {
    /// Drive some gap below `d_min`.
    Safety,
    /// Drive some gap above `d_max`.
    Performance,
}

impl fmt::Display for AttackGoal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackGoal::Safety => "safety",
            AttackGoal::Performance => "perf",
        })
    }
}

impl FromStr for AttackGoal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "safety" => Ok(AttackGoal::Safety),
            "perf" | "performance" => Ok(AttackGoal::Performance),
            other => Err(Error::Argument(format!(
                "unknown attack type `{other}` (expected safety or perf)"
            ))),
        }
    }
}

/// What the rogue vehicle may do and what counts as success.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub surface: AttackSurface,
    /// Index of the rogue follower.
    pub rogue: usize,
    /// First step at which false data is broadcast.
    pub onset: usize,
    /// Number of falsified steps.
    pub duration: usize,
    /// Bound on each false-data sample: `|delta| <= theta`.
    pub theta: f64,
    pub goal: AttackGoal,
    pub d_min: f64,
    pub d_max: f64,
    /// Margin that closes the strict violation inequalities.
    pub eps_violation: f64,
}

impl AttackSpec {
    pub const DEFAULT_EPS_VIOLATION: f64 = 1e-6;

    pub fn validate(&self, followers: usize) -> Result<()> {
        if self.surface.is_empty() {
            return Err(Error::Argument(
                "attack surface has no channel flagged".into(),
            ));
        }
        if self.rogue < 1 || self.rogue > followers {
            return Err(Error::Argument(format!(
                "rogue vehicle {} outside 1..={followers}",
                self.rogue
            )));
        }
        if self.duration < 1 {
            return Err(Error::Argument("attack duration must be at least 1".into()));
        }
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(Error::Argument(format!(
                "theta must be finite and non-negative, got {}",
                self.theta
            )));
        }
        if !(self.d_min.is_finite() && self.d_max.is_finite() && self.d_min < self.d_max) {
            return Err(Error::Argument(format!(
                "need d_min < d_max, got {} and {}",
                self.d_min, self.d_max
            )));
        }
        if !(self.eps_violation.is_finite() && self.eps_violation > 0.0) {
            return Err(Error::Argument("eps_violation must be positive".into()));
        }
        Ok(())
    }

    /// Last step of the assertion window (inclusive). The window starts at
    /// `onset`.
    pub fn window_end(&self) -> usize {
        self.onset + self.duration
    }

    pub fn is_active(&self, k: usize) -> bool {
        k >= self.onset && k < self.onset + self.duration
    }

    pub fn default_horizon(&self) -> usize {
        self.window_end() + 200
    }
}

/// False-data samples `delta[0..duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackVector {
    pub deltas: Vec<f64>,
}

impl AttackVector {
    pub fn new(deltas: Vec<f64>) -> Self {
        AttackVector { deltas }
    }

    pub fn zeros(duration: usize) -> Self {
        AttackVector::new(vec![0.0; duration])
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// Checks length and the `|delta| <= theta` bound against `attack`.
    pub fn check_against(&self, attack: &AttackSpec) -> Result<()> {
        if self.len() != attack.duration {
            return Err(Error::Argument(format!(
                "attack vector has {} samples, duration is {}",
                self.len(),
                attack.duration
            )));
        }
        if let Some(t) = self
            .deltas
            .iter()
            .position(|d| d.is_nan() || d.abs() > attack.theta)
        {
            return Err(Error::Argument(format!(
                "delta[{t}] = {} exceeds theta = {}",
                self.deltas[t], attack.theta
            )));
        }
        Ok(())
    }
}

/// A concrete attack to replay.
#[derive(Debug, Clone, Copy)]
pub struct Injection<'a> {
    pub attack: &'a AttackSpec,
    pub vector: &'a AttackVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub vehicle: usize,
    pub state: VehicleState,
    /// Control computed at this step (always 0 for the leader).
    pub control: f64,
    /// Gap to the predecessor, `None` for the leader.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    Safety,
    Performance,
    Collision,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Safety => "safety",
            ViolationKind::Performance => "performance",
            ViolationKind::Collision => "collision",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolationEvent {
    pub kind: ViolationKind,
    pub k: usize,
    pub vehicle: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    /// `records[k][i]` for step `k` and vehicle `i`.
    pub records: Vec<Vec<TraceRecord>>,
    pub events: Vec<ViolationEvent>,
    /// `(onset, duration)` of the injected attack, if any.
    pub attack_window: Option<(usize, usize)>,
}

impl SimulationTrace {
    /// Builds a trace from per-step records, recomputing gaps from positions.
    pub fn from_records(
        records: Vec<Vec<TraceRecord>>,
        attack_window: Option<(usize, usize)>,
    ) -> Self {
        let mut trace = SimulationTrace {
            records,
            events: Vec::new(),
            attack_window,
        };
        for row in &mut trace.records {
            for i in 0..row.len() {
                row[i].gap = (i > 0).then(|| row[i - 1].state.s - row[i].state.s);
            }
        }
        trace
    }

    pub fn steps(&self) -> usize {
        self.records.len()
    }

    pub fn vehicles(&self) -> usize {
        self.records.first().map_or(0, Vec::len)
    }

    pub fn gap(&self, k: usize, i: usize) -> Option<f64> {
        self.records.get(k)?.get(i)?.gap
    }

    pub fn state(&self, k: usize, i: usize) -> VehicleState {
        self.records[k][i].state
    }

    /// Smallest follower gap over the whole trace with its `(k, i)`.
    pub fn min_gap(&self) -> Option<(f64, usize, usize)> {
        self.follower_gaps().min_by(|a, b| a.0.total_cmp(&b.0))
    }

    pub fn max_gap(&self) -> Option<(f64, usize, usize)> {
        self.follower_gaps().max_by(|a, b| a.0.total_cmp(&b.0))
    }

    fn follower_gaps(&self) -> impl Iterator<Item = (f64, usize, usize)> + '_ {
        self.records
            .iter()
            .flatten()
            .filter_map(|r| r.gap.map(|g| (g, r.k, r.vehicle)))
    }
}

/// Equilibrium start: vehicle `i` at `(n - i + 1) d`, all at `v_init`, at rest
/// in acceleration.
pub fn initial_states(followers: usize, spec: &VehicleDynamicsSpec) -> Vec<VehicleState> {
    (0..=followers)
        .map(|i| VehicleState::new((followers - i + 1) as f64 * spec.spacing, spec.v_init, 0.0))
        .collect()
}

/// Leader update from the previous to the next velocity sample, with the
/// acceleration taken as the finite difference.
pub fn leader_step(s0: f64, v_prev: f64, v_next: f64, ts: f64) -> VehicleState {
    let a0 = (v_next - v_prev) / ts;
    VehicleState::new(s0 + v_prev * ts + 0.5 * a0 * ts * ts, v_next, a0)
}

/// Runs the closed loop for `horizon` steps (`horizon + 1` records).
///
/// While the attack is active at step `k`, every follower that receives the
/// rogue's broadcast sees `x_p + Γ delta[k - onset]`. The rogue itself and
/// all other links use true states. Events are monitored against the
/// attack's thresholds, or for collisions only when there is no attack.
#[allow(clippy::needless_range_loop)]
pub fn simulate(
    scenario: &ScenarioSpec,
    injection: Option<Injection<'_>>,
    horizon: usize,
) -> Result<SimulationTrace> {
    if horizon < 1 {
        return Err(Error::Argument("horizon must be at least 1".into()));
    }
    let n = scenario.followers();
    if let Some(inj) = injection {
        inj.attack.validate(n)?;
        if inj.vector.len() != inj.attack.duration {
            return Err(Error::Argument(format!(
                "attack vector has {} samples, duration is {}",
                inj.vector.len(),
                inj.attack.duration
            )));
        }
        if inj.attack.onset + inj.attack.duration > horizon {
            return Err(Error::Argument(format!(
                "attack window ends at {} beyond horizon {horizon}",
                inj.attack.onset + inj.attack.duration
            )));
        }
    }

    let spec = &scenario.dynamics;
    let topology = &scenario.topology;
    let receivers = injection.map(|inj| topology.receivers_of(inj.attack.rogue));
    let mut states = initial_states(n, spec);
    let mut records = Vec::with_capacity(horizon + 1);
    let mut falsified = BTreeMap::new();

    for k in 0..=horizon {
        let mut controls = vec![0.0; n + 1];
        for i in 1..=n {
            falsified.clear();
            if let (Some(inj), Some(rx)) = (injection, receivers.as_ref()) {
                if inj.attack.is_active(k) && rx.contains(&i) {
                    let p = inj.attack.rogue;
                    let delta = inj.vector.deltas[k - inj.attack.onset];
                    falsified.insert(p, apply_attack(&states[p], &inj.attack.surface, delta));
                }
            }
            controls[i] = dynamics::control_input(i, &states, topology, spec, &falsified)?;
            if !controls[i].is_finite() {
                return Err(Error::NumericOverflow {
                    step: k,
                    vehicle: i,
                });
            }
        }

        records.push(
            (0..=n)
                .map(|i| TraceRecord {
                    k,
                    vehicle: i,
                    state: states[i],
                    control: controls[i],
                    gap: (i > 0).then(|| states[i - 1].s - states[i].s),
                })
                .collect::<Vec<_>>(),
        );
        if k == horizon {
            break;
        }

        let leader = &states[0];
        let mut next = Vec::with_capacity(n + 1);
        let v_next = scenario.leader.velocity_at(k + 1);
        let lead = leader_step(leader.s, leader.v, v_next, spec.ts);
        if !lead.is_finite() {
            return Err(Error::NumericOverflow {
                step: k + 1,
                vehicle: 0,
            });
        }
        next.push(lead);
        for i in 1..=n {
            let x = dynamics::step(&states[i], controls[i], spec).map_err(|_| {
                Error::NumericOverflow {
                    step: k + 1,
                    vehicle: i,
                }
            })?;
            next.push(x);
        }
        states = next;
    }

    let mut trace = SimulationTrace {
        records,
        events: Vec::new(),
        attack_window: injection.map(|inj| (inj.attack.onset, inj.attack.duration)),
    };
    trace.events = match injection {
        Some(inj) => monitor(&trace, inj.attack.d_min, inj.attack.d_max),
        None => monitor(&trace, f64::NEG_INFINITY, f64::INFINITY),
    };
    Ok(trace)
}

/// Like [`simulate`] but monitors events against explicit thresholds.
pub fn simulate_with_limits(
    scenario: &ScenarioSpec,
    injection: Option<Injection<'_>>,
    horizon: usize,
    d_min: f64,
    d_max: f64,
) -> Result<SimulationTrace> {
    let mut trace = simulate(scenario, injection, horizon)?;
    trace.events = monitor(&trace, d_min, d_max);
    Ok(trace)
}

/// Gap monitor: safety when `gap < d_min`, performance when `gap > d_max`,
/// and an additional collision event when `gap <= 0`. Sorted by `(k, i)`.
pub fn monitor(trace: &SimulationTrace, d_min: f64, d_max: f64) -> Vec<ViolationEvent> {
    let mut events = Vec::new();
    for rec in trace.records.iter().flatten() {
        let Some(gap) = rec.gap else { continue };
        let mut push = |kind| {
            events.push(ViolationEvent {
                kind,
                k: rec.k,
                vehicle: rec.vehicle,
                gap,
            })
        };
        if gap < d_min {
            push(ViolationKind::Safety);
        }
        if gap > d_max {
            push(ViolationKind::Performance);
        }
        if gap <= 0.0 {
            push(ViolationKind::Collision);
        }
    }
    events.sort_by_key(|e| (e.k, e.vehicle, e.kind));
    events
}
