//! Attack-vector synthesis.
//!
//! The attacked closed loop is unrolled over the attack window with the
//! false data left symbolic. Each candidate violation `(i, k)` becomes a
//! linear feasibility problem over `delta in [-theta, theta]^T`; the first
//! feasible candidate in `(k, i)` order yields the attack vector. Every
//! returned vector can be replayed with [`verify_attack`].

pub mod affine;
pub mod backend;
pub mod problem;
pub mod simplex;

pub use affine::{unroll_symbolic, AffineExpr, GapExprs};
pub use backend::{
    backend_by_name, solve_feasibility, FeasibilityBackend, SimplexBackend, SolverOutcome,
};
pub use problem::{
    allowed_vehicles, build_perf_problem, build_problem, build_safety_problem, disjuncts, Disjunct,
    FeasibilityProblem, LinearConstraint, Relation,
};

use crate::error::Result;
use crate::simulator::{
    self, AttackGoal, AttackSpec, AttackVector, Injection, ScenarioSpec, ViolationEvent,
};

/// Slack on threshold comparisons when replaying a witness.
pub const VERIFY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum SynthesisOutcome {
    /// A vector whose replay violates the goal at `disjunct`.
    Found {
        vector: AttackVector,
        disjunct: Disjunct,
    },
    /// Every candidate is infeasible: no attack of this duration and bound
    /// violates the goal inside the assertion window.
    NotFound,
    /// The backend gave up on some candidate before any witness was found.
    Inconclusive(String),
}

impl SynthesisOutcome {
    pub fn vector(&self) -> Option<&AttackVector> {
        match self {
            SynthesisOutcome::Found { vector, .. } => Some(vector),
            _ => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, SynthesisOutcome::Found { .. })
    }
}

/// Synthesizes an attack with the built-in simplex backend.
pub fn synthesize(scenario: &ScenarioSpec, attack: &AttackSpec) -> Result<SynthesisOutcome> {
    synthesize_with(scenario, attack, &SimplexBackend)
}

pub fn synthesize_with(
    scenario: &ScenarioSpec,
    attack: &AttackSpec,
    backend: &dyn FeasibilityBackend,
) -> Result<SynthesisOutcome> {
    let exprs = unroll_symbolic(scenario, attack)?;
    let mut inconclusive = None;
    for disjunct in disjuncts(attack, scenario.followers()) {
        let problem = build_problem(&exprs, attack, disjunct)?;
        if problem.box_infeasible() {
            continue;
        }
        match solve_feasibility(backend, &problem)? {
            SolverOutcome::Witness(deltas) => {
                return Ok(SynthesisOutcome::Found {
                    vector: AttackVector::new(deltas),
                    disjunct,
                })
            }
            SolverOutcome::Infeasible => {}
            SolverOutcome::Unknown(reason) => {
                inconclusive.get_or_insert(format!(
                    "vehicle {} step {}: {reason}",
                    disjunct.vehicle, disjunct.k
                ));
            }
        }
    }
    Ok(match inconclusive {
        Some(reason) => SynthesisOutcome::Inconclusive(reason),
        None => SynthesisOutcome::NotFound,
    })
}

/// A window constraint the replay did not satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FailedCheck {
    /// `|delta[t]| > theta`.
    Bound { t: usize, delta: f64 },
    /// The gap behind the rogue left `[d_min, d_max]` at step `k`.
    ProtectedGap { k: usize, gap: f64 },
    /// No admissible gap crossed the goal threshold inside the window.
    NoViolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub holds: bool,
    /// Goal-relevant violations inside the window, as `(k, vehicle, gap)`.
    pub violations: Vec<(usize, usize, f64)>,
    pub failed: Vec<FailedCheck>,
    /// Monitor output of the full replay.
    pub events: Vec<ViolationEvent>,
    pub min_gap: Option<f64>,
    pub max_gap: Option<f64>,
}

/// Replays `vector` in the concrete simulator and checks the goal predicate
/// over the assertion window.
pub fn verify_attack(
    scenario: &ScenarioSpec,
    attack: &AttackSpec,
    vector: &AttackVector,
) -> Result<VerificationReport> {
    let n = scenario.followers();
    let trace = simulator::simulate(
        scenario,
        Some(Injection { attack, vector }),
        attack.default_horizon(),
    )?;

    let mut failed = Vec::new();
    for (t, &delta) in vector.deltas.iter().enumerate() {
        if delta.is_nan() || delta.abs() > attack.theta + VERIFY_TOLERANCE {
            failed.push(FailedCheck::Bound { t, delta });
        }
    }

    let window = attack.onset..=attack.window_end();
    let candidates = allowed_vehicles(attack.goal, attack.rogue, n);
    let mut violations = Vec::new();
    for k in window.clone() {
        for &i in &candidates {
            let gap = trace.gap(k, i).expect("followers have gaps");
            let hit = match attack.goal {
                AttackGoal::Safety => gap < attack.d_min,
                AttackGoal::Performance => gap > attack.d_max,
            };
            if hit {
                violations.push((k, i, gap));
            }
        }
    }
    if violations.is_empty() {
        failed.push(FailedCheck::NoViolation);
    }

    if attack.goal == AttackGoal::Safety && attack.rogue < n {
        for k in window {
            let gap = trace.gap(k, attack.rogue + 1).expect("followers have gaps");
            if gap < attack.d_min - VERIFY_TOLERANCE || gap > attack.d_max + VERIFY_TOLERANCE {
                failed.push(FailedCheck::ProtectedGap { k, gap });
            }
        }
    }

    Ok(VerificationReport {
        holds: failed.is_empty(),
        violations,
        failed,
        min_gap: trace.min_gap().map(|g| g.0),
        max_gap: trace.max_gap().map(|g| g.0),
        events: trace.events,
    })
}
