//! Pluggable linear-feasibility backends.

use super::problem::FeasibilityProblem;
use super::simplex::{self, LpOutcome};
use crate::error::{Error, Result};

/// Witnesses must satisfy every bound and row of the posed problem to this
/// absolute tolerance.
pub const WITNESS_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub enum SolverOutcome {
    Witness(Vec<f64>),
    Infeasible,
    Unknown(String),
}

/// A decision procedure for box-bounded linear feasibility.
///
/// Implementations must be complete for the problems they answer: report
/// `Infeasible` only when the polytope is empty, and `Unknown` otherwise
/// when they give up.
pub trait FeasibilityBackend: Send + Sync {
    fn name(&self) -> &str;

    fn solve(&self, problem: &FeasibilityProblem) -> SolverOutcome;
}

/// Built-in two-phase simplex.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimplexBackend;

impl FeasibilityBackend for SimplexBackend {
    fn name(&self) -> &str {
        "simplex"
    }

    fn solve(&self, problem: &FeasibilityProblem) -> SolverOutcome {
        match simplex::solve(problem, None) {
            LpOutcome::Optimal { x, .. } => SolverOutcome::Witness(x),
            LpOutcome::Infeasible => SolverOutcome::Infeasible,
            LpOutcome::Unbounded => SolverOutcome::Unknown("unbounded feasibility program".into()),
            LpOutcome::IterationLimit => SolverOutcome::Unknown("iteration limit".into()),
        }
    }
}

pub const BACKENDS: &[&str] = &["simplex"];

/// Looks up a registered backend by name.
pub fn backend_by_name(name: &str) -> Result<Box<dyn FeasibilityBackend>> {
    match name.trim() {
        "" | "simplex" => Ok(Box::new(SimplexBackend)),
        other => Err(Error::UnknownBackend(other.to_string())),
    }
}

/// Runs `backend` on a validated problem and re-checks any witness before
/// handing it out.
pub fn solve_feasibility(
    backend: &dyn FeasibilityBackend,
    problem: &FeasibilityProblem,
) -> Result<SolverOutcome> {
    problem.validate()?;
    Ok(match backend.solve(problem) {
        SolverOutcome::Witness(x) => {
            if x.len() != problem.num_vars || x.iter().any(|v| !v.is_finite()) {
                SolverOutcome::Unknown(format!("{} returned a malformed witness", backend.name()))
            } else {
                let worst = problem.max_violation(&x);
                if worst <= WITNESS_TOLERANCE {
                    SolverOutcome::Witness(x)
                } else {
                    SolverOutcome::Unknown(format!(
                        "{} witness violates the problem by {worst:e}",
                        backend.name()
                    ))
                }
            }
        }
        other => other,
    })
}
