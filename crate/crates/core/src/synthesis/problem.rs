//! Linear feasibility problems, one per violation candidate `(i, k)`.

use std::fmt;

use super::affine::{AffineExpr, GapExprs};
use crate::error::{Error, Result};
use crate::simulator::{AttackGoal, AttackSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
        })
    }
}

/// `coeffs · x  (relation)  rhs`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LinearConstraint {
    /// `expr (relation) threshold`, moved into `coeffs · delta (relation) rhs`.
    pub fn from_affine(expr: &AffineExpr, relation: Relation, threshold: f64) -> Self {
        LinearConstraint {
            coeffs: expr.coeffs.clone(),
            relation,
            rhs: threshold - expr.constant,
        }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Amount by which `x` violates the constraint (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
        }
    }
}

/// Box-bounded linear feasibility problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityProblem {
    pub num_vars: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
}

impl FeasibilityProblem {
    pub fn with_symmetric_bounds(num_vars: usize, theta: f64) -> Self {
        FeasibilityProblem {
            num_vars,
            lower: vec![-theta; num_vars],
            upper: vec![theta; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.num_vars || self.upper.len() != self.num_vars {
            return Err(Error::Argument("bounds do not match num_vars".into()));
        }
        for (t, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(Error::Argument(format!(
                    "variable {t} has ill-ordered bounds [{l}, {u}]"
                )));
            }
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != self.num_vars {
                return Err(Error::Argument(format!(
                    "constraint {r} has {} coefficients, expected {}",
                    c.coeffs.len(),
                    self.num_vars
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::Argument(format!("constraint {r} is not finite")));
            }
        }
        Ok(())
    }

    /// Largest bound or constraint violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (l - v).max(v - u).max(0.0));
        let rows = self.constraints.iter().map(|c| c.violation(x));
        bounds.chain(rows).fold(0.0, f64::max)
    }

    /// True if some constraint cannot be met anywhere in the box. Cheap and
    /// sound: a `true` answer proves infeasibility, `false` proves nothing.
    pub fn box_infeasible(&self) -> bool {
        self.constraints.iter().any(|c| {
            let (mut lo, mut hi) = (0.0, 0.0);
            for (a, (l, u)) in c.coeffs.iter().zip(self.lower.iter().zip(&self.upper)) {
                let (x, y) = (a * l, a * u);
                lo += x.min(y);
                hi += x.max(y);
            }
            // Slack so rounding in the interval sum never prunes a feasible row.
            let slack = 1e-9 * (1.0 + c.rhs.abs() + hi.abs().max(lo.abs()));
            match c.relation {
                Relation::Le => lo > c.rhs + slack,
                Relation::Ge => hi < c.rhs - slack,
            }
        })
    }
}

/// A violation candidate: gap of follower `vehicle` at step `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Disjunct {
    pub vehicle: usize,
    pub k: usize,
}

/// Followers whose gap may witness a violation: `[1, p] ∪ [p + 2, n]` for
/// safety (the gap right behind the rogue is protected), `[p, n]` for
/// performance.
pub fn allowed_vehicles(goal: AttackGoal, rogue: usize, followers: usize) -> Vec<usize> {
    match goal {
        AttackGoal::Safety => (1..=followers).filter(|&i| i != rogue + 1).collect(),
        AttackGoal::Performance => (rogue..=followers).collect(),
    }
}

/// All candidates in enumeration order: `k` ascending, then vehicle ascending.
pub fn disjuncts(attack: &AttackSpec, followers: usize) -> Vec<Disjunct> {
    let vehicles = allowed_vehicles(attack.goal, attack.rogue, followers);
    (attack.onset..=attack.window_end())
        .flat_map(|k| vehicles.iter().map(move |&vehicle| Disjunct { vehicle, k }))
        .collect()
}

fn check_disjunct(
    exprs: &GapExprs,
    attack: &AttackSpec,
    goal: AttackGoal,
    disjunct: Disjunct,
) -> Result<()> {
    let allowed = allowed_vehicles(goal, attack.rogue, exprs.followers());
    if !allowed.contains(&disjunct.vehicle) {
        return Err(Error::Argument(format!(
            "vehicle {} is not an admissible {goal} disjunct (allowed {allowed:?})",
            disjunct.vehicle
        )));
    }
    if disjunct.k < attack.onset || disjunct.k > attack.window_end() {
        return Err(Error::Argument(format!(
            "step {} outside the assertion window [{}, {}]",
            disjunct.k,
            attack.onset,
            attack.window_end()
        )));
    }
    if exprs.vars() != attack.duration || exprs.steps() <= attack.window_end() {
        return Err(Error::Inconsistent(
            "gap expressions were unrolled for a different attack".into(),
        ));
    }
    Ok(())
}

/// `e_i[k] <= d_min - eps` while the gap behind the rogue stays within
/// `[d_min, d_max]` at every window step.
pub fn build_safety_problem(
    exprs: &GapExprs,
    attack: &AttackSpec,
    disjunct: Disjunct,
) -> Result<FeasibilityProblem> {
    check_disjunct(exprs, attack, AttackGoal::Safety, disjunct)?;
    let mut problem = FeasibilityProblem::with_symmetric_bounds(attack.duration, attack.theta);
    problem.constraints.push(LinearConstraint::from_affine(
        exprs.gap(disjunct.k, disjunct.vehicle),
        Relation::Le,
        attack.d_min - attack.eps_violation,
    ));
    let protected = attack.rogue + 1;
    if protected <= exprs.followers() {
        for k in attack.onset..=attack.window_end() {
            let gap = exprs.gap(k, protected);
            problem.constraints.push(LinearConstraint::from_affine(
                gap,
                Relation::Ge,
                attack.d_min,
            ));
            problem.constraints.push(LinearConstraint::from_affine(
                gap,
                Relation::Le,
                attack.d_max,
            ));
        }
    }
    Ok(problem)
}

/// `e_i[k] >= d_max + eps`.
pub fn build_perf_problem(
    exprs: &GapExprs,
    attack: &AttackSpec,
    disjunct: Disjunct,
) -> Result<FeasibilityProblem> {
    check_disjunct(exprs, attack, AttackGoal::Performance, disjunct)?;
    let mut problem = FeasibilityProblem::with_symmetric_bounds(attack.duration, attack.theta);
    problem.constraints.push(LinearConstraint::from_affine(
        exprs.gap(disjunct.k, disjunct.vehicle),
        Relation::Ge,
        attack.d_max + attack.eps_violation,
    ));
    Ok(problem)
}

pub fn build_problem(
    exprs: &GapExprs,
    attack: &AttackSpec,
    disjunct: Disjunct,
) -> Result<FeasibilityProblem> {
    match attack.goal {
        AttackGoal::Safety => build_safety_problem(exprs, attack, disjunct),
        AttackGoal::Performance => build_perf_problem(exprs, attack, disjunct),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{AttackSurface, VehicleDynamicsSpec};
    use crate::simulator::{LeaderProfile, ScenarioSpec};
    use crate::synthesis::affine::unroll_symbolic;
    use crate::topology::{PlatoonTopology, TopologyKind};

    fn setup(goal: AttackGoal, theta: f64) -> (GapExprs, AttackSpec) {
        let sc = ScenarioSpec::new(
            VehicleDynamicsSpec::reference(20.0),
            PlatoonTopology::named(TopologyKind::Pf, 4).unwrap(),
            LeaderProfile::constant(20.0).unwrap(),
        );
        let attack = AttackSpec {
            surface: AttackSurface::ACCELERATION,
            rogue: 2,
            onset: 4,
            duration: 10,
            theta,
            goal,
            d_min: 5.0,
            d_max: 60.0,
            eps_violation: 1e-6,
        };
        (unroll_symbolic(&sc, &attack).unwrap(), attack)
    }

    #[test]
    fn admissible_vehicles() {
        assert_eq!(allowed_vehicles(AttackGoal::Safety, 2, 4), vec![1, 2, 4]);
        assert_eq!(
            allowed_vehicles(AttackGoal::Performance, 2, 4),
            vec![2, 3, 4]
        );
        assert_eq!(allowed_vehicles(AttackGoal::Safety, 4, 4), vec![1, 2, 3, 4]);
    }

    #[test]
    fn disjunct_count_and_order() {
        let (_, attack) = setup(AttackGoal::Safety, 1.0);
        let all = disjuncts(&attack, 4);
        assert_eq!(all.len(), 3 * 11);
        assert_eq!(all[0], Disjunct { vehicle: 1, k: 4 });
        assert_eq!(all[1], Disjunct { vehicle: 2, k: 4 });
        assert_eq!(all[3], Disjunct { vehicle: 1, k: 5 });
        assert_eq!(*all.last().unwrap(), Disjunct { vehicle: 4, k: 14 });
    }

    #[test]
    fn safety_problem_shape() {
        let (exprs, attack) = setup(AttackGoal::Safety, 3.0);
        let p = build_safety_problem(&exprs, &attack, Disjunct { vehicle: 4, k: 9 }).unwrap();
        p.validate().unwrap();
        assert_eq!(p.num_vars, 10);
        assert_eq!(p.constraints.len(), 1 + 2 * 11);
        assert_eq!(p.lower, vec![-3.0; 10]);
        assert_eq!(p.constraints[0].relation, Relation::Le);
        // Equilibrium gap is 20, so the violation row asks for a 15 m swing.
        assert!((p.constraints[0].rhs - (5.0 - 1e-6 - 20.0)).abs() < 1e-9);
    }

    #[test]
    fn disjunct_range_is_checked() {
        let (exprs, attack) = setup(AttackGoal::Safety, 1.0);
        assert!(matches!(
            build_safety_problem(&exprs, &attack, Disjunct { vehicle: 3, k: 5 }),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            build_safety_problem(&exprs, &attack, Disjunct { vehicle: 4, k: 3 }),
            Err(Error::Argument(_))
        ));
        let (exprs, attack) = setup(AttackGoal::Performance, 1.0);
        assert!(matches!(
            build_perf_problem(&exprs, &attack, Disjunct { vehicle: 1, k: 5 }),
            Err(Error::Argument(_))
        ));
        let p = build_perf_problem(&exprs, &attack, Disjunct { vehicle: 3, k: 14 }).unwrap();
        assert_eq!(p.constraints.len(), 1);
        assert_eq!(p.constraints[0].relation, Relation::Ge);
    }

    #[test]
    fn box_check_is_sound() {
        let mut p = FeasibilityProblem::with_symmetric_bounds(2, 1.0);
        p.constraints.push(LinearConstraint {
            coeffs: vec![1.0, 1.0],
            relation: Relation::Ge,
            rhs: 2.0,
        });
        assert!(!p.box_infeasible());
        p.constraints[0].rhs = 2.1;
        assert!(p.box_infeasible());
        p.constraints[0] = LinearConstraint {
            coeffs: vec![1.0, -1.0],
            relation: Relation::Le,
            rhs: -2.0,
        };
        assert!(!p.box_infeasible());
        assert_eq!(p.max_violation(&[-1.0, 1.0]), 0.0);
        assert!((p.max_violation(&[0.0, 1.0]) - 1.0).abs() < 1e-12);
    }
}
