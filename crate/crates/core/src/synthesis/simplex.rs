//! Dense two-phase primal simplex with bounded variables.
//!
//! Variables are shifted to `y = x - lower` so every structural column lives
//! in `[0, upper - lower]`; nonbasic columns sit at either bound. Each row
//! gets a slack, rows whose slack cannot start basic get an artificial.
//! Phase one drives the artificials to zero, phase two (optional) minimizes
//! a linear objective. Dantzig pricing, switching to Bland's rule after a
//! run of degenerate pivots so the method always terminates.

use nalgebra::{DMatrix, DVector};

use super::problem::{FeasibilityProblem, Relation};

const PIVOT_TOL: f64 = 1e-11;
const OPT_TOL: f64 = 1e-10;
const DEGENERATE_STREAK: usize = 50;
const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        objective: f64,
    },
    Infeasible,
    Unbounded,
    /// Only reachable if the anti-cycling rule is broken.
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `B^-1 [A | S | R]`, row-major.
    t: Vec<f64>,
    /// Row-scaled original system, for the final basis solve.
    orig: Vec<f64>,
    orig_rhs: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    value: Vec<f64>,
    upper: Vec<f64>,
    iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn at(&self, r: usize, j: usize) -> f64 {
        self.t[r * self.cols + j]
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.cols..(r + 1) * self.cols];
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, j: usize, d: &mut [f64]) {
        let cols = self.cols;
        let piv = self.at(r, j);
        let (before, rest) = self.t.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        for a in prow.iter_mut() {
            *a /= piv;
        }
        prow[j] = 1.0;
        for row in before.chunks_mut(cols).chain(after.chunks_mut(cols)) {
            let f = row[j];
            if f != 0.0 {
                for (a, p) in row.iter_mut().zip(prow.iter()) {
                    *a -= f * p;
                }
                row[j] = 0.0;
            }
        }
        let f = d[j];
        if f != 0.0 {
            for (dj, p) in d.iter_mut().zip(prow.iter()) {
                *dj -= f * p;
            }
            d[j] = 0.0;
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn run_phase(&mut self, cost: &[f64]) -> PhaseEnd {
        let mut d = self.reduced_costs(cost);
        let mut streak = 0usize;
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return PhaseEnd::IterationLimit;
            }
            self.iterations += 1;
            let bland = streak > DEGENERATE_STREAK;

            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.cols {
                let score = match self.status[j] {
                    Status::AtLower if d[j] < -OPT_TOL && self.upper[j] > 0.0 => -d[j],
                    Status::AtUpper if d[j] > OPT_TOL => d[j],
                    _ => continue,
                };
                if bland {
                    entering = Some((j, score));
                    break;
                }
                if entering.is_none_or(|(_, best)| score > best) {
                    entering = Some((j, score));
                }
            }
            let Some((j, _)) = entering else {
                return PhaseEnd::Optimal;
            };
            let dir = if self.status[j] == Status::AtLower {
                1.0
            } else {
                -1.0
            };

            // Ratio test: the entering column may also just flip bounds.
            let mut step = self.upper[j];
            let mut leaving: Option<(usize, Status, f64)> = None;
            for r in 0..self.rows {
                let alpha = self.at(r, j) * dir;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[r];
                let (t, to) = if alpha > 0.0 {
                    (self.value[b] / alpha, Status::AtLower)
                } else if self.upper[b].is_finite() {
                    ((self.upper[b] - self.value[b]) / -alpha, Status::AtUpper)
                } else {
                    continue;
                };
                let t = t.max(0.0);
                let better = match leaving {
                    _ if t < step - 1e-12 => true,
                    Some((lr, _, la)) if t <= step + 1e-12 => {
                        if bland {
                            b < self.basis[lr]
                        } else {
                            alpha.abs() > la.abs()
                        }
                    }
                    None if t <= step + 1e-12 && step.is_finite() => {
                        // Prefer a real pivot over a bound flip on ties.
                        true
                    }
                    _ => false,
                };
                if better {
                    step = t;
                    leaving = Some((r, to, alpha));
                }
            }
            if leaving.is_none() && !step.is_finite() {
                return PhaseEnd::Unbounded;
            }

            streak = if step < 1e-12 { streak + 1 } else { 0 };
            for r in 0..self.rows {
                let b = self.basis[r];
                self.value[b] -= self.at(r, j) * dir * step;
            }
            self.value[j] += dir * step;

            match leaving {
                None => {
                    self.status[j] = if dir > 0.0 {
                        Status::AtUpper
                    } else {
                        Status::AtLower
                    };
                    self.value[j] = if dir > 0.0 { self.upper[j] } else { 0.0 };
                }
                Some((r, to, _)) => {
                    let b = self.basis[r];
                    self.status[b] = to;
                    self.value[b] = if to == Status::AtUpper {
                        self.upper[b]
                    } else {
                        0.0
                    };
                    self.basis[r] = j;
                    self.status[j] = Status::Basic;
                    self.pivot(r, j, &mut d);
                }
            }
        }
    }

    /// Recomputes basic values from the original rows to shed accumulated
    /// tableau round-off.
    fn refine(&mut self) {
        let m = self.rows;
        if m == 0 {
            return;
        }
        let mut rhs = DVector::from_column_slice(&self.orig_rhs);
        for j in 0..self.cols {
            if self.status[j] != Status::Basic && self.value[j] != 0.0 {
                for r in 0..m {
                    rhs[r] -= self.orig[r * self.cols + j] * self.value[j];
                }
            }
        }
        let basis_matrix = DMatrix::from_fn(m, m, |r, c| self.orig[r * self.cols + self.basis[c]]);
        if let Some(xb) = basis_matrix.lu().solve(&rhs) {
            if xb.iter().all(|v| v.is_finite()) {
                for (c, &b) in self.basis.iter().enumerate() {
                    self.value[b] = xb[c];
                }
            }
        }
    }
}

/// Solves `min objective · x` over the problem's polytope, or just finds a
/// feasible vertex when `objective` is `None`.
pub fn solve(problem: &FeasibilityProblem, objective: Option<&[f64]>) -> LpOutcome {
    let nv = problem.num_vars;
    let width: Vec<f64> = problem
        .lower
        .iter()
        .zip(&problem.upper)
        .map(|(l, u)| u - l)
        .collect();

    // Shift, scale, and drop rows without variables.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in &problem.constraints {
        let shifted = c.rhs - c.lhs(&problem.lower);
        let scale = c.coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if scale == 0.0 {
            let tol = 1e-9 * (1.0 + c.rhs.abs());
            let ok = match c.relation {
                Relation::Le => shifted >= -tol,
                Relation::Ge => shifted <= tol,
            };
            if !ok {
                return LpOutcome::Infeasible;
            }
            continue;
        }
        rows.push((
            c.coeffs.iter().map(|a| a / scale).collect(),
            c.relation,
            shifted / scale,
        ));
    }

    let m = rows.len();
    let needs_artificial: Vec<bool> = rows
        .iter()
        .map(|(_, rel, b)| match rel {
            Relation::Le => *b < 0.0,
            Relation::Ge => *b > 0.0,
        })
        .collect();
    let n_art = needs_artificial.iter().filter(|&&a| a).count();
    let cols = nv + m + n_art;

    let mut orig = vec![0.0; m * cols];
    let mut t = vec![0.0; m * cols];
    let mut basis = Vec::with_capacity(m);
    let mut status = vec![Status::AtLower; cols];
    let mut value = vec![0.0; cols];
    let mut upper = vec![f64::INFINITY; cols];
    upper[..nv].copy_from_slice(&width);
    let mut orig_rhs = Vec::with_capacity(m);

    let mut art = nv + m;
    for (r, ((coeffs, rel, b), needs)) in rows.iter().zip(&needs_artificial).enumerate() {
        let row = &mut orig[r * cols..(r + 1) * cols];
        row[..nv].copy_from_slice(coeffs);
        row[nv + r] = if *rel == Relation::Le { 1.0 } else { -1.0 };
        let basic = if *needs {
            row[art] = b.signum();
            art += 1;
            art - 1
        } else {
            nv + r
        };
        let sign = row[basic];
        for (dst, src) in t[r * cols..(r + 1) * cols].iter_mut().zip(row.iter()) {
            *dst = src * sign;
        }
        basis.push(basic);
        status[basic] = Status::Basic;
        value[basic] = b * sign;
        orig_rhs.push(*b);
    }

    let mut tab = Tableau {
        rows: m,
        cols,
        t,
        orig,
        orig_rhs,
        basis,
        status,
        value,
        upper,
        iterations: 0,
    };

    if n_art > 0 {
        let mut cost = vec![0.0; cols];
        cost[nv + m..].iter_mut().for_each(|c| *c = 1.0);
        match tab.run_phase(&cost) {
            PhaseEnd::Optimal => {}
            PhaseEnd::IterationLimit => return LpOutcome::IterationLimit,
            // The phase-one objective is bounded below by zero.
            PhaseEnd::Unbounded => unreachable!("phase one cannot be unbounded"),
        }
        tab.refine();
        let residual: f64 = tab.value[nv + m..].iter().map(|v| v.abs()).sum();
        let scale = 1.0 + tab.orig_rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if residual > 1e-9 * scale {
            return LpOutcome::Infeasible;
        }
        for j in nv + m..cols {
            tab.upper[j] = 0.0;
        }
    }

    if let Some(c) = objective {
        let mut cost = vec![0.0; cols];
        cost[..nv].copy_from_slice(c);
        match tab.run_phase(&cost) {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => return LpOutcome::Unbounded,
            PhaseEnd::IterationLimit => return LpOutcome::IterationLimit,
        }
    }
    tab.refine();

    let x: Vec<f64> = (0..nv)
        .map(|t| (problem.lower[t] + tab.value[t]).clamp(problem.lower[t], problem.upper[t]))
        .collect();
    let objective = objective.map_or(0.0, |c| c.iter().zip(&x).map(|(a, b)| a * b).sum());
    LpOutcome::Optimal { x, objective }
}
