//! Symbolic unrolling of the attacked closed loop.
//!
//! With the false-data samples `delta[0..T]` left free, every state of the
//! platoon is an affine function of `delta`. The unrolling below tracks those
//! functions exactly, step by step, mirroring the concrete update.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::dynamics::VehicleDynamicsSpec;
use crate::error::Result;
use crate::simulator::{initial_states, leader_step, AttackSpec, ScenarioSpec};

/// `constant + Σ_t coeffs[t] * delta[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    pub constant: f64,
    pub coeffs: Vec<f64>,
}

impl AffineExpr {
    pub fn constant(value: f64, vars: usize) -> Self {
        AffineExpr {
            constant: value,
            coeffs: vec![0.0; vars],
        }
    }

    pub fn vars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, delta: &[f64]) -> f64 {
        debug_assert_eq!(delta.len(), self.coeffs.len());
        self.constant
            + self
                .coeffs
                .iter()
                .zip(delta)
                .map(|(c, d)| c * d)
                .sum::<f64>()
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, scale: f64, other: &AffineExpr) {
        if scale == 0.0 {
            return;
        }
        self.constant += scale * other.constant;
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += scale * o;
        }
    }

    pub fn depends_on(&self, t: usize) -> bool {
        self.coeffs[t] != 0.0
    }

    /// Sum of `|coeff|`, i.e. the largest swing reachable with `|delta| <= 1`.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }
}

impl Add<&AffineExpr> for &AffineExpr {
    type Output = AffineExpr;

    fn add(self, rhs: &AffineExpr) -> AffineExpr {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&AffineExpr> for AffineExpr {
    fn add_assign(&mut self, rhs: &AffineExpr) {
        self.add_scaled(1.0, rhs);
    }
}

impl Sub<&AffineExpr> for &AffineExpr {
    type Output = AffineExpr;

    fn sub(self, rhs: &AffineExpr) -> AffineExpr {
        let mut out = self.clone();
        out.add_scaled(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &AffineExpr {
    type Output = AffineExpr;

    fn mul(self, rhs: f64) -> AffineExpr {
        AffineExpr {
            constant: self.constant * rhs,
            coeffs: self.coeffs.iter().map(|c| c * rhs).collect(),
        }
    }
}

impl Neg for &AffineExpr {
    type Output = AffineExpr;

    fn neg(self) -> AffineExpr {
        self * -1.0
    }
}

type SymbolicState = [AffineExpr; 3];

/// Gap expressions `e_i[k]` for `k in 0..=onset + duration`.
#[derive(Debug, Clone)]
pub struct GapExprs {
    /// `gaps[k][i - 1]` is the gap of follower `i` at step `k`.
    gaps: Vec<Vec<AffineExpr>>,
    followers: usize,
    vars: usize,
}

impl GapExprs {
    pub fn gap(&self, k: usize, i: usize) -> &AffineExpr {
        assert!(i >= 1 && i <= self.followers, "follower {i} out of range");
        &self.gaps[k][i - 1]
    }

    pub fn steps(&self) -> usize {
        self.gaps.len()
    }

    pub fn followers(&self) -> usize {
        self.followers
    }

    pub fn vars(&self) -> usize {
        self.vars
    }
}

fn sym_matvec(m: &nalgebra::Matrix3<f64>, x: &SymbolicState, vars: usize) -> SymbolicState {
    std::array::from_fn(|r| {
        let mut acc = AffineExpr::constant(0.0, vars);
        for (c, xc) in x.iter().enumerate() {
            acc.add_scaled(m[(r, c)], xc);
        }
        acc
    })
}

/// Control of follower `i` as an affine function of the false data.
fn symbolic_control(
    i: usize,
    states: &[SymbolicState],
    neighbors: &[usize],
    spec: &VehicleDynamicsSpec,
    injected: Option<(usize, usize)>,
    attack: &AttackSpec,
    vars: usize,
) -> AffineExpr {
    let gain = spec.gain;
    let mut u = AffineExpr::constant(0.0, vars);
    for &j in neighbors {
        for c in 0..3 {
            let diff = &states[i][c] - &states[j][c];
            u.add_scaled(-gain[c], &diff);
        }
        u.constant -= gain[0] * (i as f64 - j as f64) * spec.spacing;
        if let Some((rogue, t)) = injected {
            if j == rogue {
                // x_j is replaced by x_j + Γ delta[t] in the broadcast.
                u.coeffs[t] += spec.gain_on(&attack.surface);
            }
        }
    }
    u
}

/// Unrolls the attacked closed loop over the assertion window and returns
/// every follower gap as an affine function of the false data.
pub fn unroll_symbolic(scenario: &ScenarioSpec, attack: &AttackSpec) -> Result<GapExprs> {
    let n = scenario.followers();
    attack.validate(n)?;
    let vars = attack.duration;
    let spec = &scenario.dynamics;
    let topology = &scenario.topology;
    let neighbors: Vec<Vec<usize>> = (0..=n)
        .map(|i| topology.neighbors(i))
        .collect::<Result<_>>()?;
    let lift = |x: f64| AffineExpr::constant(x, vars);

    let mut states: Vec<SymbolicState> = initial_states(n, spec)
        .into_iter()
        .map(|x| [lift(x.s), lift(x.v), lift(x.a)])
        .collect();

    let last = attack.window_end();
    let mut gaps = Vec::with_capacity(last + 1);
    for k in 0..=last {
        gaps.push(
            (1..=n)
                .map(|i| &states[i - 1][0] - &states[i][0])
                .collect::<Vec<_>>(),
        );
        if k == last {
            break;
        }

        let injected = attack
            .is_active(k)
            .then(|| (attack.rogue, k - attack.onset));
        let mut next = Vec::with_capacity(n + 1);

        // The leader follows its profile and never sees false data.
        let lead = &states[0];
        let lead = leader_step(
            lead[0].constant,
            lead[1].constant,
            scenario.leader.velocity_at(k + 1),
            spec.ts,
        );
        next.push([lift(lead.s), lift(lead.v), lift(lead.a)]);

        for i in 1..=n {
            let u = symbolic_control(i, &states, &neighbors[i], spec, injected, attack, vars);
            let mut x = sym_matvec(&spec.a, &states[i], vars);
            for (c, xc) in x.iter_mut().enumerate() {
                xc.add_scaled(spec.b[c], &u);
            }
            next.push(x);
        }
        states = next;
    }

    Ok(GapExprs {
        gaps,
        followers: n,
        vars,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::AttackSurface;
    use crate::simulator::{simulate, AttackGoal, AttackVector, Injection, LeaderProfile};
    use crate::topology::{PlatoonTopology, TopologyKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn attack(rogue: usize, onset: usize, duration: usize, theta: f64) -> AttackSpec {
        AttackSpec {
            surface: AttackSurface::ACCELERATION,
            rogue,
            onset,
            duration,
            theta,
            goal: AttackGoal::Safety,
            d_min: 5.0,
            d_max: 60.0,
            eps_violation: 1e-6,
        }
    }

    fn scenario(kind: TopologyKind, n: usize, profile: Vec<f64>) -> ScenarioSpec {
        ScenarioSpec::new(
            VehicleDynamicsSpec::reference(20.0),
            PlatoonTopology::named(kind, n).unwrap(),
            LeaderProfile::new(profile).unwrap(),
        )
    }

    #[test]
    fn affine_arithmetic() {
        let a = AffineExpr {
            constant: 1.0,
            coeffs: vec![1.0, -2.0],
        };
        let b = AffineExpr {
            constant: 0.5,
            coeffs: vec![0.0, 3.0],
        };
        assert_eq!((&a + &b).eval(&[1.0, 1.0]), 3.5);
        assert_eq!((&a - &b).eval(&[2.0, 0.0]), 2.5);
        assert_eq!((&a * 2.0).coeffs, vec![2.0, -4.0]);
        assert_eq!((-&a).constant, -1.0);
        assert_eq!(a.l1_norm(), 3.0);
    }

    #[test]
    fn causality() {
        for kind in TopologyKind::NAMED {
            let sc = scenario(kind, 4, vec![20.0]);
            let atk = attack(2, 7, 12, 10.0);
            let exprs = unroll_symbolic(&sc, &atk).unwrap();
            for k in 0..exprs.steps() {
                for i in 1..=4 {
                    let e = exprs.gap(k, i);
                    for t in 0..atk.duration {
                        if k <= atk.onset + t {
                            assert!(!e.depends_on(t), "{kind} e_{i}[{k}] depends on delta[{t}]");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_delta_gives_the_clean_trace() {
        let profile: Vec<f64> = (0..80)
            .map(|k| 20.0 + (k as f64 * 0.2).sin() * 3.0)
            .collect();
        for kind in TopologyKind::NAMED {
            let sc = scenario(kind, 4, profile.clone());
            let atk = attack(2, 5, 30, 10.0);
            let exprs = unroll_symbolic(&sc, &atk).unwrap();
            let clean = simulate(&sc, None, atk.window_end()).unwrap();
            let zero = vec![0.0; atk.duration];
            for k in 0..exprs.steps() {
                for i in 1..=4 {
                    let e = exprs.gap(k, i);
                    assert!((e.constant - clean.gap(k, i).unwrap()).abs() < 1e-9);
                    assert_eq!(e.eval(&zero), e.constant);
                }
            }
        }
    }

    #[test]
    fn random_delta_matches_concrete_simulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in TopologyKind::NAMED {
            for rogue in 1..=4 {
                let sc = scenario(kind, 4, vec![20.0, 22.0, 24.0, 24.0, 23.0]);
                let mut atk = attack(rogue, 3, 25, 50.0);
                atk.surface = AttackSurface::new(rng.gen(), rng.gen(), true);
                let exprs = unroll_symbolic(&sc, &atk).unwrap();
                let delta: Vec<f64> = (0..25).map(|_| rng.gen_range(-50.0..=50.0)).collect();
                let v = AttackVector::new(delta.clone());
                let trace = simulate(
                    &sc,
                    Some(Injection {
                        attack: &atk,
                        vector: &v,
                    }),
                    atk.window_end(),
                )
                .unwrap();
                for k in 0..exprs.steps() {
                    for i in 1..=4 {
                        let got = exprs.gap(k, i).eval(&delta);
                        let want = trace.gap(k, i).unwrap();
                        assert!(
                            (got - want).abs() < 1e-8,
                            "{kind} p={rogue} e_{i}[{k}]: {got} vs {want}"
                        );
                    }
                }
            }
        }
    }
}
