//! Homogeneous third-order longitudinal vehicle model and the distributed
//! linear spacing controller.
//!
//! Continuous model per vehicle: `x' = A_c x + B_c u` with `x = [s, v, a]`,
//! `A_c = [[0,1,0],[0,0,1],[0,0,-1/tau]]` and `B_c = [0,0,1/tau]`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::topology::PlatoonTopology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Discretization {
    /// Exact zero-order hold.
    #[default]
    Zoh,
    /// Forward Euler.
    Euler,
}

impl fmt::Display for Discretization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Discretization::Zoh => "zoh",
            Discretization::Euler => "euler",
        })
    }
}

impl FromStr for Discretization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zoh" => Ok(Discretization::Zoh),
            "euler" => Ok(Discretization::Euler),
            other => Err(Error::Argument(format!(
                "unknown discretization `{other}` (expected zoh or euler)"
            ))),
        }
    }
}

/// Position, velocity and acceleration of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub s: f64,
    pub v: f64,
    pub a: f64,
}

impl VehicleState {
    pub const fn new(s: f64, v: f64, a: f64) -> Self {
        VehicleState { s, v, a }
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite() && self.v.is_finite() && self.a.is_finite()
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.s, self.v, self.a)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        VehicleState::new(v[0], v[1], v[2])
    }

    pub fn component(&self, c: usize) -> f64 {
        match c {
            0 => self.s,
            1 => self.v,
            2 => self.a,
            _ => panic!("state component {c} out of range"),
        }
    }
}

/// Which broadcast channels (position, velocity, acceleration) carry false data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AttackSurface {
    pub gamma: [bool; 3],
}

impl AttackSurface {
    pub const ACCELERATION: AttackSurface = AttackSurface {
        gamma: [false, false, true],
    };

    pub const fn new(position: bool, velocity: bool, acceleration: bool) -> Self {
        AttackSurface {
            gamma: [position, velocity, acceleration],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.iter().all(|&g| !g)
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::from_iterator(self.gamma.iter().map(|&g| if g { 1.0 } else { 0.0 }))
    }
}

/// Dynamics shared by every vehicle of a homogeneous platoon.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleDynamicsSpec {
    pub tau: f64,
    pub ts: f64,
    pub a: Matrix3<f64>,
    pub b: Vector3<f64>,
    /// Controller gain `[k1, k2, k3]`.
    pub gain: [f64; 3],
    /// Desired spacing between consecutive vehicles, vehicle length included.
    pub spacing: f64,
    pub v_init: f64,
}

impl VehicleDynamicsSpec {
    /// Builds the spec with `A`, `B` generated from `tau` and `ts`.
    pub fn new(
        tau: f64,
        ts: f64,
        gain: [f64; 3],
        spacing: f64,
        v_init: f64,
        method: Discretization,
    ) -> Result<Self> {
        let (a, b) = discretize(tau, ts, method)?;
        Self::with_matrices(tau, ts, a, b, gain, spacing, v_init)
    }

    /// Builds the spec from explicit discrete-time matrices.
    pub fn with_matrices(
        tau: f64,
        ts: f64,
        a: Matrix3<f64>,
        b: Vector3<f64>,
        gain: [f64; 3],
        spacing: f64,
        v_init: f64,
    ) -> Result<Self> {
        check_positive("tau", tau)?;
        check_positive("ts", ts)?;
        check_positive("d", spacing)?;
        if !v_init.is_finite() {
            return Err(Error::Argument("v_init must be finite".into()));
        }
        if gain.iter().any(|k| !k.is_finite()) {
            return Err(Error::Argument("controller gain must be finite".into()));
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Argument("A and B must be finite".into()));
        }
        Ok(VehicleDynamicsSpec {
            tau,
            ts,
            a,
            b,
            gain,
            spacing,
            v_init,
        })
    }

    /// Dynamics used in the reference experiments: `tau = 0.5`, `ts = 0.1`,
    /// `K = [1, 2, 1]`, `d = 20`.
    pub fn reference(v_init: f64) -> Self {
        Self::new(0.5, 0.1, [1.0, 2.0, 1.0], 20.0, v_init, Discretization::Zoh)
            .expect("reference parameters are valid")
    }

    /// `K · Γ`: the control sensitivity to one unit of false data.
    pub fn gain_on(&self, surface: &AttackSurface) -> f64 {
        self.gain
            .iter()
            .zip(surface.gamma)
            .filter(|(_, g)| *g)
            .map(|(k, _)| k)
            .sum()
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "{name} must be positive, got {value}"
        )))
    }
}

/// Continuous-time `(A_c, B_c)`.
pub fn continuous_model(tau: f64) -> (Matrix3<f64>, Vector3<f64>) {
    let a = Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0 / tau);
    let b = Vector3::new(0.0, 0.0, 1.0 / tau);
    (a, b)
}

pub fn discretize(
    tau: f64,
    ts: f64,
    method: Discretization,
) -> Result<(Matrix3<f64>, Vector3<f64>)> {
    check_positive("tau", tau)?;
    check_positive("ts", ts)?;
    match method {
        Discretization::Euler => {
            let (ac, bc) = continuous_model(tau);
            Ok((Matrix3::identity() + ac * ts, bc * ts))
        }
        Discretization::Zoh => {
            // 1 - e^{-ts/tau}, computed without cancellation for small ts/tau.
            let decay = -(-ts / tau).exp_m1();
            let a = Matrix3::new(
                1.0,
                ts,
                tau * ts - tau * tau * decay,
                0.0,
                1.0,
                tau * decay,
                0.0,
                0.0,
                1.0 - decay,
            );
            let b = Vector3::new(
                ts * ts / 2.0 - tau * ts + tau * tau * decay,
                ts - tau * decay,
                decay,
            );
            Ok((a, b))
        }
    }
}

/// Adds `delta` to every flagged channel of `x`.
pub fn apply_attack(x: &VehicleState, surface: &AttackSurface, delta: f64) -> VehicleState {
    let [ps, pv, pa] = surface.gamma;
    VehicleState {
        s: if ps { x.s + delta } else { x.s },
        v: if pv { x.v + delta } else { x.v },
        a: if pa { x.a + delta } else { x.a },
    }
}

/// Spacing-error term of vehicle `i` against neighbor `j` whose reported
/// state is `xj`. The desired offset is signed, `-(i - j) * d`, so the term
/// vanishes when the platoon sits at its equilibrium spacing.
fn spacing_term(
    i: usize,
    xi: &VehicleState,
    j: usize,
    xj: &VehicleState,
    spec: &VehicleDynamicsSpec,
) -> f64 {
    let [k1, k2, k3] = spec.gain;
    let offset = (i as f64 - j as f64) * spec.spacing;
    k1 * (xi.s - xj.s + offset) + k2 * (xi.v - xj.v) + k3 * (xi.a - xj.a)
}

/// Control input of follower `i` given the step's true states and any
/// falsified neighbor broadcasts.
///
/// `u_i = -Σ_{j ∈ N_i} K (x_i - x̃_j - [-(i-j)d, 0, 0])`, where `x̃_j` is the
/// falsified broadcast of `j` when present and its true state otherwise.
pub fn control_input(
    i: usize,
    states: &[VehicleState],
    topology: &PlatoonTopology,
    spec: &VehicleDynamicsSpec,
    falsified: &BTreeMap<usize, VehicleState>,
) -> Result<f64> {
    if i == 0 {
        return Err(Error::Argument("the leader has no control law".into()));
    }
    let neighbors = topology.neighbors(i)?;
    if let Some(&j) = falsified.keys().find(|j| !neighbors.contains(j)) {
        return Err(Error::Inconsistent(format!(
            "falsified state supplied for vehicle {j}, which is not a neighbor of {i}"
        )));
    }
    let xi = states
        .get(i)
        .ok_or_else(|| Error::Inconsistent(format!("missing state for vehicle {i}")))?;
    let mut u = 0.0;
    for j in neighbors {
        let xj = match falsified.get(&j) {
            Some(x) => x,
            None => states.get(j).ok_or_else(|| {
                Error::Inconsistent(format!("missing state for neighbor {j} of vehicle {i}"))
            })?,
        };
        u -= spacing_term(i, xi, j, xj, spec);
    }
    Ok(u)
}

/// One discrete update `A x + B u`.
pub fn step(x: &VehicleState, u: f64, spec: &VehicleDynamicsSpec) -> Result<VehicleState> {
    let next = spec.a * x.to_vector() + spec.b * u;
    let next = VehicleState::from_vector(&next);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFinite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix4;
    use proptest::prelude::*;

    use crate::topology::TopologyKind;

    /// Truncated Taylor series of the matrix exponential of the augmented
    /// system `[[A_c ts, B_c ts], [0, 0]]`.
    fn series_oracle(tau: f64, ts: f64, terms: usize) -> (Matrix3<f64>, Vector3<f64>) {
        let (ac, bc) = continuous_model(tau);
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(ac * ts));
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&(bc * ts));
        let mut sum = Matrix4::identity();
        let mut term = Matrix4::identity();
        for k in 1..terms {
            term = term * m / k as f64;
            sum += term;
        }
        (
            sum.fixed_view::<3, 3>(0, 0).into_owned(),
            sum.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }

    fn pf_spec() -> VehicleDynamicsSpec {
        VehicleDynamicsSpec::new(0.5, 0.1, [1.0, 2.0, 1.0], 20.0, 10.0, Discretization::Zoh)
            .unwrap()
    }

    #[test]
    fn euler_matrices() {
        let (a, b) = discretize(0.5, 0.1, Discretization::Euler).unwrap();
        let want_a = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.1, 0.0, 0.0, 0.8);
        assert!((a - want_a).amax() < 1e-15);
        assert!((b - Vector3::new(0.0, 0.0, 0.2)).amax() < 1e-15);
    }

    #[test]
    fn zoh_matches_series_oracle() {
        let (a, b) = discretize(0.5, 0.1, Discretization::Zoh).unwrap();
        let (oa, ob) = series_oracle(0.5, 0.1, 20);
        assert!((a[(2, 2)] - 0.818_730_753_077_981_8).abs() < 1e-12);
        assert!((b[2] - 0.181_269_246_922_018_2).abs() < 1e-12);
        for (x, y) in a.iter().zip(oa.iter()).chain(b.iter().zip(ob.iter())) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn discretize_rejects_non_positive() {
        assert!(matches!(
            discretize(0.0, 0.1, Discretization::Zoh),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            discretize(0.5, -0.1, Discretization::Euler),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn control_examples() {
        let spec = pf_spec();
        let topo = PlatoonTopology::named(TopologyKind::Pf, 1).unwrap();
        let none = BTreeMap::new();
        let eq = [
            VehicleState::new(40.0, 10.0, 0.0),
            VehicleState::new(20.0, 10.0, 0.0),
        ];
        assert_eq!(control_input(1, &eq, &topo, &spec, &none).unwrap(), 0.0);

        let fast = [eq[0], VehicleState::new(20.0, 12.0, 0.0)];
        assert_eq!(control_input(1, &fast, &topo, &spec, &none).unwrap(), -4.0);

        let forged = apply_attack(&eq[0], &AttackSurface::ACCELERATION, 5.0);
        let falsified = BTreeMap::from([(0, forged)]);
        assert_eq!(
            control_input(1, &eq, &topo, &spec, &falsified).unwrap(),
            5.0
        );
    }

    #[test]
    fn control_errors() {
        let spec = pf_spec();
        let topo = PlatoonTopology::named(TopologyKind::Pf, 2).unwrap();
        let none = BTreeMap::new();
        let short = [VehicleState::default(); 2];
        assert!(matches!(
            control_input(2, &short, &topo, &spec, &none),
            Err(Error::Inconsistent(_))
        ));
        let states = [VehicleState::default(); 3];
        let stranger = BTreeMap::from([(0, VehicleState::default())]);
        assert!(matches!(
            control_input(2, &states, &topo, &spec, &stranger),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn attack_examples() {
        let x = VehicleState::new(20.0, 10.0, 0.0);
        let acc = AttackSurface::ACCELERATION;
        assert_eq!(apply_attack(&x, &acc, 0.0), x);
        assert_eq!(
            apply_attack(&x, &acc, 5.0),
            VehicleState::new(20.0, 10.0, 5.0)
        );
        let all = AttackSurface::new(true, true, true);
        assert_eq!(
            apply_attack(&x, &all, -2.0),
            VehicleState::new(18.0, 8.0, -2.0)
        );
    }

    #[test]
    fn step_examples() {
        let spec =
            VehicleDynamicsSpec::new(0.5, 0.1, [1.0, 2.0, 1.0], 20.0, 10.0, Discretization::Euler)
                .unwrap();
        let close = |x: VehicleState, want: [f64; 3]| {
            assert!((x.s - want[0]).abs() < 1e-12, "{x:?}");
            assert!((x.v - want[1]).abs() < 1e-12, "{x:?}");
            assert!((x.a - want[2]).abs() < 1e-12, "{x:?}");
        };
        close(
            step(&VehicleState::new(0.0, 10.0, 0.0), 0.0, &spec).unwrap(),
            [1.0, 10.0, 0.0],
        );
        close(
            step(&VehicleState::new(0.0, 10.0, 0.0), 1.0, &spec).unwrap(),
            [1.0, 10.0, 0.2],
        );
        close(
            step(&VehicleState::new(0.0, 0.0, 1.0), 0.0, &spec).unwrap(),
            [0.0, 0.1, 0.8],
        );
        assert!(matches!(
            step(&VehicleState::new(f64::MAX, f64::MAX, 0.0), 0.0, &spec),
            Err(Error::NonFinite)
        ));
    }

    proptest! {
        #[test]
        fn equilibrium_is_a_fixed_point(
            n in 1usize..=10,
            k in 0usize..4,
            gain in proptest::array::uniform3(0.01f64..10.0),
            quarters in 1u32..400,
            v in -30.0f64..60.0,
        ) {
            let d = f64::from(quarters) * 0.25;
            let spec = VehicleDynamicsSpec::new(0.5, 0.1, gain, d, v, Discretization::Zoh).unwrap();
            let topo = PlatoonTopology::named(TopologyKind::NAMED[k], n).unwrap();
            let states: Vec<_> = (0..=n)
                .map(|i| VehicleState::new((n - i + 1) as f64 * d, v, 0.0))
                .collect();
            for i in 1..=n {
                let u = control_input(i, &states, &topo, &spec, &BTreeMap::new()).unwrap();
                prop_assert_eq!(u, 0.0);
            }
        }

        #[test]
        fn injection_is_invertible(
            s in -1e4f64..1e4, v in -100.0f64..100.0, a in -50.0f64..50.0,
            bits in 1u8..8, delta in -100.0f64..100.0,
        ) {
            let surface = AttackSurface::new(bits & 1 != 0, bits & 2 != 0, bits & 4 != 0);
            // Dyadic rationals keep the round trip exact.
            let q = |x: f64| (x * 64.0).round() / 64.0;
            let x = VehicleState::new(q(s), q(v), q(a));
            let delta = q(delta);
            let back = apply_attack(&apply_attack(&x, &surface, delta), &surface, -delta);
            prop_assert_eq!(back, x);
        }

        #[test]
        fn control_is_affine_in_falsified_state(
            k in 0usize..4,
            bits in 1u8..8,
            delta in -100.0f64..100.0,
            jitter in proptest::collection::vec(-5.0f64..5.0, 15),
        ) {
            let spec = VehicleDynamicsSpec::reference(20.0);
            let topo = PlatoonTopology::named(TopologyKind::NAMED[k], 4).unwrap();
            let surface = AttackSurface::new(bits & 1 != 0, bits & 2 != 0, bits & 4 != 0);
            let states: Vec<_> = (0..5)
                .map(|i| VehicleState::new(
                    (5 - i) as f64 * 20.0 + jitter[3 * i],
                    20.0 + jitter[3 * i + 1],
                    jitter[3 * i + 2],
                ))
                .collect();
            for i in 1..=4 {
                for j in topo.neighbors(i).unwrap() {
                    let base = BTreeMap::from([(j, states[j])]);
                    let shifted = BTreeMap::from([(j, apply_attack(&states[j], &surface, delta))]);
                    let u0 = control_input(i, &states, &topo, &spec, &base).unwrap();
                    let u1 = control_input(i, &states, &topo, &spec, &shifted).unwrap();
                    let expected = spec.gain_on(&surface) * delta;
                    prop_assert!((u1 - u0 - expected).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn zoh_semigroup(t1 in 0.001f64..1.0, t2 in 0.001f64..1.0, tau in 0.05f64..5.0) {
            let (a1, _) = discretize(tau, t1, Discretization::Zoh).unwrap();
            let (a2, _) = discretize(tau, t2, Discretization::Zoh).unwrap();
            let (a12, _) = discretize(tau, t1 + t2, Discretization::Zoh).unwrap();
            prop_assert!((a1 * a2 - a12).amax() < 1e-10);
        }
    }
}
