//! Compares the exact zero-order-hold model with forward Euler and shows a
//! single vehicle's response to a constant acceleration command.
//!
//! ```text
//! cargo run --example discretization
//! ```

use platoon_fdi::dynamics::{self, discretize};
use platoon_fdi::{Discretization, Result, VehicleDynamicsSpec, VehicleState};

pub struct Comparison {
    /// Largest entry-wise difference between the two `A` matrices.
    pub a_gap: f64,
    /// Acceleration after 2 s of `u = 1` under each method.
    pub zoh_accel: f64,
    pub euler_accel: f64,
}

pub fn run_example() -> Result<Comparison> {
    let (tau, ts) = (0.5, 0.1);
    let (a_zoh, b_zoh) = discretize(tau, ts, Discretization::Zoh)?;
    let (a_eul, b_eul) = discretize(tau, ts, Discretization::Euler)?;
    println!("ZOH A = {a_zoh}B = {b_zoh}");
    println!("Euler A = {a_eul}B = {b_eul}");

    let mut accel = Vec::new();
    for method in [Discretization::Zoh, Discretization::Euler] {
        let spec = VehicleDynamicsSpec::new(tau, ts, [1.0, 2.0, 1.0], 20.0, 0.0, method)?;
        let mut x = VehicleState::new(0.0, 0.0, 0.0);
        for _ in 0..20 {
            x = dynamics::step(&x, 1.0, &spec)?;
        }
        println!("{method}: after 2 s s={:.4} v={:.4} a={:.6}", x.s, x.v, x.a);
        accel.push(x.a);
    }
    let exact = 1.0 - (-2.0f64 / tau).exp();
    println!("continuous-time acceleration at 2 s: {exact:.6}");

    Ok(Comparison {
        a_gap: (a_zoh - a_eul).abs().max(),
        zoh_accel: accel[0],
        euler_accel: accel[1],
    })
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
