//! Integral control of a first-order lag with unit delay: the loop rests at 1
//! and the setpoint drops to 0 at t = 0. On the second interval the exact
//! response is `1.5 - 0.5 t - 0.5 e^{-t}` in local time.

use pidelay::prelude::*;

pub fn run_example() -> Result<PiecewiseSolution> {
    let system = build_closed_loop(&PidParams::new(0.0, 0.5, 0.0)?, &PlantModel::first_order(1.0, 1.0)?)?;
    let forcing = ForcingTerm::steps(1.0, &[(0.0, 0.0)])?;
    let sol = solve(&system, &InitialCondition::steady(1.0), &forcing, 4)?;
    for n in 1..=4 {
        println!("interval {n}: y = {}", sol.segment(n, 1).expect("solved"));
    }
    for t in [0.5, 1.5, 2.5, 3.5] {
        println!("y({t}) = {:.15}", sol.value(t).expect("in range"));
    }
    Ok(sol)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
