//! Cross-checking the exact solution of a PID loop on a second-order lag
//! against an independent RK4 integration of the delay equation.

use pidelay::closed_loop::poly_mul;
use pidelay::oracle::DEFAULT_STEP;
use pidelay::prelude::*;

pub struct Outcome {
    pub max_deviation: f64,
    pub junction_gap: f64,
}

pub fn run_example() -> Result<Outcome> {
    let plant = PlantModel::new(vec![1.0], poly_mul(&[1.0, 1.5], &[1.0, 0.4]))?;
    let pid = PidParams::new(0.6, 0.25, 0.15)?;
    let system = build_closed_loop(&pid, &plant)?;
    let forcing = ForcingTerm::steps(0.0, &[(0.5, 1.0)])?;
    let init = InitialCondition::steady(0.0);
    let sol = solve(&system, &init, &forcing, 10)?;
    let trajectory = integrate(&system, &init, &forcing, 10, DEFAULT_STEP)?;
    let outcome = Outcome {
        max_deviation: trajectory.max_deviation(&sol, 10.0),
        junction_gap: sol.check_continuity()?,
    };
    println!("samples compared: {}", trajectory.times().len());
    println!("max |exact - rk4| on [0, 10]: {:.3e}", outcome.max_deviation);
    println!("largest junction gap:         {:.3e}", outcome.junction_gap);
    Ok(outcome)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
