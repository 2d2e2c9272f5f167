//! A history made of two exponential pieces and a setpoint schedule with
//! steps between integer times. Every interval is split at the union of the
//! history and setpoint breakpoints, and the pieces join smoothly.

use pidelay::prelude::*;

pub fn run_example() -> Result<PiecewiseSolution> {
    let system = build_closed_loop(&PidParams::new(0.4, 0.3, 0.0)?, &PlantModel::first_order(1.0, 0.5)?)?;
    // history in global time on [-1, 0]: flat at 0.2, then a small bump
    // 0.1 (t + 0.4) e^{-2 (t + 0.4)} from t = -0.4
    let w = (-0.8f64).exp();
    let history = InitialCondition::from_global(
        vec![0.0, 0.6, 1.0],
        vec![
            ExpPoly::constant(0.2),
            ExpPoly::from_terms([(0.0, vec![0.2]), (-2.0, vec![0.04 * w, 0.1 * w])]),
        ],
    )?;
    let forcing = ForcingTerm::steps(0.2, &[(0.25, 1.0), (2.75, 0.5)])?;
    let sol = solve(&system, &history, &forcing, 6)?;
    println!("breakpoints inside each interval: {:?}", sol.knots());
    println!("largest junction gap: {:.2e}", sol.check_continuity()?);
    for t in [0.25, 1.0, 2.75, 4.0, 6.0] {
        println!("y({t}) = {:.12}", sol.value(t).expect("in range"));
    }
    Ok(sol)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
